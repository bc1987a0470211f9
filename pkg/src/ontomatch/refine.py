"""Mapping refinement: locality-based extension and coherence repair.

Extension walks outward from accepted mappings one hierarchy hop at a time
(parents with parents, children with children), scoring each previously
unseen pair and keeping the confident ones, until a sweep adds nothing.

Repair encodes both hierarchies, assumed sibling disjointness, and the
candidate mappings as propositional implications; a class is unsatisfiable
when asserting it derives a contradiction by unit propagation.  Mappings
implicated in such derivations are removed greedily, lowest score first,
until only conflicts with no mapping involvement remain.  This is an
approximation: it removes few mappings and keeps high-confidence ones, but
does not guarantee a minimal diagnosis.
"""

from __future__ import annotations

import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ontomatch.errors import ScorerProtocolError, ScorerTransportError, UndefinedScoreError
from ontomatch.ontology import MappingSet, Ontology, ScoredMapping
from ontomatch.scoring import MappingScorer

log = logging.getLogger(__name__)

DEFAULT_KAPPA = 0.9


@dataclass
class ExtensionConfig:
    kappa: float = DEFAULT_KAPPA
    max_expansions: int = 10 ** 6

    def validate(self) -> None:
        from ontomatch.errors import ConfigError

        problems = []
        if not 0.0 <= self.kappa <= 1.0:
            problems.append(f"extend.kappa must lie in [0, 1]; got {self.kappa}")
        if self.max_expansions < 1:
            problems.append(f"extend.max_expansions must be >= 1; got {self.max_expansions}")
        if problems:
            raise ConfigError(problems)


@dataclass
class ExtensionResult:
    mappings: MappingSet
    generations: int = 0
    pairs_scored: int = 0
    pairs_skipped_scorer_failure: int = 0


def _neighbor_pairs(o: Ontology, o2: Ontology, src: int, tgt: int):
    """One-hop neighbor pairs: parents x parents, then children x children."""
    c, c2 = o.classes[src], o2.classes[tgt]
    for p in sorted(c.parents):
        for p2 in sorted(c2.parents):
            yield (p, p2)
    for s in sorted(c.children):
        for s2 in sorted(c2.children):
            yield (s, s2)


def extend(m: MappingSet, o: Ontology, o2: Ontology, scorer: MappingScorer,
           cfg: ExtensionConfig | None = None, workers: int = 1) -> ExtensionResult:
    """Iteratively extend ``m`` along matched hierarchy neighborhoods.

    Returns only the newly found mappings (provenance "extended"), each with
    score >= kappa and none already present in ``m``.
    """
    cfg = cfg or ExtensionConfig()
    cfg.validate()
    result = ExtensionResult(MappingSet(kind="output"))
    checked: set[tuple[int, int]] = set(m.pairs())
    frontier: list[tuple[int, int]] = [mm.pair() for mm in m]
    budget = cfg.max_expansions

    def score_pair(pair: tuple[int, int]) -> tuple[tuple[int, int], float | None, bool]:
        src, tgt = pair
        try:
            return pair, scorer.score(o.labels_of(src), o2.labels_of(tgt)), False
        except (ScorerTransportError, ScorerProtocolError, UndefinedScoreError) as e:
            log.warning("extension skipped (%s, %s): %s",
                        o.iri_of(src), o2.iri_of(tgt), e)
            return pair, None, True

    while frontier:
        result.generations += 1
        fresh: list[tuple[int, int]] = []
        for pair in frontier:
            if budget <= 0:
                log.warning("extension stopped at the expansion safety cap")
                frontier = []
                break
            budget -= 1
            for cand in _neighbor_pairs(o, o2, *pair):
                if cand in checked:
                    continue
                checked.add(cand)
                if o.labels_of(cand[0]) and o2.labels_of(cand[1]):
                    fresh.append(cand)
        if not fresh:
            break

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                scored = list(pool.map(score_pair, fresh))
        else:
            scored = [score_pair(p) for p in fresh]

        next_frontier: list[tuple[int, int]] = []
        for pair, score, failed in scored:
            if failed:
                result.pairs_skipped_scorer_failure += 1
                continue
            result.pairs_scored += 1
            assert score is not None
            if score >= cfg.kappa:
                result.mappings.add(ScoredMapping(pair[0], pair[1], score, "extended"))
                next_frontier.append(pair)
        frontier = next_frontier
    return result


# ---------------------------------------------------------------------------
# Repair
# ---------------------------------------------------------------------------

NO_MAPPING = -1


@dataclass
class RepairProblem:
    """Propositional encoding of both hierarchies plus candidate mappings.

    Atoms are class ids of the source ontology followed by class ids of the
    target ontology (offset by ``len(o.classes)``).  All implications are
    binary edges; disjointness pairs are the contradiction sites.
    """

    o: Ontology
    o2: Ontology
    mappings: list[ScoredMapping]
    implications: list[tuple[int, int]] = field(default_factory=list)
    disjoint: list[tuple[int, int]] = field(default_factory=list)

    @property
    def n_atoms(self) -> int:
        return len(self.o.classes) + len(self.o2.classes)

    def tgt_atom(self, cid: int) -> int:
        return len(self.o.classes) + cid

    def atom_iri(self, atom: int) -> str:
        n = len(self.o.classes)
        return self.o.iri_of(atom) if atom < n else self.o2.iri_of(atom - n)

    def mapping_edges(self, idx: int) -> list[tuple[int, int]]:
        m = self.mappings[idx]
        a, b = m.source, self.tgt_atom(m.target)
        return [(a, b), (b, a)]


def build_repair_problem(o: Ontology, o2: Ontology, m: MappingSet,
                         use_sibling_disjointness: bool = True) -> RepairProblem:
    """Encode subclass edges as implications and sibling pairs as disjoint."""
    problem = RepairProblem(o, o2, list(m))
    for cls in o.classes:
        for pid in cls.parents:
            problem.implications.append((cls.id, pid))
    for cls in o2.classes:
        for pid in cls.parents:
            problem.implications.append((problem.tgt_atom(cls.id), problem.tgt_atom(pid)))
    for a, b in sorted(o.disjoint_pairs(use_sibling_disjointness)):
        problem.disjoint.append((a, b))
    for a, b in sorted(o2.disjoint_pairs(use_sibling_disjointness)):
        problem.disjoint.append((problem.tgt_atom(a), problem.tgt_atom(b)))
    return problem


class _Propagator:
    """Unit propagation over implication edges with edge-provenance tracking."""

    def __init__(self, problem: RepairProblem, active: list[bool]):
        self.problem = problem
        n = problem.n_atoms
        # adjacency: atom -> list of (successor, mapping index or NO_MAPPING)
        self.adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for a, b in problem.implications:
            self.adj[a].append((b, NO_MAPPING))
        for idx, keep in enumerate(active):
            if keep:
                for a, b in problem.mapping_edges(idx):
                    self.adj[a].append((b, idx))
        self.disjoint_of: list[list[int]] = [[] for _ in range(n)]
        for a, b in problem.disjoint:
            self.disjoint_of[a].append(b)
            self.disjoint_of[b].append(a)

    def closure(self, seed: int) -> tuple[set[int], dict[int, tuple[int, int]]]:
        """Atoms derivable from ``seed``, with one parent edge per atom."""
        reached = {seed}
        parent: dict[int, tuple[int, int]] = {}
        queue = deque([seed])
        while queue:
            at = queue.popleft()
            for nxt, via in self.adj[at]:
                if nxt not in reached:
                    reached.add(nxt)
                    parent[nxt] = (at, via)
                    queue.append(nxt)
        return reached, parent

    def violations(self, reached: set[int]) -> list[tuple[int, int]]:
        out = []
        for a in reached:
            for b in self.disjoint_of[a]:
                if b in reached and a < b:
                    out.append((a, b))
        return out

    def implicated_mappings(self, seed: int) -> tuple[bool, set[int]]:
        """Whether ``seed`` is unsatisfiable, and mapping indices on the traced derivations."""
        reached, parent = self.closure(seed)
        hits = self.violations(reached)
        if not hits:
            return False, set()
        used: set[int] = set()
        for a, b in hits:
            for end in (a, b):
                at = end
                while at != seed:
                    prev, via = parent[at]
                    if via != NO_MAPPING:
                        used.add(via)
                    at = prev
        return True, used


def repair(problem: RepairProblem) -> tuple[MappingSet, MappingSet, list[str]]:
    """Greedily remove implicated mappings, lowest score first.

    Returns (kept, removed, unsatisfiable-class IRIs remaining).  Classes
    that are incoherent from the hierarchies alone are reported but never
    trigger removals, since no mapping can be blamed for them.
    """
    n_mappings = len(problem.mappings)
    active = [True] * n_mappings
    removed_order: list[int] = []

    baseline = _Propagator(problem, [False] * n_mappings)
    inherent = {seed for seed in range(problem.n_atoms)
                if baseline.implicated_mappings(seed)[0]}
    if inherent:
        log.warning("%d class(es) unsatisfiable from the hierarchies alone", len(inherent))

    while True:
        prop = _Propagator(problem, active)
        implicated: set[int] = set()
        for seed in range(problem.n_atoms):
            if seed in inherent:
                continue
            unsat, used = prop.implicated_mappings(seed)
            if unsat:
                implicated.update(used)
        if not implicated:
            break
        # Lowest score goes first; ties fall to the pair sorting last by IRI.
        low = min(problem.mappings[i].score for i in implicated)
        ties = [i for i in implicated if problem.mappings[i].score == low]
        victim = max(ties, key=lambda idx: (
            problem.o.iri_of(problem.mappings[idx].source),
            problem.o2.iri_of(problem.mappings[idx].target),
        ))
        active[victim] = False
        removed_order.append(victim)
        log.info("repair removed %s -> %s (score %s)",
                 problem.o.iri_of(problem.mappings[victim].source),
                 problem.o2.iri_of(problem.mappings[victim].target),
                 problem.mappings[victim].score)

    final = _Propagator(problem, active)
    unsat_remaining = sorted(
        problem.atom_iri(seed) for seed in range(problem.n_atoms)
        if final.implicated_mappings(seed)[0]
    )
    kept = MappingSet(kind="output",
                      entries=(problem.mappings[i] for i in range(n_mappings) if active[i]))
    removed = MappingSet(kind="output",
                         entries=(problem.mappings[i] for i in removed_order))
    return kept, removed, unsat_remaining


def repair_report(kept: MappingSet, removed: MappingSet, unsat_before: int,
                  unsat_remaining: list[str], o: Ontology, o2: Ontology) -> dict:
    return {
        "kept": len(kept),
        "removed": [
            {"source": o.iri_of(m.source), "target": o2.iri_of(m.target), "score": m.score}
            for m in removed
        ],
        "unsat_before": unsat_before,
        "unsat_after": len(unsat_remaining),
        "unsat_remaining": unsat_remaining,
    }


def count_unsat(problem: RepairProblem, with_mappings: bool = True) -> int:
    """Number of unsatisfiable class atoms under the (full or bare) encoding."""
    active = [with_mappings] * len(problem.mappings)
    prop = _Propagator(problem, active)
    return sum(1 for seed in range(problem.n_atoms) if prop.implicated_mappings(seed)[0])
