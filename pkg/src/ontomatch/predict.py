"""Mapping prediction: candidate selection, scoring, argmax, thresholding.

Each labeled source class pulls up to ``k`` token-overlap candidates from the
target index, scores them, and keeps the single best-scoring target.  Runs in
both directions are merged into a combined set.  Source classes are
independent, so scoring fans out over a thread pool; results are collected in
canonical source-IRI order, which makes the output identical at any worker
count.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ontomatch.errors import ScorerProtocolError, ScorerTransportError, UndefinedScoreError
from ontomatch.ontology import MappingSet, Ontology, ScoredMapping
from ontomatch.scoring import MappingScorer
from ontomatch.subword import DEFAULT_TOP_K, SubwordIndex

log = logging.getLogger(__name__)

DIRECTIONS = ("src2tgt", "tgt2src", "combined")


@dataclass
class PredictionConfig:
    k: int = DEFAULT_TOP_K
    tau: str = "combined"
    lam: float = 0.0

    def validate(self) -> None:
        from ontomatch.errors import ConfigError

        problems = []
        if self.k < 1:
            problems.append(f"predict.k must be >= 1; got {self.k}")
        if self.tau not in DIRECTIONS:
            problems.append(f"predict.tau must be one of {', '.join(DIRECTIONS)}; got {self.tau!r}")
        if not 0.0 <= self.lam <= 1.0:
            problems.append(f"predict.lambda must lie in [0, 1]; got {self.lam}")
        if problems:
            raise ConfigError(problems)


@dataclass
class PredictionRun:
    mappings: MappingSet
    direction: str
    stats: dict[str, int] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    elapsed_s: float = 0.0


def _score_one_class(src: Ontology, tgt: Ontology, index: SubwordIndex,
                     scorer: MappingScorer, k: int, cid: int):
    """Score one source class; returns (mapping-or-None, stat counts)."""
    labels = src.labels_of(cid)
    cands = index.candidates(labels, k)
    n_calls = 0
    n_short = 0
    if not cands:
        return None, 0, 0, 0, False
    best: tuple[float, int] | None = None  # (score, target id)
    try:
        # Candidates arrive ordered by descending token-overlap score with
        # ascending-IRI ties, so keeping the first strict maximum implements
        # the tie-break (more sub-word evidence, then smaller IRI) for free.
        for tgt_cid, _sel in cands:
            score, short = scorer.score_detailed(labels, tgt.labels_of(tgt_cid))
            if short:
                n_short += 1
            else:
                n_calls += 1
            if best is None or score > best[0]:
                best = (score, tgt_cid)
    except (ScorerTransportError, ScorerProtocolError, UndefinedScoreError) as e:
        log.warning("skipping %s: scorer failed (%s)", src.iri_of(cid), e)
        return None, len(cands), n_calls, n_short, True
    assert best is not None
    m = ScoredMapping(cid, best[1], best[0], "predicted")
    return m, len(cands), n_calls, n_short, False


def predict_direction(src: Ontology, tgt: Ontology, index: SubwordIndex,
                      scorer: MappingScorer, k: int = DEFAULT_TOP_K,
                      workers: int = 1, direction: str = "src2tgt") -> PredictionRun:
    """One mapping per labeled source class (when it has candidates at all)."""
    t0 = time.perf_counter()
    order = sorted(src.labeled_ids(), key=src.iri_of)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda cid: _score_one_class(src, tgt, index, scorer, k, cid), order))
    else:
        results = [_score_one_class(src, tgt, index, scorer, k, cid) for cid in order]

    mappings = MappingSet(kind="output")
    stats = {"classes_processed": len(order), "candidates_scored": 0,
             "scorer_calls": 0, "short_circuit_hits": 0,
             "classes_skipped_scorer_failure": 0, "mappings_emitted": 0}
    for m, n_cands, n_calls, n_short, skipped in results:
        stats["candidates_scored"] += n_cands
        stats["scorer_calls"] += n_calls
        stats["short_circuit_hits"] += n_short
        if skipped:
            stats["classes_skipped_scorer_failure"] += 1
        elif m is not None:
            mappings.add(m)
    stats["mappings_emitted"] = len(mappings)
    return PredictionRun(
        mappings=mappings, direction=direction, stats=stats,
        config={"k": k, "scorer": scorer.name, "workers": workers},
        elapsed_s=time.perf_counter() - t0,
    )


def flip(ms: MappingSet) -> MappingSet:
    """Swap source and target ids (normalizing a reverse-direction run)."""
    out = MappingSet(kind=ms.kind)
    for m in ms:
        out.add(ScoredMapping(m.target, m.source, m.score, m.provenance))
    return out


def combine(a: MappingSet, b: MappingSet) -> MappingSet:
    """Union on (source, target) pairs, keeping the max score on duplicates.

    Both inputs must already be oriented source-ontology -> target-ontology.
    """
    out = MappingSet(kind="output")
    position: dict[tuple[int, int], int] = {}
    for m in a:
        position[m.pair()] = len(out.entries)
        out.add(m)
    for m in b:
        at = position.get(m.pair())
        if at is None:
            position[m.pair()] = len(out.entries)
            out.add(m)
        elif m.score > out.entries[at].score:
            out.entries[at] = ScoredMapping(m.source, m.target, m.score,
                                            out.entries[at].provenance)
    return out


def threshold(ms: MappingSet, lam: float) -> MappingSet:
    """Keep mappings scoring >= lam, preserving order and provenance."""
    out = MappingSet(kind=ms.kind)
    for m in ms:
        if m.score >= lam:
            out.add(m)
    return out


def predict_all(src: Ontology, tgt: Ontology, src_index: SubwordIndex,
                tgt_index: SubwordIndex, scorer: MappingScorer,
                k: int = DEFAULT_TOP_K, workers: int = 1) -> dict[str, PredictionRun]:
    """Run both directions and assemble the combined set (all O -> O' oriented)."""
    fwd = predict_direction(src, tgt, tgt_index, scorer, k, workers, "src2tgt")
    rev = predict_direction(tgt, src, src_index, scorer, k, workers, "tgt2src")
    rev_normalized = flip(rev.mappings)
    both = combine(fwd.mappings, rev_normalized)
    merged_stats = {key: fwd.stats[key] + rev.stats[key] for key in fwd.stats}
    merged_stats["mappings_emitted"] = len(both)
    runs = {
        "src2tgt": fwd,
        "tgt2src": PredictionRun(rev_normalized, "tgt2src", rev.stats, rev.config,
                                 rev.elapsed_s),
        "combined": PredictionRun(both, "combined", merged_stats, fwd.config,
                                  fwd.elapsed_s + rev.elapsed_s),
    }
    return runs


def run_report(runs: dict[str, PredictionRun], seed: int | None = None,
               extra: dict | None = None) -> dict:
    """Run-report JSON content: per-direction stats, config snapshot, timing."""
    report: dict = {
        "directions": {
            name: {"stats": run.stats, "elapsed_s": round(run.elapsed_s, 6)}
            for name, run in runs.items()
        },
        "config": next(iter(runs.values())).config if runs else {},
    }
    if seed is not None:
        report["seed"] = seed
    if extra:
        report.update(extra)
    return report
