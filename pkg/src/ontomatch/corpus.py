"""Construction of synonym / non-synonym label-pair corpora.

Three sources feed the classifier's training data: label pairs within single
classes of one ontology, label pairs across two ontologies joined by known
mappings, and label pairs from an auxiliary ontology restricted to classes
that share labels with the inputs.  Every synonym appears in both orders,
every synonym draws a fixed quota of non-synonyms (soft draws pair random
classes, hard draws pair a class with one of its siblings), and any drawn
non-synonym that collides with a known synonym pair is discarded.

All sampling is seeded per class, so construction is reproducible and could
be parallelized per class without changing the output.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field, replace
from typing import Iterable

from ontomatch.errors import ConfigError, InsufficientDataError
from ontomatch.ontology import MappingSet, Ontology

log = logging.getLogger(__name__)

ORIGINS = ("intra-syn", "identity-syn", "soft-nonsyn", "hard-nonsyn",
           "cross-syn", "cross-nonsyn", "comp-syn", "comp-soft-nonsyn", "comp-hard-nonsyn")

MAX_DRAW_RETRIES = 10


@dataclass(frozen=True)
class CorpusSample:
    left: str
    right: str
    is_synonym: bool
    origin: str

    def key(self) -> tuple[str, str, bool]:
        return (self.left, self.right, self.is_synonym)

    def unordered(self) -> tuple[str, str]:
        return (self.left, self.right) if self.left <= self.right else (self.right, self.left)


@dataclass
class CorpusConfig:
    use_ids: bool = True
    use_co: bool = True
    use_cp: bool = False
    negatives_per_synonym: int = 4
    soft_hard_split: tuple[int, int] = (2, 2)
    seed: int = 0

    def validate(self) -> None:
        problems = []
        soft, hard = self.soft_hard_split
        if soft < 0 or hard < 0:
            problems.append(f"corpus.soft_hard_split must be non-negative; got {self.soft_hard_split}")
        if soft + hard != self.negatives_per_synonym:
            problems.append(
                f"corpus.soft_hard_split {self.soft_hard_split} must sum to "
                f"negatives_per_synonym ({self.negatives_per_synonym})")
        if problems:
            raise ConfigError(problems)


@dataclass
class Corpus:
    samples: list[CorpusSample] = field(default_factory=list)
    config: CorpusConfig = field(default_factory=CorpusConfig)
    seed: int = 0

    def __len__(self) -> int:
        return len(self.samples)

    def synonym_pairs(self) -> set[tuple[str, str]]:
        return {(s.left, s.right) for s in self.samples if s.is_synonym}

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for s in self.samples:
            out[s.origin] = out.get(s.origin, 0) + 1
        return out


def _class_rng(seed: int, onto_name: str, iri: str) -> random.Random:
    # String seeding hashes with sha512 under the hood, so draws are stable
    # across platforms and interpreter runs.
    return random.Random(f"{seed}:{onto_name}:{iri}")


def _draw_soft(rng: random.Random, o: Ontology, labeled: list[int],
               syn_pairs: set[tuple[str, str]]) -> tuple[str, str] | None:
    for _ in range(MAX_DRAW_RETRIES):
        a = rng.choice(labeled)
        b = rng.choice(labeled)
        if a == b:
            continue
        pair = (rng.choice(o.classes[a].labels), rng.choice(o.classes[b].labels))
        if pair not in syn_pairs:
            return pair
    return None


def _draw_hard(rng: random.Random, o: Ontology, cid: int, sibs: list[int],
               syn_pairs: set[tuple[str, str]]) -> tuple[str, str] | None:
    labels = o.classes[cid].labels
    for _ in range(MAX_DRAW_RETRIES):
        sib = rng.choice(sibs)
        pair = (rng.choice(labels), rng.choice(o.classes[sib].labels))
        if pair not in syn_pairs:
            return pair
    return None


def _intra_synonyms(o: Ontology, use_ids: bool, origin_syn: str) -> tuple[list[tuple[int, CorpusSample]], set[tuple[str, str]]]:
    """All within-class synonym samples tagged with their class id, plus the pair set."""
    tagged: list[tuple[int, CorpusSample]] = []
    pairs: set[tuple[str, str]] = set()
    for cls in o.classes:
        labels = cls.labels
        for i in range(len(labels)):
            for j in range(i + 1, len(labels)):
                tagged.append((cls.id, CorpusSample(labels[i], labels[j], True, origin_syn)))
                tagged.append((cls.id, CorpusSample(labels[j], labels[i], True, origin_syn)))
                pairs.add((labels[i], labels[j]))
                pairs.add((labels[j], labels[i]))
        if use_ids:
            for lab in labels:
                tagged.append((cls.id, CorpusSample(lab, lab, True, "identity-syn")))
                pairs.add((lab, lab))
    return tagged, pairs


def _build_within(o: Ontology, cfg: CorpusConfig, origin_syn: str, origin_soft: str,
                  origin_hard: str) -> Corpus:
    cfg.validate()
    tagged, syn_pairs = _intra_synonyms(o, cfg.use_ids, origin_syn)
    labeled = o.labeled_ids()
    if tagged and len(labeled) < 2:
        raise InsufficientDataError(
            f"{o.name}: need at least 2 labeled classes to draw non-synonyms "
            f"(have {len(labeled)})")
    n_soft, n_hard = cfg.soft_hard_split

    samples: list[CorpusSample] = [s for _, s in tagged]
    rngs: dict[int, random.Random] = {}
    sib_cache: dict[int, list[int]] = {}
    for cid, _syn in tagged:
        rng = rngs.get(cid)
        if rng is None:
            rng = rngs[cid] = _class_rng(cfg.seed, o.name, o.iri_of(cid))
            sib_cache[cid] = [s for s in sorted(o.siblings(cid)) if o.classes[s].labels]
        sibs = sib_cache[cid]
        for _ in range(n_soft):
            pair = _draw_soft(rng, o, labeled, syn_pairs)
            if pair:
                samples.append(CorpusSample(pair[0], pair[1], False, origin_soft))
        for _ in range(n_hard):
            if sibs:
                pair = _draw_hard(rng, o, cid, sibs, syn_pairs)
                origin = origin_hard
            else:
                pair = _draw_soft(rng, o, labeled, syn_pairs)
                origin = origin_soft
            if pair:
                samples.append(CorpusSample(pair[0], pair[1], False, origin))
    return Corpus(_dedup(samples), cfg, cfg.seed)


def build_intra_corpus(o: Ontology, cfg: CorpusConfig) -> Corpus:
    """Synonyms from each class's own label set, with seeded negative draws."""
    return _build_within(o, cfg, "intra-syn", "soft-nonsyn", "hard-nonsyn")


def build_cross_corpus(o: Ontology, o2: Ontology, train: MappingSet, cfg: CorpusConfig) -> Corpus:
    """Synonyms joined across two ontologies by known-equivalent class pairs.

    Negatives pair labels of randomly drawn class pairs that are not known
    matches; there is no sibling notion across ontologies, so all negatives
    here are random draws.
    """
    cfg.validate()
    if len(train) == 0:
        log.warning("cross-ontology corpus: no training mappings, corpus is empty")
        return Corpus([], cfg, cfg.seed)

    syn_pairs: set[tuple[str, str]] = set()
    per_mapping: list[tuple[str, str, list[CorpusSample]]] = []
    for m in train:
        src, tgt = o.classes[m.source], o2.classes[m.target]
        block: list[CorpusSample] = []
        for a in src.labels:
            for b in tgt.labels:
                block.append(CorpusSample(a, b, True, "cross-syn"))
                syn_pairs.add((a, b))
                if a != b:
                    block.append(CorpusSample(b, a, True, "cross-syn"))
                    syn_pairs.add((b, a))
        per_mapping.append((src.iri, tgt.iri, block))

    labeled_src = o.labeled_ids()
    labeled_tgt = o2.labeled_ids()
    matched = train.pairs()
    samples: list[CorpusSample] = []
    for src_iri, tgt_iri, block in per_mapping:
        samples.extend(block)
        rng = random.Random(f"{cfg.seed}:cross:{src_iri}|{tgt_iri}")
        for _syn in block:
            for _ in range(cfg.negatives_per_synonym):
                pair = _draw_cross_negative(rng, o, o2, labeled_src, labeled_tgt,
                                            matched, syn_pairs)
                if pair:
                    samples.append(CorpusSample(pair[0], pair[1], False, "cross-nonsyn"))
    return Corpus(_dedup(samples), cfg, cfg.seed)


def _draw_cross_negative(rng: random.Random, o: Ontology, o2: Ontology,
                         labeled_src: list[int], labeled_tgt: list[int],
                         matched: set[tuple[int, int]],
                         syn_pairs: set[tuple[str, str]]) -> tuple[str, str] | None:
    for _ in range(MAX_DRAW_RETRIES):
        a = rng.choice(labeled_src)
        b = rng.choice(labeled_tgt)
        if (a, b) in matched:
            continue
        pair = (rng.choice(o.classes[a].labels), rng.choice(o2.classes[b].labels))
        if pair not in syn_pairs:
            return pair
    return None


def build_comp_corpus(o: Ontology, o2: Ontology, aux: Ontology, cfg: CorpusConfig) -> Corpus:
    """Within-class corpus from an auxiliary ontology, label-overlap restricted.

    Only auxiliary classes sharing at least one preprocessed label with some
    class of either input ontology are kept; hierarchy links among the kept
    classes carry over so sibling-based draws still work.
    """
    known: set[str] = set()
    for onto in (o, o2):
        for cls in onto.classes:
            known.update(cls.labels)
    keep = [cls for cls in aux.classes if any(lab in known for lab in cls.labels)]
    if not keep:
        log.warning("complementary corpus: no auxiliary class shares a label with the inputs")
        return Corpus([], cfg, cfg.seed)

    restricted = Ontology(name=aux.name)
    kept_ids = {cls.id for cls in keep}
    for cls in keep:
        new = restricted.add_class(cls.iri)
        new.labels = list(cls.labels)
    for cls in keep:
        new = restricted.by_iri(cls.iri)
        for pid in cls.parents:
            if pid in kept_ids:
                new.parents.add(restricted.iri_index[aux.iri_of(pid)])
    restricted._finalize()
    return _build_within(restricted, cfg, "comp-syn", "comp-soft-nonsyn", "comp-hard-nonsyn")


def _dedup(samples: Iterable[CorpusSample]) -> list[CorpusSample]:
    """Drop exact ordered duplicates (first occurrence wins) and collisions.

    A collision is a non-synonym whose (left, right) also occurs as a
    synonym; the synonym wins regardless of order of appearance.
    """
    materialized = list(samples)
    syn_pairs = {(s.left, s.right) for s in materialized if s.is_synonym}
    out: list[CorpusSample] = []
    seen: set[tuple[str, str, bool]] = set()
    for s in materialized:
        if not s.is_synonym and (s.left, s.right) in syn_pairs:
            continue
        if s.key() in seen:
            continue
        seen.add(s.key())
        out.append(s)
    return out


def merge_and_split(corpora: list[Corpus], val_fraction: float) -> tuple[Corpus, Corpus]:
    """Merge corpora, re-apply global dedup/collision rules, split for validation.

    The split operates on unordered (left, right) pairs so a synonym and its
    reverse always land in the same partition; the assignment is a seeded
    shuffle of the unordered pairs.
    """
    if not corpora:
        raise InsufficientDataError("merge_and_split needs at least one corpus")
    if not 0.0 < val_fraction < 1.0:
        raise ConfigError([f"val_fraction must lie in (0, 1); got {val_fraction}"])
    cfg = corpora[0].config
    merged = _dedup(s for c in corpora for s in c.samples)

    groups: list[tuple[str, str]] = []
    seen_groups: set[tuple[str, str]] = set()
    for s in merged:
        g = s.unordered()
        if g not in seen_groups:
            seen_groups.add(g)
            groups.append(g)

    rng = random.Random(f"{cfg.seed}:split")
    shuffled = list(groups)
    rng.shuffle(shuffled)
    n_val = round(len(shuffled) * val_fraction)
    val_groups = set(shuffled[:n_val])

    train_samples = [s for s in merged if s.unordered() not in val_groups]
    val_samples = [s for s in merged if s.unordered() in val_groups]
    return (Corpus(train_samples, cfg, cfg.seed), Corpus(val_samples, cfg, cfg.seed))


def save_corpus(corpus: Corpus, path: str) -> None:
    """Write samples as JSON lines: {"l": ..., "r": ..., "y": 0|1, "origin": ...}."""
    with open(path, "w", encoding="utf-8") as f:
        for s in corpus.samples:
            f.write(json.dumps({"l": s.left, "r": s.right, "y": int(s.is_synonym),
                                "origin": s.origin}, ensure_ascii=False))
            f.write("\n")


def load_corpus(path: str, config: CorpusConfig | None = None) -> Corpus:
    samples = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            obj = json.loads(line)
            samples.append(CorpusSample(obj["l"], obj["r"], bool(obj["y"]), obj.get("origin", "")))
    return Corpus(samples, config or CorpusConfig(), (config or CorpusConfig()).seed)


def corpus_manifest(corpora: dict[str, Corpus], train: Corpus, val: Corpus,
                    val_fraction: float) -> dict:
    """Manifest JSON content describing a corpus build."""
    cfg = train.config
    return {
        "config": {
            "use_ids": cfg.use_ids,
            "use_co": cfg.use_co,
            "use_cp": cfg.use_cp,
            "negatives_per_synonym": cfg.negatives_per_synonym,
            "soft_hard_split": list(cfg.soft_hard_split),
            "seed": cfg.seed,
        },
        "val_fraction": val_fraction,
        "sources": {name: {"samples": len(c), "by_origin": c.counts()}
                    for name, c in corpora.items()},
        "train_samples": len(train),
        "val_samples": len(val),
    }


def replace_seed(cfg: CorpusConfig, seed: int) -> CorpusConfig:
    return replace(cfg, seed=seed)
