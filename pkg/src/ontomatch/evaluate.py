"""Evaluation: reference splits, precision/recall/F1, and threshold search.

Metrics treat mappings as (source, target) pairs; scores play no role once a
set is assembled.  An ignore set removes pairs from both the output and the
reference side before any counting, so partially-judged references neither
reward nor punish the system.  Threshold search evaluates a grid of
(direction, score threshold) cells against held-out references and prefers,
on ties, the larger threshold and then the direction declared first.
"""

from __future__ import annotations

import csv
import logging
import random
from dataclasses import dataclass

from ontomatch.errors import ConfigError, InsufficientDataError
from ontomatch.ontology import MappingSet
from ontomatch.predict import DIRECTIONS, threshold

log = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = (0.90, 0.95, 0.97, 0.99, 0.995, 0.997, 0.999)

UNSUPERVISED_FRACTIONS = (0.0, 0.1, 0.9)
SEMI_SUPERVISED_FRACTIONS = (0.2, 0.1, 0.7)


@dataclass
class SplitSpec:
    mode: str = "unsupervised"
    fractions: tuple[float, float, float] = UNSUPERVISED_FRACTIONS
    seed: int = 0

    def validate(self) -> None:
        problems = []
        if self.mode not in ("unsupervised", "semi-supervised"):
            problems.append(f"split.mode must be unsupervised or semi-supervised; got {self.mode!r}")
        if len(self.fractions) != 3 or any(f < 0 for f in self.fractions):
            problems.append(f"split.fractions must be 3 non-negative reals; got {self.fractions}")
        elif abs(sum(self.fractions) - 1.0) > 1e-9:
            problems.append(f"split.fractions must sum to 1; got {self.fractions}")
        elif self.mode == "unsupervised" and self.fractions[0] != 0.0:
            problems.append("split.mode unsupervised requires a zero train fraction")
        if problems:
            raise ConfigError(problems)


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    counts: dict[str, int]
    tau: str | None = None
    lam: float | None = None
    ignored_size: int = 0
    empty_output: bool = False
    empty_references: bool = False
    split: SplitSpec | None = None

    def to_dict(self) -> dict:
        out = {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "counts": dict(self.counts),
            "ignored_size": self.ignored_size,
        }
        if self.tau is not None:
            out["tau"] = self.tau
        if self.lam is not None:
            out["lambda"] = self.lam
        if self.empty_output:
            out["empty_output"] = True
        if self.empty_references:
            out["empty_references"] = True
        return out


def split_references(refs_eq: MappingSet, spec: SplitSpec) -> tuple[MappingSet, MappingSet, MappingSet]:
    """Seeded shuffle then fraction split into (train, val, test)."""
    spec.validate()
    entries = list(refs_eq)
    rng = random.Random(f"{spec.seed}:refsplit")
    rng.shuffle(entries)
    n = len(entries)
    n_train = int(n * spec.fractions[0] + 0.5)
    n_val = int(n * spec.fractions[1] + 0.5)
    train = MappingSet("train", entries[:n_train])
    val = MappingSet("val", entries[n_train:n_train + n_val])
    test = MappingSet("test", entries[n_train + n_val:])
    return train, val, test


def evaluate(out: MappingSet, refs: MappingSet, ignored: MappingSet | None = None) -> EvalReport:
    """Pair-set precision/recall/F1 with the ignore rule applied to both sides."""
    ignored_pairs = ignored.pairs() if ignored is not None else set()
    out_pairs = out.pairs() - ignored_pairs
    ref_pairs = refs.pairs() - ignored_pairs
    hits = out_pairs & ref_pairs
    empty_output = not out_pairs
    empty_references = not ref_pairs
    if empty_output:
        log.warning("evaluation: no output mappings outside the ignore set")
    if empty_references:
        log.warning("evaluation: no reference mappings outside the ignore set")
    precision = len(hits) / len(out_pairs) if out_pairs else 0.0
    recall = len(hits) / len(ref_pairs) if ref_pairs else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EvalReport(
        precision=precision, recall=recall, f1=f1,
        counts={"hits": len(hits), "output_considered": len(out_pairs),
                "references_considered": len(ref_pairs)},
        ignored_size=len(ignored_pairs),
        empty_output=empty_output, empty_references=empty_references,
    )


def validate_hyperparams(scored_runs: dict[str, MappingSet], val: MappingSet,
                         ignored: MappingSet | None, lambda_grid=DEFAULT_LAMBDA_GRID
                         ) -> tuple[str, float, list[dict]]:
    """Grid-evaluate every (direction, threshold) cell against ``val``.

    Returns the best cell plus all rows.  Ties prefer the larger threshold,
    then the earlier direction in declaration order.
    """
    if len(val) == 0:
        raise InsufficientDataError("hyperparameter validation needs a non-empty validation set")
    rows: list[dict] = []
    best: tuple[str, float] | None = None
    best_f1 = -1.0
    order = [d for d in DIRECTIONS if d in scored_runs]
    order += [d for d in scored_runs if d not in DIRECTIONS]
    for direction in order:
        scored = scored_runs[direction]
        for lam in lambda_grid:
            report = evaluate(threshold(scored, lam), val, ignored)
            rows.append({"direction": direction, "lambda": lam,
                         "precision": report.precision, "recall": report.recall,
                         "f1": report.f1})
            better = report.f1 > best_f1 or (report.f1 == best_f1 and best is not None
                                             and lam > best[1])
            if better:
                best = (direction, lam)
                best_f1 = report.f1
    assert best is not None
    return best[0], best[1], rows


def write_grid_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=["direction", "lambda", "precision",
                                               "recall", "f1"])
        writer.writeheader()
        writer.writerows(rows)


def union_ignore(*sets: MappingSet | None) -> MappingSet:
    """Union of mapping sets for use as an ignore set (order-preserving)."""
    out = MappingSet("reference-ignored")
    for ms in sets:
        if ms is None:
            continue
        for m in ms:
            out.add(m)
    return out
