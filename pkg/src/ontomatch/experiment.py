"""End-to-end experiment orchestration.

Stages: digest inputs, load, split references, build corpora, check the
scorer, build indexes, predict both directions, pick (direction, threshold)
on validation references, extend, re-pick the threshold over the extended
set, repair, and evaluate on test references.  Every intermediate artifact
is written as soon as its stage finishes, so a failure preserves everything
up to that point; the failure itself is re-raised with its stage name.

The summary JSON is free of timings and other run-varying data, so repeated
runs with equal config and inputs produce byte-identical summaries; wall
times go to the run manifest instead.
"""

from __future__ import annotations

import json
import logging
import os
import time
from contextlib import contextmanager
from pathlib import Path

from ontomatch import config as config_mod
from ontomatch.config import ExperimentConfig
from ontomatch.corpus import (
    Corpus,
    build_comp_corpus,
    build_cross_corpus,
    build_intra_corpus,
    corpus_manifest,
    merge_and_split,
    save_corpus,
)
from ontomatch.errors import ConfigError, StageError
from ontomatch.evaluate import evaluate, split_references, union_ignore, validate_hyperparams, write_grid_csv
from ontomatch.ontology import MappingSet, load_mappings, load_ontology, save_mappings
from ontomatch.predict import predict_all, run_report, threshold
from ontomatch.refine import build_repair_problem, count_unsat, extend, repair, repair_report
from ontomatch.scoring import MappingScorer
from ontomatch.subword import SubwordIndex, WordPieceTokenizer

log = logging.getLogger(__name__)

SUMMARY_SCHEMA_VERSION = 1


def resolve_workers(requested: int) -> int:
    if requested > 0:
        return requested
    return os.cpu_count() or 1


@contextmanager
def _stage(name: str, timings: dict[str, float]):
    log.info("stage %s ...", name)
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e
    finally:
        timings[name] = (time.perf_counter() - t0) * 1000.0


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None,
                   workers: int | None = None) -> dict:
    """Run the full pipeline; returns the summary dict (also written to disk)."""
    out = Path(out_dir or cfg.out_dir)
    n_workers = resolve_workers(workers if workers is not None else cfg.workers)
    timings: dict[str, float] = {}

    with _stage("inputs", timings):
        if not cfg.refs_equivalence:
            raise ConfigError(["references.equivalence is required for a full run"])
        if not cfg.vocab:
            raise ConfigError(["predict.vocab is required for a full run"])
        digests = config_mod.digest_inputs(cfg)
        for sub in ("corpus", "maps", "grids", "splits"):
            (out / sub).mkdir(parents=True, exist_ok=True)

    with _stage("load", timings):
        label_props = cfg.label_properties
        kwargs = {"label_properties": label_props} if label_props else {}
        src = load_ontology(cfg.source, **kwargs)
        tgt = load_ontology(cfg.target, **kwargs)
        aux = load_ontology(cfg.auxiliary, **kwargs) if cfg.auxiliary else None
        refs_eq = load_mappings(cfg.refs_equivalence, src, tgt, kind="reference-eq")
        refs_ignored = (load_mappings(cfg.refs_ignored, src, tgt, kind="reference-ignored")
                        if cfg.refs_ignored else None)

    with _stage("split", timings):
        train, val, test = split_references(refs_eq, cfg.split)
        for name, ms in (("train", train), ("val", val), ("test", test)):
            save_mappings(ms, src, tgt, str(out / "splits" / f"{name}.tsv"))

    with _stage("corpus", timings):
        corpora: dict[str, Corpus] = {}
        if cfg.corpus_io:
            corpora["intra-src"] = build_intra_corpus(src, cfg.corpus)
            corpora["intra-tgt"] = build_intra_corpus(tgt, cfg.corpus)
        if cfg.corpus.use_co:
            corpora["cross"] = build_cross_corpus(src, tgt, train, cfg.corpus)
        if cfg.corpus.use_cp and aux is not None:
            corpora["comp"] = build_comp_corpus(src, tgt, aux, cfg.corpus)
        if corpora:
            corpus_train, corpus_val = merge_and_split(list(corpora.values()),
                                                       cfg.corpus_val_fraction)
            save_corpus(corpus_train, str(out / "corpus" / "train.jsonl"))
            save_corpus(corpus_val, str(out / "corpus" / "val.jsonl"))
            with open(out / "corpus" / "manifest.json", "w", encoding="utf-8") as f:
                json.dump(corpus_manifest(corpora, corpus_train, corpus_val,
                                          cfg.corpus_val_fraction), f, indent=2, sort_keys=True)
                f.write("\n")

    with _stage("scorer-health", timings):
        scorer = MappingScorer(cfg.scorer)
        model = scorer.health_check()
        if model is not None:
            log.info("remote scorer healthy (model: %s)", model)

    with _stage("index", timings):
        tokenizer = WordPieceTokenizer.from_file(cfg.vocab)
        src_index = SubwordIndex(src, tokenizer)
        tgt_index = SubwordIndex(tgt, tokenizer)

    with _stage("predict", timings):
        runs = predict_all(src, tgt, src_index, tgt_index, scorer, cfg.k, n_workers)
        for name, run in runs.items():
            save_mappings(run.mappings, src, tgt, str(out / "maps" / f"{name}.tsv"))
        with open(out / "maps" / "predict_report.json", "w", encoding="utf-8") as f:
            json.dump(run_report(runs, seed=cfg.seed), f, indent=2, sort_keys=True)
            f.write("\n")

    val_ignore = union_ignore(refs_ignored, train, test)
    with _stage("validate-1", timings):
        scored_sets = {name: run.mappings for name, run in runs.items()}
        tau, lambda_1, rows_1 = validate_hyperparams(scored_sets, val, val_ignore,
                                                     cfg.lambda_grid)
        write_grid_csv(rows_1, str(out / "grids" / "step1.csv"))
        log.info("validation step 1: tau=%s lambda=%s", tau, lambda_1)

    with _stage("extend", timings):
        seed_maps = threshold(scored_sets[tau], lambda_1)
        save_mappings(seed_maps, src, tgt, str(out / "maps" / "seed.tsv"))
        ext_result = extend(seed_maps, src, tgt, scorer, cfg.extension, n_workers)
        save_mappings(ext_result.mappings, src, tgt, str(out / "maps" / "extended.tsv"))
        union = MappingSet("output", list(seed_maps) + list(ext_result.mappings))
        save_mappings(union, src, tgt, str(out / "maps" / "union.tsv"))

    with _stage("validate-2", timings):
        _, lambda_2, rows_2 = validate_hyperparams({tau: union}, val, val_ignore,
                                                   cfg.lambda_grid)
        write_grid_csv(rows_2, str(out / "grids" / "step2.csv"))
        log.info("validation step 2: lambda=%s", lambda_2)

    with _stage("repair", timings):
        final_candidates = threshold(union, lambda_2)
        problem = build_repair_problem(src, tgt, final_candidates,
                                       cfg.sibling_disjointness)
        unsat_before = count_unsat(problem)
        kept, removed, unsat_remaining = repair(problem)
        save_mappings(kept, src, tgt, str(out / "maps" / "final.tsv"))
        save_mappings(removed, src, tgt, str(out / "maps" / "removed.tsv"))
        with open(out / "maps" / "repair_report.json", "w", encoding="utf-8") as f:
            json.dump(repair_report(kept, removed, unsat_before, unsat_remaining,
                                    src, tgt), f, indent=2, sort_keys=True)
            f.write("\n")

    with _stage("evaluate", timings):
        test_ignore = union_ignore(refs_ignored, train, val)
        val_report = evaluate(kept, val, val_ignore)
        test_report = evaluate(kept, test, test_ignore)

    summary = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "mode": cfg.split.mode,
        "config_hash": config_mod.config_hash(cfg),
        "seed": cfg.seed,
        "tau": tau,
        "lambda_1": lambda_1,
        "lambda_2": lambda_2,
        "kappa": cfg.extension.kappa,
        "counts": {
            "predicted": {name: len(run.mappings) for name, run in runs.items()},
            "seed": len(seed_maps),
            "extended": len(ext_result.mappings),
            "extension_generations": ext_result.generations,
            "final_candidates": len(final_candidates),
            "kept": len(kept),
            "removed": len(removed),
            "unsat_before_repair": unsat_before,
            "unsat_after_repair": len(unsat_remaining),
            "references": {"train": len(train), "val": len(val), "test": len(test)},
        },
        "val": val_report.to_dict(),
        "test": test_report.to_dict(),
    }
    with open(out / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")

    manifest = config_mod.build_manifest(cfg, digests, timings)
    config_mod.emit_manifest(manifest, str(out / "manifest.json"))
    return summary
