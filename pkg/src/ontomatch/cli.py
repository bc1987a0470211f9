"""Command-line entry point.

One binary, nine subcommands: convert, corpus, index, predict, extend,
repair, evaluate, sweep, run.  Diagnostics go to stderr; results go to the
files named by --out.  Every subcommand accepts --config to pull defaults
from an experiment config file, with explicit flags taking precedence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ontomatch import __version__
from ontomatch.config import ExperimentConfig, parse_config
from ontomatch.corpus import (
    build_comp_corpus,
    build_cross_corpus,
    build_intra_corpus,
    corpus_manifest,
    merge_and_split,
    save_corpus,
)
from ontomatch.errors import ConfigError, OntomatchError
from ontomatch.evaluate import (
    DEFAULT_LAMBDA_GRID,
    evaluate,
    split_references,
    validate_hyperparams,
    write_grid_csv,
)
from ontomatch.experiment import resolve_workers, run_experiment
from ontomatch.ontology import (
    DEFAULT_LABEL_PROPERTIES,
    load_mappings,
    load_ontology,
    save_mappings,
    save_ontology_json,
)
from ontomatch.predict import combine, predict_all, predict_direction, run_report
from ontomatch.refine import (
    ExtensionConfig,
    build_repair_problem,
    count_unsat,
    extend,
    repair,
    repair_report,
)
from ontomatch.scoring import MappingScorer, ScorerConfig
from ontomatch.subword import DEFAULT_TOP_K, SubwordIndex, WordPieceTokenizer

log = logging.getLogger(__name__)

SCORER_ALIASES = {
    "string": "string-match",
    "edit": "edit-similarity",
    "remote": "remote-classifier",
    "mock": "mock",
}


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="experiment config file (JSON or TOML)")
    shared.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: from config, else CPU count)")
    shared.add_argument("--log-level", default="info",
                        choices=["debug", "info", "warning", "error"])
    shared.add_argument("--out", help="output file or directory (command-dependent)")

    parser = argparse.ArgumentParser(prog="ontomatch",
                                     description="Ontology alignment toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", parents=[shared],
                       help="convert an RDF/XML ontology to normalized JSON")
    p.add_argument("--in", dest="input", required=True, help="input ontology file")
    p.add_argument("--label-prop", action="append", default=None,
                   help="label property IRI (repeatable)")

    p = sub.add_parser("corpus", parents=[shared],
                       help="build training/validation corpora from a config")

    p = sub.add_parser("index", parents=[shared],
                       help="build a sub-word index and dump it as JSON")
    p.add_argument("--tgt", help="ontology to index")
    p.add_argument("--vocab", help="vocabulary file (one token per line)")

    p = sub.add_parser("predict", parents=[shared], help="predict mappings")
    _add_pair_args(p)
    _add_scorer_args(p)
    p.add_argument("--vocab", help="vocabulary file")
    p.add_argument("--k", type=int, default=None, help="candidate cutoff")
    p.add_argument("--direction", default="both",
                   choices=["src2tgt", "tgt2src", "both"])

    p = sub.add_parser("extend", parents=[shared],
                       help="extend mappings along matched hierarchy neighborhoods")
    p.add_argument("--maps", required=True, help="input mapping TSV")
    _add_pair_args(p)
    _add_scorer_args(p)
    p.add_argument("--kappa", type=float, default=None, help="extension threshold")

    p = sub.add_parser("repair", parents=[shared],
                       help="remove mappings implicated in logical conflicts")
    p.add_argument("--maps", required=True, help="input mapping TSV")
    _add_pair_args(p)
    p.add_argument("--no-sibling-disjointness", action="store_true",
                   help="only use disjointness declared in the ontology files")

    p = sub.add_parser("evaluate", parents=[shared],
                       help="score an output mapping set against references")
    p.add_argument("--maps", required=True, help="output mapping TSV to evaluate")
    p.add_argument("--refs", help="reference equivalence TSV")
    p.add_argument("--ignored", help="reference TSV to ignore on both sides")
    _add_pair_args(p)

    p = sub.add_parser("sweep", parents=[shared],
                       help="grid-evaluate thresholds; emit a CSV of P/R/F1 cells")
    p.add_argument("--maps-dir", required=True,
                   help="directory with src2tgt.tsv, tgt2src.tsv, combined.tsv")
    p.add_argument("--refs", help="validation reference TSV")
    p.add_argument("--ignored", help="reference TSV to ignore on both sides")
    p.add_argument("--grid", help="comma-separated thresholds")
    _add_pair_args(p)

    p = sub.add_parser("run", parents=[shared], help="run the full pipeline")

    return parser


def _add_pair_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--src", help="source ontology file")
    p.add_argument("--tgt", help="target ontology file")


def _add_scorer_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scorer", choices=sorted(SCORER_ALIASES), default=None)
    p.add_argument("--endpoint", help="remote scorer base URL")


def _load_config(args) -> ExperimentConfig | None:
    return parse_config(args.config) if args.config else None


def _require(value, flag: str):
    if not value:
        raise ConfigError([f"{flag} is required (flag or config)"])
    return value


def _scorer_from_args(args, cfg: ExperimentConfig | None) -> MappingScorer:
    if args.scorer is None and cfg is not None:
        sc = cfg.scorer
    else:
        kind = SCORER_ALIASES[args.scorer or "string"]
        sc = ScorerConfig(kind=kind, endpoint=args.endpoint or None)
        if cfg is not None:
            sc.batch_size = cfg.scorer.batch_size
            sc.timeout_ms = cfg.scorer.timeout_ms
            sc.max_inflight = cfg.scorer.max_inflight
    return MappingScorer(sc)


def _load_pair(args, cfg: ExperimentConfig | None):
    src_path = args.src or (cfg.source if cfg else None)
    tgt_path = args.tgt or (cfg.target if cfg else None)
    _require(src_path, "--src")
    _require(tgt_path, "--tgt")
    props = cfg.label_properties if cfg and cfg.label_properties else None
    kwargs = {"label_properties": props} if props else {}
    return load_ontology(src_path, **kwargs), load_ontology(tgt_path, **kwargs)


def _out_dir(args, cfg: ExperimentConfig | None) -> Path:
    out = Path(args.out or (cfg.out_dir if cfg else "") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(obj: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _cmd_convert(args) -> int:
    _require(args.out, "--out")
    props = args.label_prop or list(DEFAULT_LABEL_PROPERTIES)
    onto = load_ontology(args.input, label_properties=props)
    save_ontology_json(onto, args.out)
    log.info("wrote %s (%d classes)", args.out, len(onto))
    return 0


def _cmd_corpus(args) -> int:
    cfg = _load_config(args)
    if cfg is None:
        raise ConfigError(["corpus requires --config (ontologies, flags, seed)"])
    out = _out_dir(args, cfg)
    kwargs = {"label_properties": cfg.label_properties} if cfg.label_properties else {}
    src = load_ontology(cfg.source, **kwargs)
    tgt = load_ontology(cfg.target, **kwargs)
    corpora = {}
    if cfg.corpus_io:
        corpora["intra-src"] = build_intra_corpus(src, cfg.corpus)
        corpora["intra-tgt"] = build_intra_corpus(tgt, cfg.corpus)
    if cfg.corpus.use_co:
        refs_path = _require(cfg.refs_equivalence, "references.equivalence")
        refs = load_mappings(refs_path, src, tgt, kind="reference-eq")
        train, _val, _test = split_references(refs, cfg.split)
        corpora["cross"] = build_cross_corpus(src, tgt, train, cfg.corpus)
    if cfg.corpus.use_cp and cfg.auxiliary:
        aux = load_ontology(cfg.auxiliary, **kwargs)
        corpora["comp"] = build_comp_corpus(src, tgt, aux, cfg.corpus)
    if not corpora:
        raise ConfigError(["no corpus sources enabled (corpus.io/co/cp all off)"])
    train_c, val_c = merge_and_split(list(corpora.values()), cfg.corpus_val_fraction)
    save_corpus(train_c, str(out / "train.jsonl"))
    save_corpus(val_c, str(out / "val.jsonl"))
    _write_json(corpus_manifest(corpora, train_c, val_c, cfg.corpus_val_fraction),
                out / "manifest.json")
    log.info("wrote %s (%d train / %d val samples)", out, len(train_c), len(val_c))
    return 0


def _cmd_index(args) -> int:
    cfg = _load_config(args)
    tgt_path = _require(args.tgt or (cfg.target if cfg else None), "--tgt")
    vocab_path = _require(args.vocab or (cfg.vocab if cfg else None), "--vocab")
    _require(args.out, "--out")
    kwargs = ({"label_properties": cfg.label_properties}
              if cfg and cfg.label_properties else {})
    onto = load_ontology(tgt_path, **kwargs)
    index = SubwordIndex(onto, WordPieceTokenizer.from_file(vocab_path))
    _write_json(index.to_json_dict(), Path(args.out))
    log.info("wrote %s", args.out)
    return 0


def _cmd_predict(args) -> int:
    cfg = _load_config(args)
    src, tgt = _load_pair(args, cfg)
    vocab_path = _require(args.vocab or (cfg.vocab if cfg else None), "--vocab")
    scorer = _scorer_from_args(args, cfg)
    scorer.health_check()
    k = args.k if args.k is not None else (cfg.k if cfg else DEFAULT_TOP_K)
    workers = resolve_workers(args.workers if args.workers is not None
                              else (cfg.workers if cfg else 0))
    out = _out_dir(args, cfg)

    tokenizer = WordPieceTokenizer.from_file(vocab_path)
    if args.direction == "both":
        runs = predict_all(src, tgt, SubwordIndex(src, tokenizer),
                           SubwordIndex(tgt, tokenizer), scorer, k, workers)
    elif args.direction == "src2tgt":
        runs = {"src2tgt": predict_direction(src, tgt, SubwordIndex(tgt, tokenizer),
                                             scorer, k, workers, "src2tgt")}
    else:
        from ontomatch.predict import PredictionRun, flip

        rev = predict_direction(tgt, src, SubwordIndex(src, tokenizer),
                                scorer, k, workers, "tgt2src")
        runs = {"tgt2src": PredictionRun(flip(rev.mappings), "tgt2src", rev.stats,
                                         rev.config, rev.elapsed_s)}
    for name, run in runs.items():
        save_mappings(run.mappings, src, tgt, str(out / f"{name}.tsv"))
    _write_json(run_report(runs, seed=cfg.seed if cfg else None),
                out / "predict_report.json")
    log.info("wrote %s", out)
    return 0


def _cmd_extend(args) -> int:
    cfg = _load_config(args)
    src, tgt = _load_pair(args, cfg)
    scorer = _scorer_from_args(args, cfg)
    scorer.health_check()
    kappa = args.kappa if args.kappa is not None else (
        cfg.extension.kappa if cfg else ExtensionConfig().kappa)
    workers = resolve_workers(args.workers if args.workers is not None
                              else (cfg.workers if cfg else 0))
    out = _out_dir(args, cfg)
    maps = load_mappings(args.maps, src, tgt)
    result = extend(maps, src, tgt, scorer, ExtensionConfig(kappa=kappa), workers)
    save_mappings(result.mappings, src, tgt, str(out / "extended.tsv"))
    save_mappings(combine(maps, result.mappings), src, tgt, str(out / "union.tsv"))
    log.info("extended %d mapping(s) in %d generation(s)",
             len(result.mappings), result.generations)
    return 0


def _cmd_repair(args) -> int:
    cfg = _load_config(args)
    src, tgt = _load_pair(args, cfg)
    out = _out_dir(args, cfg)
    use_siblings = not args.no_sibling_disjointness and (
        cfg.sibling_disjointness if cfg else True)
    maps = load_mappings(args.maps, src, tgt)
    problem = build_repair_problem(src, tgt, maps, use_siblings)
    unsat_before = count_unsat(problem)
    kept, removed, unsat_remaining = repair(problem)
    save_mappings(kept, src, tgt, str(out / "kept.tsv"))
    save_mappings(removed, src, tgt, str(out / "removed.tsv"))
    _write_json(repair_report(kept, removed, unsat_before, unsat_remaining, src, tgt),
                out / "repair_report.json")
    log.info("kept %d, removed %d, %d unsatisfiable remaining",
             len(kept), len(removed), len(unsat_remaining))
    return 0


def _cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    src, tgt = _load_pair(args, cfg)
    refs_path = _require(args.refs or (cfg.refs_equivalence if cfg else None), "--refs")
    maps = load_mappings(args.maps, src, tgt)
    refs = load_mappings(refs_path, src, tgt, kind="reference-eq")
    ignored_path = args.ignored or (cfg.refs_ignored if cfg else None)
    ignored = (load_mappings(ignored_path, src, tgt, kind="reference-ignored")
               if ignored_path else None)
    report = evaluate(maps, refs, ignored)
    if args.out:
        _write_json(report.to_dict(), Path(args.out))
    else:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    log.info("precision %.4f recall %.4f f1 %.4f",
             report.precision, report.recall, report.f1)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    src, tgt = _load_pair(args, cfg)
    refs_path = _require(args.refs or (cfg.refs_equivalence if cfg else None), "--refs")
    _require(args.out, "--out")
    maps_dir = Path(args.maps_dir)
    scored = {}
    for direction in ("src2tgt", "tgt2src", "combined"):
        path = maps_dir / f"{direction}.tsv"
        if path.exists():
            scored[direction] = load_mappings(str(path), src, tgt)
    if not scored:
        raise ConfigError([f"no direction TSVs found under {maps_dir}"])
    refs = load_mappings(refs_path, src, tgt, kind="reference-eq")
    ignored_path = args.ignored or (cfg.refs_ignored if cfg else None)
    ignored = (load_mappings(ignored_path, src, tgt, kind="reference-ignored")
               if ignored_path else None)
    if args.grid:
        grid = [float(x) for x in args.grid.split(",")]
    else:
        grid = list(cfg.lambda_grid) if cfg else list(DEFAULT_LAMBDA_GRID)
    tau, lam, rows = validate_hyperparams(scored, refs, ignored, grid)
    write_grid_csv(rows, args.out)
    log.info("best cell: direction=%s threshold=%s", tau, lam)
    return 0


def _cmd_run(args) -> int:
    if not args.config:
        raise ConfigError(["run requires --config"])
    cfg = parse_config(args.config)
    summary = run_experiment(cfg, out_dir=args.out, workers=args.workers)
    log.info("test precision %.4f recall %.4f f1 %.4f",
             summary["test"]["precision"], summary["test"]["recall"],
             summary["test"]["f1"])
    return 0


_COMMANDS = {
    "convert": _cmd_convert,
    "corpus": _cmd_corpus,
    "index": _cmd_index,
    "predict": _cmd_predict,
    "extend": _cmd_extend,
    "repair": _cmd_repair,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return _COMMANDS[args.command](args)
    except OntomatchError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
