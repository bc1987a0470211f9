"""Experiment configuration: loading, validation, hashing, run manifests.

Config files are JSON or TOML (sniffed by leading character).  Validation is
all-at-once: every problem is collected and reported together, and unknown
keys are rejected so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - version dependent
    import tomli as tomllib

from ontomatch import __version__
from ontomatch.corpus import CorpusConfig
from ontomatch.errors import ConfigError, ParseError
from ontomatch.evaluate import (
    DEFAULT_LAMBDA_GRID,
    SEMI_SUPERVISED_FRACTIONS,
    UNSUPERVISED_FRACTIONS,
    SplitSpec,
)
from ontomatch.refine import ExtensionConfig
from ontomatch.scoring import ScorerConfig
from ontomatch.subword import DEFAULT_TOP_K

# section -> allowed keys; anything else is a config error
_SCHEMA: dict[str, set[str]] = {
    "ontologies": {"source", "target", "auxiliary", "label_properties"},
    "references": {"equivalence", "ignored"},
    "corpus": {"io", "ids", "co", "cp", "negatives_per_synonym", "soft_hard_split",
               "val_fraction", "seed"},
    "scorer": {"kind", "endpoint", "batch_size", "timeout_ms", "max_inflight"},
    "predict": {"vocab", "k"},
    "extend": {"kappa", "max_expansions"},
    "repair": {"sibling_disjointness"},
    "evaluate": {"lambda_grid"},
    "split": {"mode", "fractions", "seed"},
    "run": {"seed", "workers", "out_dir"},
}


@dataclass
class ExperimentConfig:
    source: str = ""
    target: str = ""
    auxiliary: str | None = None
    label_properties: list[str] | None = None
    refs_equivalence: str | None = None
    refs_ignored: str | None = None
    corpus_io: bool = True
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    corpus_val_fraction: float = 0.2
    scorer: ScorerConfig = field(default_factory=ScorerConfig)
    vocab: str | None = None
    k: int = DEFAULT_TOP_K
    extension: ExtensionConfig = field(default_factory=ExtensionConfig)
    sibling_disjointness: bool = True
    lambda_grid: list[float] = field(default_factory=lambda: list(DEFAULT_LAMBDA_GRID))
    split: SplitSpec = field(default_factory=SplitSpec)
    seed: int = 0
    workers: int = 0
    out_dir: str = "runs/out"

    def input_paths(self) -> list[str]:
        """Every configured input file, for digesting and fail-fast checks."""
        paths = [self.source, self.target]
        for opt in (self.auxiliary, self.refs_equivalence, self.refs_ignored, self.vocab):
            if opt:
                paths.append(opt)
        return paths


def _get(section: dict, key: str, default):
    return section.get(key, default)


def parse_config(path: str) -> ExperimentConfig:
    """Load and validate an experiment config file (JSON or TOML)."""
    with open(path, "rb") as f:
        raw_bytes = f.read()
    if raw_bytes.lstrip().startswith(b"{"):
        try:
            raw = json.loads(raw_bytes)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, path=path, line=e.lineno, column=e.colno) from e
    else:
        try:
            raw = tomllib.loads(raw_bytes.decode("utf-8"))
        except tomllib.TOMLDecodeError as e:
            raise ParseError(str(e), path=path) from e
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    problems: list[str] = []
    for name, content in raw.items():
        if name not in _SCHEMA:
            problems.append(f"{name}: unknown section")
            continue
        if not isinstance(content, dict):
            problems.append(f"{name}: expected a table/object")
            continue
        for key in content:
            if key not in _SCHEMA[name]:
                problems.append(f"{name}.{key}: unknown key")

    def section(name: str) -> dict:
        content = raw.get(name, {})
        return content if isinstance(content, dict) else {}

    onto = section("ontologies")
    refs = section("references")
    corp = section("corpus")
    scor = section("scorer")
    pred = section("predict")
    ext = section("extend")
    rep = section("repair")
    evl = section("evaluate")
    spl = section("split")
    run = section("run")

    seed = _get(run, "seed", 0)
    mode = _get(spl, "mode", "unsupervised")
    default_fracs = (SEMI_SUPERVISED_FRACTIONS if mode == "semi-supervised"
                     else UNSUPERVISED_FRACTIONS)
    co_default = mode == "semi-supervised"

    cfg = ExperimentConfig(
        source=_get(onto, "source", ""),
        target=_get(onto, "target", ""),
        auxiliary=_get(onto, "auxiliary", None),
        label_properties=_get(onto, "label_properties", None),
        refs_equivalence=_get(refs, "equivalence", None),
        refs_ignored=_get(refs, "ignored", None),
        corpus_io=_get(corp, "io", True),
        corpus=CorpusConfig(
            use_ids=_get(corp, "ids", True),
            use_co=_get(corp, "co", co_default),
            use_cp=_get(corp, "cp", False),
            negatives_per_synonym=_get(corp, "negatives_per_synonym", 4),
            soft_hard_split=tuple(_get(corp, "soft_hard_split", (2, 2))),
            seed=_get(corp, "seed", seed),
        ),
        corpus_val_fraction=_get(corp, "val_fraction", 0.2),
        scorer=ScorerConfig(
            kind=_get(scor, "kind", "string-match"),
            endpoint=_get(scor, "endpoint", None) or None,
            batch_size=_get(scor, "batch_size", 32),
            timeout_ms=_get(scor, "timeout_ms", 10_000),
            max_inflight=_get(scor, "max_inflight", 4),
        ),
        vocab=_get(pred, "vocab", None),
        k=_get(pred, "k", DEFAULT_TOP_K),
        extension=ExtensionConfig(
            kappa=_get(ext, "kappa", 0.9),
            max_expansions=_get(ext, "max_expansions", 10 ** 6),
        ),
        sibling_disjointness=_get(rep, "sibling_disjointness", True),
        lambda_grid=list(_get(evl, "lambda_grid", DEFAULT_LAMBDA_GRID)),
        split=SplitSpec(mode=mode, fractions=tuple(_get(spl, "fractions", default_fracs)),
                        seed=_get(spl, "seed", seed)),
        seed=seed,
        workers=_get(run, "workers", 0),
        out_dir=_get(run, "out_dir", "runs/out"),
    )

    if not cfg.source:
        problems.append("ontologies.source is required")
    if not cfg.target:
        problems.append("ontologies.target is required")
    if cfg.corpus.use_co and cfg.split.mode != "semi-supervised":
        problems.append("corpus.co requires split.mode = semi-supervised "
                        "(cross-ontology pairs need training mappings)")
    if cfg.corpus.use_cp and not cfg.auxiliary:
        problems.append("corpus.cp requires ontologies.auxiliary")
    if not 0.0 < cfg.corpus_val_fraction < 1.0:
        problems.append(f"corpus.val_fraction must lie in (0, 1); got {cfg.corpus_val_fraction}")
    if not cfg.lambda_grid:
        problems.append("evaluate.lambda_grid must be non-empty")
    for lam in cfg.lambda_grid:
        if not 0.0 <= lam <= 1.0:
            problems.append(f"evaluate.lambda_grid value {lam} outside [0, 1]")
    if cfg.k < 1:
        problems.append(f"predict.k must be >= 1; got {cfg.k}")
    if cfg.workers < 0:
        problems.append(f"run.workers must be >= 0; got {cfg.workers}")

    for validator in (cfg.corpus.validate, cfg.scorer.validate, cfg.extension.validate,
                      cfg.split.validate):
        try:
            validator()
        except ConfigError as e:
            problems.extend(e.problems)

    if problems:
        raise ConfigError(problems)
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Serialize to the config-file shape (parse(serialize(c)) == c)."""
    out: dict = {
        "ontologies": {"source": cfg.source, "target": cfg.target},
        "references": {},
        "corpus": {
            "io": cfg.corpus_io,
            "ids": cfg.corpus.use_ids,
            "co": cfg.corpus.use_co,
            "cp": cfg.corpus.use_cp,
            "negatives_per_synonym": cfg.corpus.negatives_per_synonym,
            "soft_hard_split": list(cfg.corpus.soft_hard_split),
            "val_fraction": cfg.corpus_val_fraction,
            "seed": cfg.corpus.seed,
        },
        "scorer": {
            "kind": cfg.scorer.kind,
            "batch_size": cfg.scorer.batch_size,
            "timeout_ms": cfg.scorer.timeout_ms,
            "max_inflight": cfg.scorer.max_inflight,
        },
        "predict": {"k": cfg.k},
        "extend": {"kappa": cfg.extension.kappa,
                   "max_expansions": cfg.extension.max_expansions},
        "repair": {"sibling_disjointness": cfg.sibling_disjointness},
        "evaluate": {"lambda_grid": list(cfg.lambda_grid)},
        "split": {"mode": cfg.split.mode, "fractions": list(cfg.split.fractions),
                  "seed": cfg.split.seed},
        "run": {"seed": cfg.seed, "workers": cfg.workers, "out_dir": cfg.out_dir},
    }
    if cfg.auxiliary:
        out["ontologies"]["auxiliary"] = cfg.auxiliary
    if cfg.label_properties is not None:
        out["ontologies"]["label_properties"] = list(cfg.label_properties)
    if cfg.refs_equivalence:
        out["references"]["equivalence"] = cfg.refs_equivalence
    if cfg.refs_ignored:
        out["references"]["ignored"] = cfg.refs_ignored
    if not out["references"]:
        del out["references"]
    if cfg.scorer.endpoint:
        out["scorer"]["endpoint"] = cfg.scorer.endpoint
    if cfg.vocab:
        out["predict"]["vocab"] = cfg.vocab
    return out


def config_hash(cfg: ExperimentConfig) -> str:
    """Content hash, stable under key reordering of the source file."""
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def digest_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def digest_inputs(cfg: ExperimentConfig) -> dict[str, str]:
    """Digest every configured input file; missing files fail before any stage."""
    return {path: digest_file(path) for path in cfg.input_paths()}


@dataclass
class RunManifest:
    tool_version: str
    config_hash: str
    seeds: dict[str, int]
    input_digests: dict[str, str]
    stage_timings_ms: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def build_manifest(cfg: ExperimentConfig, input_digests: dict[str, str],
                   stage_timings_ms: dict[str, float]) -> RunManifest:
    return RunManifest(
        tool_version=__version__,
        config_hash=config_hash(cfg),
        seeds={"run": cfg.seed, "corpus": cfg.corpus.seed, "split": cfg.split.seed},
        input_digests=input_digests,
        stage_timings_ms=stage_timings_ms,
    )


def emit_manifest(manifest: RunManifest, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
