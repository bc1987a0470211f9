"""Fine-tune a base checkpoint into a binary synonym classifier.

Inputs are label pairs encoded as ``[CLS] left [SEP] right [SEP]`` and
truncated longest-first to a shared token budget.  The head is the standard
dropout + linear classifier over the [CLS] representation; training
minimizes cross-entropy with Adam, evaluates on the validation corpus at a
fixed fraction of each epoch, and keeps the checkpoint with the lowest
validation loss.
"""

import json
import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch
from transformers import AutoTokenizer, BertForSequenceClassification

from synscorer.data import Sample, load_corpus
from synscorer.errors import ConfigError

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    checkpoint: str
    max_len: int = 128
    epochs: int = 3
    batch_size: int = 32
    eval_interval: float = 0.1
    seed: int = 0
    # neither value is prescribed anywhere; both are conventional and tunable
    lr: float = 2e-5
    dropout: float = 0.1

    def validate(self) -> None:
        problems = []
        if not 0.0 < self.eval_interval <= 1.0:
            problems.append(f"eval_interval must lie in (0, 1] so each epoch gets at "
                            f"least one evaluation; got {self.eval_interval}")
        if self.epochs < 1:
            problems.append(f"epochs must be >= 1; got {self.epochs}")
        if self.batch_size < 1:
            problems.append(f"batch_size must be >= 1; got {self.batch_size}")
        if self.max_len < 8:
            problems.append(f"max_len must be >= 8; got {self.max_len}")
        if not 0.0 <= self.dropout < 1.0:
            problems.append(f"dropout must lie in [0, 1); got {self.dropout}")
        if self.lr <= 0:
            problems.append(f"lr must be positive; got {self.lr}")
        if problems:
            raise ConfigError("; ".join(problems))


@dataclass
class CheckpointMeta:
    step: int
    val_loss: float
    val_accuracy: float
    selected: bool = False


@dataclass
class TrainResult:
    out_dir: Path
    history: list[CheckpointMeta] = field(default_factory=list)

    @property
    def selected(self) -> CheckpointMeta:
        chosen = [m for m in self.history if m.selected]
        if len(chosen) != 1:
            raise AssertionError(f"{len(chosen)} checkpoints selected; expected 1")
        return chosen[0]


def _batches(tokenizer, samples: list[Sample], batch_size: int, max_len: int):
    for i in range(0, len(samples), batch_size):
        chunk = samples[i:i + batch_size]
        enc = tokenizer([s.left for s in chunk], [s.right for s in chunk],
                        truncation="longest_first", max_length=max_len,
                        padding=True, return_tensors="pt")
        yield enc, torch.tensor([s.label for s in chunk])


def _evaluate(model, tokenizer, val: list[Sample], cfg: TrainConfig) -> tuple[float, float]:
    model.eval()
    total_loss, hits = 0.0, 0
    with torch.no_grad():
        for enc, labels in _batches(tokenizer, val, cfg.batch_size, cfg.max_len):
            out = model(**enc, labels=labels)
            total_loss += float(out.loss) * len(labels)
            hits += int((out.logits.argmax(-1) == labels).sum())
    model.train()
    return total_loss / len(val), hits / len(val)


def fine_tune(train_path: str, val_path: str, cfg: TrainConfig,
              out_dir: str) -> TrainResult:
    """Train on ``train_path``, select by loss on ``val_path``, save to ``out_dir``."""
    cfg.validate()
    train_samples = load_corpus(train_path)
    val_samples = load_corpus(val_path)
    log.info("training on %d samples, validating on %d", len(train_samples),
             len(val_samples))

    torch.manual_seed(cfg.seed)
    tokenizer = AutoTokenizer.from_pretrained(cfg.checkpoint)
    model = BertForSequenceClassification.from_pretrained(
        cfg.checkpoint, num_labels=2, classifier_dropout=cfg.dropout)
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.lr)

    steps_per_epoch = math.ceil(len(train_samples) / cfg.batch_size)
    eval_every = max(1, round(steps_per_epoch * cfg.eval_interval))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    base_name = _checkpoint_name(cfg.checkpoint)
    rng = random.Random(cfg.seed)
    order = list(train_samples)
    result = TrainResult(out)
    best_loss = math.inf
    step = 0

    def evaluate_and_maybe_save():
        nonlocal best_loss
        val_loss, val_acc = _evaluate(model, tokenizer, val_samples, cfg)
        result.history.append(CheckpointMeta(step, val_loss, val_acc))
        improved = val_loss < best_loss
        if improved:
            best_loss = val_loss
            model.save_pretrained(out)
            tokenizer.save_pretrained(out)
        log.info("step %d: val loss %.4f accuracy %.4f%s", step, val_loss, val_acc,
                 " (new best)" if improved else "")

    model.train()
    try:
        for epoch in range(cfg.epochs):
            rng.shuffle(order)
            for enc, labels in _batches(tokenizer, order, cfg.batch_size, cfg.max_len):
                optimizer.zero_grad()
                model(**enc, labels=labels).loss.backward()
                optimizer.step()
                step += 1
                if step % eval_every == 0:
                    evaluate_and_maybe_save()
    except RuntimeError as exc:
        if "out of memory" in str(exc).lower():
            raise RuntimeError(f"{exc} — try a smaller batch_size than "
                               f"{cfg.batch_size}") from exc
        raise
    if not result.history or result.history[-1].step != step:
        evaluate_and_maybe_save()

    best = min(result.history, key=lambda m: (m.val_loss, m.step))
    best.selected = True
    _write_meta(out, base_name, cfg, result)
    log.info("selected checkpoint from step %d (val loss %.4f, accuracy %.4f)",
             best.step, best.val_loss, best.val_accuracy)
    return result


def _checkpoint_name(checkpoint: str) -> str:
    base_meta = Path(checkpoint) / "base_meta.json"
    if base_meta.exists():
        with open(base_meta, encoding="utf-8") as f:
            return json.load(f).get("model", Path(checkpoint).name)
    return Path(checkpoint).name


def _write_meta(out: Path, base_name: str, cfg: TrainConfig,
                result: TrainResult) -> None:
    payload = {
        "model": f"{base_name}+synonym-classifier",
        "config": {"checkpoint": cfg.checkpoint, "max_len": cfg.max_len,
                   "epochs": cfg.epochs, "batch_size": cfg.batch_size,
                   "eval_interval": cfg.eval_interval, "seed": cfg.seed,
                   "lr": cfg.lr, "dropout": cfg.dropout},
        "selected_step": result.selected.step,
        "history": [{"step": m.step, "val_loss": m.val_loss,
                     "val_accuracy": m.val_accuracy, "selected": m.selected}
                    for m in result.history],
    }
    with open(out / "meta.json", "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
