"""Command-line entry points: train, serve, make-base."""

import argparse
import logging
import os
import sys
from pathlib import Path

from synscorer.errors import SynscorerError

log = logging.getLogger("synscorer")

DEFAULT_BASE_CACHE = Path(
    os.environ.get("SYNSCORER_CACHE",
                   Path.home() / ".cache" / "synscorer")) / "tiny-base"


def _default_checkpoint() -> str:
    """The bundled tiny base model, built on first use and cached."""
    if not (DEFAULT_BASE_CACHE / "config.json").exists():
        log.info("no base checkpoint cached; building one at %s", DEFAULT_BASE_CACHE)
        from synscorer.tiny import make_tiny_checkpoint
        make_tiny_checkpoint(str(DEFAULT_BASE_CACHE))
    return str(DEFAULT_BASE_CACHE)


def _cmd_train(args: argparse.Namespace) -> int:
    from synscorer.train import TrainConfig, fine_tune

    cfg = TrainConfig(
        checkpoint=args.checkpoint or _default_checkpoint(),
        max_len=args.max_len,
        epochs=args.epochs,
        batch_size=args.batch_size,
        eval_interval=args.eval_interval,
        seed=args.seed,
        lr=args.lr,
        dropout=args.dropout,
    )
    result = fine_tune(args.train, args.val, cfg, args.out)
    best = result.selected
    print(f"saved checkpoint to {result.out_dir}")
    print(f"selected step {best.step}: val_loss={best.val_loss:.4f} "
          f"val_accuracy={best.val_accuracy:.4f}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from synscorer.serve import run_server

    run_server(args.ckpt, args.port, host=args.host, batch_size=args.batch_size)
    return 0


def _cmd_make_base(args: argparse.Namespace) -> int:
    from synscorer.tiny import make_tiny_checkpoint

    out = make_tiny_checkpoint(str(args.out), seed=args.seed,
                               pretrain_steps=args.steps)
    print(f"saved base checkpoint to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synscorer",
        description="Train and serve a synonym-pair classifier.")
    parser.add_argument("--log-level", default="info",
                        choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune a classifier on a pair corpus")
    p.add_argument("--train", required=True, help="training corpus (JSONL)")
    p.add_argument("--val", required=True, help="validation corpus (JSONL)")
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.add_argument("--checkpoint", default=None,
                   help="base model directory (default: bundled tiny base)")
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=2e-5)
    p.add_argument("--max-len", type=int, default=128)
    p.add_argument("--eval-interval", type=float, default=0.1,
                   help="validation frequency as a fraction of an epoch")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dropout", type=float, default=0.1)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("serve", help="serve a trained checkpoint over HTTP")
    p.add_argument("--ckpt", required=True, help="checkpoint directory")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--batch-size", type=int, default=32,
                   help="internal scoring batch size")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("make-base", help="build the tiny base checkpoint")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--steps", type=int, default=3000,
                   help="pretraining steps")
    p.set_defaults(func=_cmd_make_base)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SynscorerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
