"""Command-line interface for the experiment harness.

Follows the same conventions as the encryption tool it pairs with:
stdout stays empty, diagnostics go to stderr, errors are single lines of
the form ``pbharness: error: <category>: <message>``, exit code 2 means
a usage or configuration problem and exit code 1 a runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .comparison import compare, write_report
from .config import OPTIMIZERS, ExperimentConfig
from .errors import ConfigError, DataError, HarnessError
from .synthetic import write_dataset
from .training import load_record, pretrain, train

PROG = "pbharness"


def _parse_class_subset(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}"
        ) from None


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--model-id", default="tinyvit-p16-64x2",
                     help="architecture identifier "
                          "(tinyvit-p<patch>-<dim>x<depth>)")
    sub.add_argument("--epochs", type=int, default=15)
    sub.add_argument("--batch-size", type=int, default=64)
    sub.add_argument("--lr", type=float, default=1e-4,
                     help="learning rate")
    sub.add_argument("--momentum", type=float, default=0.9)
    sub.add_argument("--weight-decay", type=float, default=5e-4)
    sub.add_argument("--optimizer", choices=OPTIMIZERS, default="sgd")
    sub.add_argument("--subset-fraction", type=float, default=1.0,
                     help="fraction of the training split to use")
    sub.add_argument("--class-subset", type=_parse_class_subset,
                     default=None, metavar="A,B,...",
                     help="restrict to these labels (remapped to 0..k-1)")
    sub.add_argument("--seed", type=int, default=0)


def _config_from_args(args: argparse.Namespace,
                      manifest_path: str,
                      weights_path: str | None) -> ExperimentConfig:
    return ExperimentConfig(
        manifest_path=manifest_path,
        model_id=args.model_id,
        weights_path=weights_path,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        momentum=args.momentum,
        weight_decay=args.weight_decay,
        optimizer=args.optimizer,
        subset_fraction=args.subset_fraction,
        class_subset=args.class_subset,
        seed=args.seed,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Train small vision transformers on encrypted image "
                    "datasets and compare encryption settings.",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    commands = parser.add_subparsers(dest="command", metavar="command")

    synth = commands.add_parser(
        "synth", help="generate a synthetic two-class image folder")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--n-per-class", type=int, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--size", type=int, default=224)
    synth.add_argument("--cell", type=int, default=16)
    synth.add_argument("--flip-prob", type=float, default=0.15)

    pre = commands.add_parser(
        "pretrain", help="train from scratch on a plain image folder")
    pre.add_argument("data", help="plain <label>/<name>.png folder")
    pre.add_argument("--out", default="weights.pt",
                     help="where to save the trained weights")
    _add_run_flags(pre)

    tr = commands.add_parser(
        "train", help="fine-tune on a manifest-described dataset")
    tr.add_argument("manifest", help="path to the dataset manifest.json")
    tr.add_argument("--weights", default=None,
                    help="pretrained weights to start from")
    tr.add_argument("--out", default="run",
                    help="directory for run.json, curves.csv, curves.png")
    _add_run_flags(tr)

    cmp_ = commands.add_parser(
        "compare", help="compare finished runs across encryption settings")
    cmp_.add_argument("runs", nargs="+", help="run.json files")
    cmp_.add_argument("--out", default="report.json")
    cmp_.add_argument("--text", default=None,
                      help="also write a plain-text table here")
    return parser


def _cmd_synth(args: argparse.Namespace) -> int:
    count = write_dataset(args.out, args.n_per_class, args.seed,
                          size=args.size, cell=args.cell,
                          flip_prob=args.flip_prob)
    logging.getLogger(PROG).info("wrote %d images to %s", count, args.out)
    return 0


def _cmd_pretrain(args: argparse.Namespace) -> int:
    config = _config_from_args(args, manifest_path="", weights_path=None)
    pretrain(args.data, config, args.out)
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args, manifest_path=args.manifest,
                               weights_path=args.weights)
    train(config, args.out)
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    records = [load_record(path) for path in args.runs]
    report = compare(records)
    write_report(report, args.out)
    if args.text is not None:
        Path(args.text).write_text(report.to_text(), encoding="utf-8")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "pretrain": _cmd_pretrain,
    "train": _cmd_train,
    "compare": _cmd_compare,
}


def _fail(category: str, message: str) -> None:
    flat = " ".join(str(message).split())
    print(f"{PROG}: error: {category}: {flat}", file=sys.stderr)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
    )
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        _fail("config", str(exc))
        return 2
    except DataError as exc:
        _fail("data", str(exc))
        return 1
    except HarnessError as exc:
        _fail("runtime", str(exc))
        return 1
    except OSError as exc:
        _fail("io", str(exc))
        return 1


def main(argv: list[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
