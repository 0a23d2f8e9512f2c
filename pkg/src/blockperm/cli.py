"""Command-line front end.

One executable, seven subcommands: ``keygen``, ``encrypt``, ``decrypt``,
``encrypt-dataset``, ``measure``, ``sheet`` and ``sweep``. Results go to
files only — stdout stays silent so the tool composes in pipelines;
diagnostics go to stderr as single-line ``blockperm: error: <category>:
<message>`` records. Exit codes: 0 success, 1 runtime failure (I/O, key
mismatch, malformed data), 2 usage or validation error. The default key
path may be supplied via the ``BLOCKPERM_KEY`` environment variable.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import CSV_HEADER, contact_sheet, measure
from .cipher import BlockCipher, encrypt
from .dataset import encrypt_dataset, iter_image_folder, read_cifar10
from .errors import (
    BlockpermError,
    DatasetFormatError,
    KeyFormatError,
    KeyMismatchError,
    ValidationError,
)
from .imagecodec import (
    read_encrypted_image,
    read_image,
    write_encrypted_image,
    write_image,
    write_png,
)
from .keys import derive_key, keygen, load_key, save_key

KEY_ENV_VAR = "BLOCKPERM_KEY"
DEFAULT_SHEET_SETTINGS = "0:0,0:768,196:0,60:350,120:500"

log = logging.getLogger("blockperm")


def _parse_geometry(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"geometry must look like 224x224x3, got {text!r}"
        )
    try:
        h, w, c = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"geometry components must be integers, got {text!r}"
        ) from None
    return h, w, c


def _parse_size(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"size must look like 224x224, got {text!r}")
    try:
        h, w = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"size components must be integers, got {text!r}"
        ) from None
    return h, w


def _parse_settings(text: str) -> list[tuple[int, int]]:
    settings = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        left, sep, right = chunk.partition(":")
        if not sep:
            raise argparse.ArgumentTypeError(
                f"setting must look like n_bs:n_ps, got {chunk!r}"
            )
        try:
            settings.append((int(left), int(right)))
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"setting components must be integers, got {chunk!r}"
            ) from None
    if not settings:
        raise argparse.ArgumentTypeError("at least one n_bs:n_ps setting required")
    return settings


def _resolve_key_path(args) -> Path:
    path = args.key or os.environ.get(KEY_ENV_VAR)
    if not path:
        raise ValidationError(
            f"no key given: pass --key or set {KEY_ENV_VAR}"
        )
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"key file not found: {path}")
    return path


def _add_key_flag(parser) -> None:
    parser.add_argument(
        "--key",
        metavar="PATH",
        help=f"key file (.pbkey); defaults to ${KEY_ENV_VAR}",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockperm",
        description="Keyed block-wise image encryption for patch-based models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-v", "--verbose", action="store_true",
        help="log progress to stderr",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    pk = sub.add_parser("keygen", help="create a key file")
    pk.add_argument("--p", type=int, required=True, help="block size in pixels")
    pk.add_argument("--n-bs", type=int, required=True,
                    help="fixed positions in the block permutation")
    pk.add_argument("--n-ps", type=int, required=True,
                    help="fixed positions in the pixel permutation")
    pk.add_argument("--geom", type=_parse_geometry, required=True,
                    metavar="HxWxC", help="image geometry, e.g. 224x224x3")
    pk.add_argument("--seed", help="derive the key from this seed instead of "
                                   "fresh randomness (demos only)")
    pk.add_argument("--out", metavar="PATH", default="blockperm.pbkey",
                    help="key file to write (default: %(default)s)")

    pe = sub.add_parser("encrypt", help="encrypt one image file")
    pe.add_argument("image", help="plain image (.png/.ppm/.pgm)")
    _add_key_flag(pe)
    pe.add_argument("--out", metavar="PATH",
                    help="ciphertext path (default: <image>.enc.png)")

    pd = sub.add_parser("decrypt", help="decrypt one image file")
    pd.add_argument("image", help="ciphertext with provenance metadata")
    _add_key_flag(pd)
    pd.add_argument("--out", metavar="PATH",
                    help="plaintext path (default: <image>.dec.png)")

    pds = sub.add_parser("encrypt-dataset",
                         help="encrypt an image-folder or CIFAR-10 binary dataset")
    pds.add_argument("source", help="class-folder tree, CIFAR-10 .bin file, "
                                    "or directory of .bin batches")
    _add_key_flag(pds)
    pds.add_argument("--out", metavar="DIR", default="encrypted",
                     help="output dataset directory (default: %(default)s)")
    pds.add_argument("--format", choices=("auto", "cifar", "folder"),
                     default="auto", help="source layout (default: %(default)s)")
    pds.add_argument("--resize", type=_parse_size, metavar="HxW",
                     help="nearest-neighbor resize applied before encryption")
    pds.add_argument("--codec", choices=("png", "ppm"), default="png",
                     help="output codec (default: %(default)s)")
    pds.add_argument("--workers", type=int, default=1,
                     help="parallel encryption workers (default: %(default)s)")

    pm = sub.add_parser("measure", help="compare a plain/cipher image pair")
    pm.add_argument("plain", help="plain image")
    pm.add_argument("cipher", help="ciphertext with provenance metadata")
    _add_key_flag(pm)
    pm.add_argument("--out", metavar="PATH", default="report.json",
                    help="JSON report path (default: %(default)s)")
    pm.add_argument("--csv", metavar="PATH",
                    help="also write the report as a one-row CSV file")

    ps = sub.add_parser("sheet", help="render a contact sheet of settings")
    ps.add_argument("image", help="plain image")
    ps.add_argument("--p", type=int, required=True, help="block size in pixels")
    ps.add_argument("--settings", type=_parse_settings,
                    default=_parse_settings(DEFAULT_SHEET_SETTINGS),
                    metavar="B:P,...",
                    help=f"n_bs:n_ps list (default: {DEFAULT_SHEET_SETTINGS})")
    ps.add_argument("--seed", default="blockperm-demo",
                    help="seed for the per-setting demo keys (default: %(default)s)")
    ps.add_argument("--columns", type=int, default=2,
                    help="tiles per row (default: %(default)s)")
    ps.add_argument("--out", metavar="PATH", default="sheet.png",
                    help="sheet path (default: %(default)s)")

    pw = sub.add_parser("sweep", help="measure a grid of settings on one image")
    pw.add_argument("image", help="plain image")
    pw.add_argument("--p", type=int, required=True, help="block size in pixels")
    pw.add_argument("--settings", type=_parse_settings, required=True,
                    metavar="B:P,...", help="n_bs:n_ps list, e.g. 0:0,196:0")
    pw.add_argument("--seed", default="blockperm-demo",
                    help="seed for the per-setting demo keys (default: %(default)s)")
    pw.add_argument("--workers", type=int, default=1,
                    help="parallel workers across settings (default: %(default)s)")
    pw.add_argument("--out", metavar="PATH", default="sweep.csv",
                    help="CSV report path (default: %(default)s)")

    return parser


def _read_plain(path) -> np.ndarray:
    pixels, _ = read_image(path)
    return pixels


def _cmd_keygen(args) -> int:
    h, w, c = args.geom
    if args.seed is not None:
        key = derive_key(args.seed, p=args.p, n_bs=args.n_bs, n_ps=args.n_ps,
                         h=h, w=w, c=c)
    else:
        key = keygen(p=args.p, n_bs=args.n_bs, n_ps=args.n_ps, h=h, w=w, c=c)
    save_key(key, args.out)
    log.info("wrote key %s", args.out)
    return 0


def _cmd_encrypt(args) -> int:
    key = load_key(_resolve_key_path(args))
    src = Path(args.image)
    out = Path(args.out) if args.out else src.with_suffix(src.suffix + ".enc.png")
    pixels = _read_plain(src)
    write_encrypted_image(out, encrypt(pixels, key))
    log.info("wrote ciphertext %s", out)
    return 0


def _cmd_decrypt(args) -> int:
    key = load_key(_resolve_key_path(args))
    src = Path(args.image)
    out = Path(args.out) if args.out else src.with_suffix(src.suffix + ".dec.png")
    enc = read_encrypted_image(src)
    pixels = BlockCipher(key).decrypt(enc)
    write_image(out, pixels)
    log.info("wrote plaintext %s", out)
    return 0


def _detect_format(source: Path) -> str:
    if source.is_file() and source.suffix.lower() == ".bin":
        return "cifar"
    if source.is_dir() and any(source.glob("*.bin")):
        return "cifar"
    return "folder"


def _cmd_encrypt_dataset(args) -> int:
    key = load_key(_resolve_key_path(args))
    source = Path(args.source)
    if not source.exists():
        raise ValidationError(f"dataset source not found: {source}")
    fmt = args.format if args.format != "auto" else _detect_format(source)
    items = read_cifar10(source) if fmt == "cifar" else iter_image_folder(source)
    manifest = encrypt_dataset(
        items, key, args.out,
        resize_to=args.resize, codec=args.codec, workers=args.workers,
    )
    log.info("wrote %d encrypted items under %s", len(manifest.items), args.out)
    return 0


def _cmd_measure(args) -> int:
    import json

    key = load_key(_resolve_key_path(args))
    plain = _read_plain(args.plain)
    cipher = read_encrypted_image(args.cipher)
    report = measure(plain, cipher, key)
    Path(args.out).write_text(
        json.dumps(report.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )
    if args.csv:
        Path(args.csv).write_text(
            CSV_HEADER + "\n" + report.csv_row() + "\n", encoding="utf-8"
        )
    log.info("wrote report %s", args.out)
    return 0


def _cmd_sheet(args) -> int:
    plain = _read_plain(args.image)
    sheet = contact_sheet(plain, args.settings, args.seed, p=args.p,
                          columns=args.columns)
    write_png(args.out, sheet)
    log.info("wrote contact sheet %s", args.out)
    return 0


def _cmd_sweep(args) -> int:
    plain = _read_plain(args.image)
    h, w, c = plain.shape

    def one(setting: tuple[int, int]) -> str:
        n_bs, n_ps = setting
        key = derive_key(f"{args.seed}/sweep/{n_bs}/{n_ps}", p=args.p,
                         n_bs=n_bs, n_ps=n_ps, h=h, w=w, c=c)
        return measure(plain, encrypt(plain, key), key).csv_row()

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(one, args.settings))
    else:
        rows = [one(s) for s in args.settings]

    Path(args.out).write_text(
        "\n".join([CSV_HEADER, *rows]) + "\n", encoding="utf-8"
    )
    log.info("wrote sweep %s (%d settings)", args.out, len(rows))
    return 0


_HANDLERS = {
    "keygen": _cmd_keygen,
    "encrypt": _cmd_encrypt,
    "decrypt": _cmd_decrypt,
    "encrypt-dataset": _cmd_encrypt_dataset,
    "measure": _cmd_measure,
    "sheet": _cmd_sheet,
    "sweep": _cmd_sweep,
}


def _fail(category: str, message: str) -> None:
    flat = " ".join(str(message).split())
    print(f"blockperm: error: {category}: {flat}", file=sys.stderr)


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse --help (0) and usage errors (2)
        return int(exc.code or 0)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="blockperm: %(message)s",
    )
    try:
        return _HANDLERS[args.command](args)
    except (ValidationError, KeyFormatError) as exc:
        _fail("validation", str(exc))
        return 2
    except KeyMismatchError as exc:
        _fail("key-mismatch", str(exc))
        return 1
    except DatasetFormatError as exc:
        _fail("dataset-format", str(exc))
        return 1
    except BlockpermError as exc:
        _fail("runtime", str(exc))
        return 1
    except OSError as exc:
        _fail("io", str(exc))
        return 1


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
