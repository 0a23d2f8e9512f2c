"""Dataset ingest and batch encryption.

Sources are streams of labeled images: CIFAR-10 binary batches (3073
bytes per record: one label byte, then 1024 R, 1024 G, 1024 B values
row-major 32x32) or folders with one subdirectory per class. Batch
encryption writes ``out_dir/<label>/<source_id>.png`` plus a
``manifest.json`` recording geometry, restriction parameters, the key
fingerprint, per-file content digests and per-label counts. The
manifest never contains seed material, so it can travel with the
encrypted images to an untrusted trainer.

Per-item work is independent, so re-running with identical inputs
rewrites identical bytes; items are sorted by path before the manifest
is serialized to keep it deterministic regardless of completion order.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .cipher import BlockCipher
from .errors import DatasetFormatError, ValidationError
from .imagecodec import read_image, write_encrypted_image
from .keys import EncryptionKey

CIFAR_RECORD_BYTES = 3073
CIFAR_CLASSES = 10
MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1


@dataclass(frozen=True, eq=False)
class LabeledImage:
    image: np.ndarray
    label: int
    source_id: str


@dataclass
class ManifestItem:
    path: str
    label: int
    digest: str


@dataclass
class DatasetManifest:
    fingerprint: str
    p: int
    n_bs: int
    n_ps: int
    h: int
    w: int
    c: int
    items: list[ManifestItem] = field(default_factory=list)
    schema_version: int = MANIFEST_VERSION

    @property
    def counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for item in self.items:
            counts[item.label] = counts.get(item.label, 0) + 1
        return counts

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "fingerprint": self.fingerprint,
            "p": self.p,
            "n_bs": self.n_bs,
            "n_ps": self.n_ps,
            "geometry": {"h": self.h, "w": self.w, "c": self.c},
            "counts": {str(k): v for k, v in sorted(self.counts.items())},
            "items": [
                {"path": it.path, "label": it.label, "digest": it.digest}
                for it in self.items
            ],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "DatasetManifest":
        try:
            geom = raw["geometry"]
            manifest = cls(
                fingerprint=raw["fingerprint"],
                p=raw["p"], n_bs=raw["n_bs"], n_ps=raw["n_ps"],
                h=geom["h"], w=geom["w"], c=geom["c"],
                schema_version=raw["schema_version"],
            )
            manifest.items = [
                ManifestItem(path=it["path"], label=it["label"], digest=it["digest"])
                for it in raw["items"]
            ]
        except (KeyError, TypeError) as exc:
            raise DatasetFormatError(f"malformed manifest: {exc}") from None
        if manifest.schema_version != MANIFEST_VERSION:
            raise DatasetFormatError(
                f"unsupported manifest schema_version {manifest.schema_version}"
            )
        return manifest


def save_manifest(manifest: DatasetManifest, path) -> None:
    Path(path).write_text(
        json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8"
    )


def load_manifest(path) -> DatasetManifest:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetFormatError(f"{path}: unreadable manifest: {exc}") from None
    return DatasetManifest.from_dict(raw)


def read_cifar10(path) -> Iterator[LabeledImage]:
    """Stream records from a CIFAR-10 binary batch file or a directory
    of ``*.bin`` batches (sorted by name)."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.bin"))
        if not files:
            raise DatasetFormatError(f"{path}: no *.bin batch files found")
    else:
        files = [path]
    for batch in files:
        data = batch.read_bytes()
        if len(data) == 0 or len(data) % CIFAR_RECORD_BYTES != 0:
            raise DatasetFormatError(
                f"{batch}: size {len(data)} is not a positive multiple of "
                f"{CIFAR_RECORD_BYTES}"
            )
        count = len(data) // CIFAR_RECORD_BYTES
        for i in range(count):
            record = data[i * CIFAR_RECORD_BYTES : (i + 1) * CIFAR_RECORD_BYTES]
            label = record[0]
            if label >= CIFAR_CLASSES:
                raise DatasetFormatError(
                    f"{batch}: record {i} has label {label} > {CIFAR_CLASSES - 1}"
                )
            pixels = (
                np.frombuffer(record, dtype=np.uint8, offset=1)
                .reshape(3, 32, 32)
                .transpose(1, 2, 0)
                .copy()
            )
            yield LabeledImage(image=pixels, label=int(label),
                               source_id=f"{batch.stem}-{i:05d}")


def iter_image_folder(root) -> Iterator[LabeledImage]:
    """Labeled images from ``root/<class>/*.png|ppm|pgm``; class labels are
    assigned by sorted subdirectory name."""
    root = Path(root)
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise DatasetFormatError(f"{root}: no class subdirectories")
    for label, class_dir in enumerate(class_dirs):
        files = sorted(
            f for f in class_dir.iterdir()
            if f.suffix.lower() in (".png", ".ppm", ".pgm")
        )
        for f in files:
            pixels, _ = read_image(f)
            yield LabeledImage(image=pixels, label=label, source_id=f.stem)


def resize_nearest(img: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Nearest-neighbor resize by index replication (no value blending).

    Source row for output row i is ``i * h // target_h``; integer
    upscales become exact tile replication (32 -> 224 tiles each source
    pixel 7x7).
    """
    if target_h <= 0 or target_w <= 0:
        raise ValidationError(f"resize target must be positive, got "
                              f"{target_h}x{target_w}")
    if img.ndim != 3:
        raise ValidationError("image must be (h, w, c)")
    h, w = img.shape[:2]
    if (h, w) == (target_h, target_w):
        return img
    rows = (np.arange(target_h) * h) // target_h
    cols = (np.arange(target_w) * w) // target_w
    return img[rows][:, cols]


def _digest_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def encrypt_dataset(
    source: Iterable[LabeledImage],
    key: EncryptionKey,
    out_dir,
    *,
    resize_to: tuple[int, int] | None = None,
    codec: str = "png",
    workers: int = 1,
) -> DatasetManifest:
    """Encrypt every item under one key and write tree + manifest.

    ``out_dir`` must be empty/absent for a fresh run; a directory that
    already holds a manifest is treated as a restart and overwritten
    deterministically. A geometry mismatch aborts with a summary naming
    the offending item.
    """
    if codec not in ("png", "ppm"):
        raise ValidationError(f"codec must be 'png' or 'ppm', got {codec!r}")
    out_dir = Path(out_dir)
    if out_dir.exists():
        occupied = any(out_dir.iterdir())
        if occupied and not (out_dir / MANIFEST_NAME).exists():
            raise ValidationError(
                f"{out_dir}: directory is not empty and holds no manifest; "
                "refusing to mix with unknown content"
            )
    out_dir.mkdir(parents=True, exist_ok=True)

    cipher = BlockCipher(key)
    suffix = ".png" if codec == "png" else ".ppm"

    def process(item: LabeledImage, position: int) -> ManifestItem:
        pixels = item.image
        if resize_to is not None:
            pixels = resize_nearest(pixels, *resize_to)
        if pixels.shape != key.geometry():
            raise ValidationError(
                f"item '{item.source_id}' (#{position}): geometry "
                f"{pixels.shape} does not match key geometry {key.geometry()}"
            )
        rel = Path(str(item.label)) / f"{item.source_id}{suffix}"
        target = out_dir / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        write_encrypted_image(target, cipher.encrypt(pixels))
        return ManifestItem(
            path=rel.as_posix(), label=item.label, digest=_digest_file(target)
        )

    items: list[ManifestItem] = []
    if workers <= 1:
        for position, item in enumerate(source):
            items.append(process(item, position))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            items = list(pool.map(process, source, range(10**12)))

    items.sort(key=lambda it: it.path)
    manifest = DatasetManifest(
        fingerprint=cipher.fingerprint,
        p=key.p, n_bs=key.n_bs, n_ps=key.n_ps,
        h=key.h, w=key.w, c=key.c,
        items=items,
    )
    save_manifest(manifest, out_dir / MANIFEST_NAME)
    return manifest
