"""Dataset loading for encrypted-image experiments.

The harness consumes encrypted datasets only through their on-disk
interface: a ``manifest.json`` describing the tree plus the PNG files it
points at. Every file is digest-checked against the manifest before use,
and images are converted straight into patch sequences for the model.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .errors import DataError

MANIFEST_SCHEMA_VERSION = 1
_CACHE_SIZE = 2


@dataclass(frozen=True)
class ManifestItem:
    path: str
    label: int
    digest: str


@dataclass(frozen=True)
class ManifestInfo:
    """The fields of a dataset manifest the harness relies on."""

    fingerprint: str
    p: int
    n_bs: int
    n_ps: int
    h: int
    w: int
    c: int
    items: tuple[ManifestItem, ...]


@dataclass(frozen=True)
class PatchDataset:
    """Images as uint8 patch sequences, ready for the model's embed layer."""

    patches: torch.Tensor  # uint8, (N, n_patches, patch*patch*3)
    labels: torch.Tensor  # int64, (N,)
    paths: tuple[str, ...]
    image_size: int
    patch: int

    def __len__(self) -> int:
        return self.patches.shape[0]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max().item()) + 1 if len(self) else 0


@dataclass(frozen=True)
class Splits:
    train: torch.Tensor
    val: torch.Tensor
    test: torch.Tensor


def read_manifest(path: str | Path) -> ManifestInfo:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: manifest is not valid JSON: {exc}") from None
    try:
        if raw["schema_version"] != MANIFEST_SCHEMA_VERSION:
            raise DataError(
                f"{path}: unsupported manifest schema_version "
                f"{raw['schema_version']}"
            )
        geom = raw["geometry"]
        items = tuple(
            ManifestItem(path=it["path"], label=int(it["label"]),
                         digest=it["digest"])
            for it in raw["items"]
        )
        info = ManifestInfo(
            fingerprint=raw["fingerprint"],
            p=int(raw["p"]), n_bs=int(raw["n_bs"]), n_ps=int(raw["n_ps"]),
            h=int(geom["h"]), w=int(geom["w"]), c=int(geom["c"]),
            items=items,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed manifest: {exc}") from None
    if not info.items:
        raise DataError(f"{path}: manifest lists no images")
    if info.c != 3:
        raise DataError(f"{path}: expected 3-channel images, got c={info.c}")
    if info.h != info.w or info.h % info.p != 0:
        raise DataError(
            f"{path}: geometry {info.h}x{info.w} does not tile into "
            f"{info.p}x{info.p} patches"
        )
    return info


def patchify(image: np.ndarray, patch: int) -> np.ndarray:
    """(h, w, c) uint8 image -> (n_patches, patch*patch*c) rows.

    Patches are taken in row-major grid order; within a patch, pixel
    values keep their (row, col, channel) order.
    """
    h, w, c = image.shape
    gh, gw = h // patch, w // patch
    tiles = image.reshape(gh, patch, gw, patch, c).transpose(0, 2, 1, 3, 4)
    return np.ascontiguousarray(tiles).reshape(gh * gw, patch * patch * c)


def _load_png(path: Path, expected: tuple[int, int, int]) -> np.ndarray:
    with Image.open(path) as img:
        pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
    if pixels.shape != expected:
        raise DataError(
            f"{path}: image shape {pixels.shape} does not match "
            f"manifest geometry {expected}"
        )
    return pixels


_cache: OrderedDict[tuple[str, str], PatchDataset] = OrderedDict()


def load_encrypted(manifest_path: str | Path) -> tuple[ManifestInfo, PatchDataset]:
    """Load a manifest-described dataset, verifying every file digest."""
    manifest_path = Path(manifest_path)
    manifest_bytes = manifest_path.read_bytes()
    info = read_manifest(manifest_path)
    cache_key = (str(manifest_path.resolve()),
                 hashlib.sha256(manifest_bytes).hexdigest())
    if cache_key in _cache:
        _cache.move_to_end(cache_key)
        return info, _cache[cache_key]

    root = manifest_path.parent
    expected = (info.h, info.w, info.c)
    n_patches = (info.h // info.p) * (info.w // info.p)
    patches = np.empty((len(info.items), n_patches, info.p * info.p * info.c),
                       dtype=np.uint8)
    labels = np.empty(len(info.items), dtype=np.int64)
    paths = []
    for i, item in enumerate(info.items):
        file = root / item.path
        data = file.read_bytes()
        digest = hashlib.sha256(data).hexdigest()
        if digest != item.digest:
            raise DataError(
                f"{file}: digest mismatch (manifest says {item.digest[:12]}…, "
                f"file is {digest[:12]}…)"
            )
        if item.label < 0:
            raise DataError(f"{file}: negative label {item.label}")
        patches[i] = patchify(_load_png(file, expected), info.p)
        labels[i] = item.label
        paths.append(item.path)

    ds = PatchDataset(
        patches=torch.from_numpy(patches),
        labels=torch.from_numpy(labels),
        paths=tuple(paths),
        image_size=info.h,
        patch=info.p,
    )
    _cache[cache_key] = ds
    while len(_cache) > _CACHE_SIZE:
        _cache.popitem(last=False)
    return info, ds


def load_folder(root: str | Path, patch: int) -> PatchDataset:
    """Load a plain ``<root>/<label>/<name>.png`` tree (no manifest).

    Used for the unencrypted pretraining corpus; the image size is taken
    from the first file and enforced on the rest.
    """
    root = Path(root)
    class_dirs = sorted(
        (d for d in root.iterdir() if d.is_dir() and d.name.isdigit()),
        key=lambda d: int(d.name),
    )
    files = [(int(d.name), f) for d in class_dirs
             for f in sorted(d.glob("*.png"))]
    if not files:
        raise DataError(f"{root}: no <label>/<name>.png files found")

    with Image.open(files[0][1]) as img:
        h, w = img.height, img.width
    if h != w or h % patch != 0:
        raise DataError(
            f"{root}: image size {h}x{w} does not tile into "
            f"{patch}x{patch} patches"
        )
    expected = (h, w, 3)
    n_patches = (h // patch) ** 2
    patches = np.empty((len(files), n_patches, patch * patch * 3),
                       dtype=np.uint8)
    labels = np.empty(len(files), dtype=np.int64)
    paths = []
    for i, (label, file) in enumerate(files):
        patches[i] = patchify(_load_png(file, expected), patch)
        labels[i] = label
        paths.append(file.relative_to(root).as_posix())
    return PatchDataset(
        patches=torch.from_numpy(patches),
        labels=torch.from_numpy(labels),
        paths=tuple(paths),
        image_size=h,
        patch=patch,
    )


def select_classes(ds: PatchDataset,
                   class_subset: tuple[int, ...] | None) -> PatchDataset:
    """Filter to the given labels and remap them to 0..k-1 (sorted order)."""
    if class_subset is None:
        return ds
    wanted = sorted(set(class_subset))
    present = set(ds.labels.tolist())
    missing = [c for c in wanted if c not in present]
    if missing:
        raise DataError(f"classes {missing} not present in dataset")
    remap = {orig: new for new, orig in enumerate(wanted)}
    keep = [i for i, lbl in enumerate(ds.labels.tolist()) if lbl in remap]
    idx = torch.tensor(keep, dtype=torch.int64)
    return PatchDataset(
        patches=ds.patches[idx],
        labels=torch.tensor([remap[int(ds.labels[i])] for i in keep],
                            dtype=torch.int64),
        paths=tuple(ds.paths[i] for i in keep),
        image_size=ds.image_size,
        patch=ds.patch,
    )


def split_dataset(ds: PatchDataset, subset_fraction: float = 1.0) -> Splits:
    """Deterministic 80/10/10 split, stable across dataset variants.

    Within each class, files are ordered by path and assigned by index:
    every position ending in 8 goes to validation, 9 to test, the rest to
    training. Because the assignment depends only on paths — which
    encrypted variants of the same source tree share — the same source
    image lands in the same split in every variant.

    ``subset_fraction`` keeps only a leading fraction of each class's
    training list; validation and test are never subsetted.
    """
    by_class: dict[int, list[int]] = {}
    for i, lbl in enumerate(ds.labels.tolist()):
        by_class.setdefault(lbl, []).append(i)

    train: list[int] = []
    val: list[int] = []
    test: list[int] = []
    for lbl in sorted(by_class):
        order = sorted(by_class[lbl], key=lambda i: ds.paths[i])
        cls_train = []
        for pos, i in enumerate(order):
            if pos % 10 == 8:
                val.append(i)
            elif pos % 10 == 9:
                test.append(i)
            else:
                cls_train.append(i)
        if subset_fraction < 1.0:
            keep = max(1, math.ceil(subset_fraction * len(cls_train)))
            cls_train = cls_train[:keep]
        train.extend(cls_train)

    if not val or not test:
        raise DataError(
            "dataset too small to split: need at least 10 images per class"
        )
    return Splits(
        train=torch.tensor(sorted(train), dtype=torch.int64),
        val=torch.tensor(sorted(val), dtype=torch.int64),
        test=torch.tensor(sorted(test), dtype=torch.int64),
    )
