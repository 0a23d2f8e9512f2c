"""Synthetic two-class corpus for encryption experiments.

Each image is a grid of ``cell``-sized tiles; a class-specific diagonal
mask decides which tiles are bright and which are dark, and a small
per-tile flip probability adds label noise. The discriminative signal is
*which grid positions* are bright — individual pixel values carry no
class information. Averaging a tile recovers its brightness, so the
signal survives any in-tile pixel scrambling; shuffling tile positions,
by contrast, relocates the pattern and forces a model to re-learn it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError

N_CLASSES = 2
_SEED_STRIDE = 1_000_003


def class_mask(label: int, grid: int) -> np.ndarray:
    """Boolean (grid, grid) mask of the bright tiles for a class."""
    if label not in range(N_CLASSES):
        raise ConfigError(f"label must be in 0..{N_CLASSES - 1}, got {label}")
    r, c = np.indices((grid, grid))
    if label == 0:
        return (r + c) % 4 == 0
    return (r - c) % 4 == 0


def make_image(label: int, rng: np.random.Generator, *, size: int = 224,
               cell: int = 16, flip_prob: float = 0.15) -> np.ndarray:
    """Render one (size, size, 3) uint8 image for the given class."""
    if size % cell != 0:
        raise ConfigError(f"size {size} is not divisible by cell {cell}")
    grid = size // cell
    flips = rng.random((grid, grid)) < flip_prob
    bright = rng.integers(140, 255, size=(size, size, 3), dtype=np.uint8)
    dark = rng.integers(20, 100, size=(size, size, 3), dtype=np.uint8)
    active = class_mask(label, grid) ^ flips
    sel = np.repeat(np.repeat(active, cell, axis=0), cell, axis=1)
    return np.where(sel[:, :, None], bright, dark)


def write_dataset(out_dir: str | Path, n_per_class: int, seed: int, *,
                  size: int = 224, cell: int = 16,
                  flip_prob: float = 0.15) -> int:
    """Write ``out_dir/<label>/img<k>.png`` for both classes.

    Every image gets its own child RNG derived from ``seed`` and a global
    index, so regeneration is byte-identical and independent of write
    order. Returns the number of images written.
    """
    if n_per_class < 1:
        raise ConfigError(f"n_per_class must be >= 1, got {n_per_class}")
    out_dir = Path(out_dir)
    for label in range(N_CLASSES):
        (out_dir / str(label)).mkdir(parents=True, exist_ok=True)
    for index in range(N_CLASSES * n_per_class):
        label = index % N_CLASSES
        rng = np.random.default_rng(seed * _SEED_STRIDE + index)
        image = make_image(label, rng, size=size, cell=cell,
                           flip_prob=flip_prob)
        name = out_dir / str(label) / f"img{index // N_CLASSES:05d}.png"
        Image.fromarray(image, mode="RGB").save(name, format="PNG")
    return N_CLASSES * n_per_class
