"""How scrambled is a ciphertext: numbers and contact sheets.

The report quantifies one (plain, cipher, key) triple: realized fixed
points of both permutations, mean Manhattan displacement of blocks on
the grid, pixel-level Pearson correlation and PSNR between plain and
cipher. PSNR of an identical pair is infinite and is serialized as the
string ``"inf"`` rather than a large float. The contact sheet renders
one labeled tile per restriction setting next to the plain image, with
per-setting keys derived deterministically from a caller seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .cipher import BlockCipher, EncryptedImage, encrypt
from .errors import KeyMismatchError, ValidationError
from .keys import EncryptionKey, derive_key
from .keys import fingerprint as key_fingerprint
from .permutation import Permutation, count_fixed_points

CSV_HEADER = "n_bs,n_ps,fixed_bs,fixed_ps,mean_block_displacement,correlation,psnr_db"


@dataclass(frozen=True)
class EncryptionReport:
    n_bs: int
    n_ps: int
    fixed_bs: int  # realized fixed points of the block permutation
    fixed_ps: int  # realized fixed points of the pixel permutation
    mean_block_displacement: float
    correlation: float
    psnr_db: float

    def to_json_dict(self) -> dict:
        out = {
            "n_bs": self.n_bs,
            "n_ps": self.n_ps,
            "fixed_bs": self.fixed_bs,
            "fixed_ps": self.fixed_ps,
            "mean_block_displacement": self.mean_block_displacement,
            "correlation": self.correlation,
            "psnr_db": "inf" if math.isinf(self.psnr_db) else self.psnr_db,
        }
        return out

    def csv_row(self) -> str:
        psnr = "inf" if math.isinf(self.psnr_db) else f"{self.psnr_db:.6g}"
        return (
            f"{self.n_bs},{self.n_ps},{self.fixed_bs},{self.fixed_ps},"
            f"{self.mean_block_displacement:.6g},{self.correlation:.6g},{psnr}"
        )


def mean_block_displacement(perm: Permutation, grid_h: int, grid_w: int) -> float:
    """Mean Manhattan distance between each block's source and destination
    cells on the grid_h x grid_w lattice."""
    if perm.length != grid_h * grid_w:
        raise ValidationError(
            f"permutation length {perm.length} != grid {grid_h}x{grid_w}"
        )
    dst = np.arange(perm.length)
    src = perm.map
    dist = np.abs(dst // grid_w - src // grid_w) + np.abs(
        dst % grid_w - src % grid_w
    )
    return float(dist.mean())


def pixel_correlation(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation over all pixel values; defined as 1.0 for two
    identical constant images and 0.0 when only one side is constant."""
    x = a.reshape(-1).astype(np.float64)
    y = b.reshape(-1).astype(np.float64)
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        return 1.0 if np.array_equal(a, b) else 0.0
    r = float(np.corrcoef(x, y)[0, 1])
    return max(-1.0, min(1.0, r))


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    diff = a.astype(np.float64) - b.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 20.0 * math.log10(peak / math.sqrt(mse))


def measure(plain: np.ndarray, cipher: EncryptedImage, key: EncryptionKey) -> EncryptionReport:
    """Compute the full report; deterministic given (plain, cipher, key)."""
    if plain.shape != cipher.pixels.shape:
        raise ValidationError(
            f"geometry mismatch: plain {plain.shape} vs cipher {cipher.pixels.shape}"
        )
    if plain.shape != key.geometry():
        raise ValidationError(
            f"geometry mismatch: images {plain.shape} vs key {key.geometry()}"
        )
    if cipher.fingerprint != key_fingerprint(key):
        raise KeyMismatchError(
            f"ciphertext was produced by key {cipher.fingerprint}, "
            f"supplied key is {key_fingerprint(key)}"
        )
    bc = BlockCipher(key)
    return EncryptionReport(
        n_bs=key.n_bs,
        n_ps=key.n_ps,
        fixed_bs=count_fixed_points(bc.e_bs),
        fixed_ps=count_fixed_points(bc.e_ps),
        mean_block_displacement=mean_block_displacement(
            bc.e_bs, key.grid_h, key.grid_w
        ),
        correlation=pixel_correlation(plain, cipher.pixels),
        psnr_db=psnr(plain, cipher.pixels),
    )


_LABEL_HEIGHT = 14
_MARGIN = 4


def _render_label(text: str, width: int) -> np.ndarray:
    strip = Image.new("RGB", (width, _LABEL_HEIGHT), (255, 255, 255))
    draw = ImageDraw.Draw(strip)
    draw.text((2, 1), text, fill=(0, 0, 0), font=ImageFont.load_default())
    return np.asarray(strip, dtype=np.uint8)


def contact_sheet(
    plain: np.ndarray,
    settings: list[tuple[int, int]],
    seed,
    p: int,
    columns: int = 2,
) -> np.ndarray:
    """Grid of labeled tiles: the plain image then one encryption per
    (n_bs, n_ps) setting, each under a key derived from ``seed``."""
    if not settings:
        raise ValidationError("contact sheet needs at least one setting")
    h, w, c = plain.shape
    if c != 3:
        raise ValidationError("contact sheet expects a 3-channel image")

    tiles = [("plain", plain)]
    for n_bs, n_ps in settings:
        key = derive_key(f"{seed}/sheet/{n_bs}/{n_ps}", p=p, n_bs=n_bs,
                         n_ps=n_ps, h=h, w=w, c=c)
        tiles.append((f"n_bs={n_bs} n_ps={n_ps}", encrypt(plain, key).pixels))

    tile_h = h + _LABEL_HEIGHT
    rows = (len(tiles) + columns - 1) // columns
    sheet = np.full(
        (rows * tile_h + (rows + 1) * _MARGIN,
         columns * w + (columns + 1) * _MARGIN, 3),
        255, dtype=np.uint8,
    )
    for idx, (label, pixels) in enumerate(tiles):
        r, col = divmod(idx, columns)
        y = _MARGIN + r * (tile_h + _MARGIN)
        x = _MARGIN + col * (w + _MARGIN)
        sheet[y : y + _LABEL_HEIGHT, x : x + w] = _render_label(label, w)
        sheet[y + _LABEL_HEIGHT : y + tile_h, x : x + w] = pixels
    return sheet
