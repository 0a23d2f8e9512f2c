"""The block-wise encryption pipeline and its exact inverse.

Encryption of an ``h x w x c`` 8-bit image under a key:

1. partition into ``N = (h/p) * (w/p)`` non-overlapping ``p x p`` blocks,
   row-major over the grid, each vectorized channel-planar (all p*p
   first-channel values row-major, then the next channel, ...), giving
   an ``N x L`` matrix with ``L = p*p*c``;
2. reorder whole blocks with the key's block permutation (out block i
   is in block ``e_bs.map[i]``);
3. apply the key's single pixel permutation to every block vector;
4. reassemble to image shape.

Both permutations only move values, so decryption applies the inverse
permutations and is bit-exact. Internally the four stages are fused into
one flat gather with a per-key precomputed index (see ``kernels``); the
staged operations remain the reference path and the two are tested for
equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import KeyMismatchError, ValidationError
from .keys import EncryptionKey, derive_streams
from .keys import fingerprint as key_fingerprint
from .permutation import (
    Permutation,
    RestrictionSpec,
    generate_permutation,
    inverse,
)


@dataclass(frozen=True, eq=False)
class BlockGrid:
    """An image partitioned into N vectorized blocks (one row each)."""

    blocks: np.ndarray  # (N, L)
    p: int
    grid_h: int
    grid_w: int
    c: int

    def __post_init__(self):
        if self.blocks.ndim != 2:
            raise ValidationError("blocks must be a 2-d (N, L) array")
        if self.blocks.shape != (self.n_blocks, self.block_len):
            raise ValidationError(
                f"blocks shape {self.blocks.shape} does not match geometry "
                f"(N={self.n_blocks}, L={self.block_len})"
            )

    @property
    def n_blocks(self) -> int:
        return self.grid_h * self.grid_w

    @property
    def block_len(self) -> int:
        return self.p * self.p * self.c


@dataclass(frozen=True, eq=False)
class EncryptedImage:
    """Cipher pixels plus provenance: which key (by fingerprint) and

    which restriction parameters produced them. Carries no seed material.
    """

    pixels: np.ndarray  # (h, w, c) uint8
    fingerprint: str
    n_bs: int
    n_ps: int

    @property
    def geometry(self) -> tuple[int, int, int]:
        return self.pixels.shape  # type: ignore[return-value]


def _check_image_shape(img: np.ndarray) -> None:
    if not isinstance(img, np.ndarray) or img.ndim != 3:
        raise ValidationError("image must be an (h, w, c) array")


def _check_pixel_dtype(img: np.ndarray) -> None:
    if img.dtype != np.uint8:
        raise ValidationError(f"image dtype must be uint8, got {img.dtype}")


def partition(img: np.ndarray, p: int) -> BlockGrid:
    """Split an image into the N x L block matrix.

    Blocks are ordered row-major over the grid (left to right, top to
    bottom); each block vector is channel-planar row-major. Accepts any
    dtype so index images can flow through the same path.
    """
    _check_image_shape(img)
    h, w, c = img.shape
    if p <= 0:
        raise ValidationError(f"p must be positive, got {p}")
    if h % p != 0 or w % p != 0:
        raise ValidationError(f"geometry {h}x{w} not divisible by p={p}")
    gh, gw = h // p, w // p
    blocks = (
        img.reshape(gh, p, gw, p, c)
        .transpose(0, 2, 4, 1, 3)
        .reshape(gh * gw, p * p * c)
    )
    return BlockGrid(blocks=blocks, p=p, grid_h=gh, grid_w=gw, c=c)


def reassemble(grid: BlockGrid) -> np.ndarray:
    """Exact inverse of :func:`partition`."""
    gh, gw, p, c = grid.grid_h, grid.grid_w, grid.p, grid.c
    return (
        grid.blocks.reshape(gh, gw, c, p, p)
        .transpose(0, 3, 1, 4, 2)
        .reshape(gh * p, gw * p, c)
    )


def scramble_blocks(grid: BlockGrid, e_bs: Permutation) -> BlockGrid:
    """Reorder whole blocks: output block i is input block ``e_bs.map[i]``."""
    if e_bs.length != grid.n_blocks:
        raise ValidationError(
            f"block permutation length {e_bs.length} != N={grid.n_blocks}"
        )
    return BlockGrid(
        blocks=grid.blocks[e_bs.map],
        p=grid.p, grid_h=grid.grid_h, grid_w=grid.grid_w, c=grid.c,
    )


def permute_pixels(grid: BlockGrid, e_ps: Permutation) -> BlockGrid:
    """Apply one pixel permutation to every block vector."""
    if e_ps.length != grid.block_len:
        raise ValidationError(
            f"pixel permutation length {e_ps.length} != L={grid.block_len}"
        )
    return BlockGrid(
        blocks=grid.blocks[:, e_ps.map],
        p=grid.p, grid_h=grid.grid_h, grid_w=grid.grid_w, c=grid.c,
    )


class BlockCipher:
    """Per-key cipher state: both permutations and the fused gather indices.

    Building one is cheap (two Fisher-Yates runs) but not free, so batch
    callers should reuse an instance; :func:`encrypt` / :func:`decrypt`
    keep a small cache keyed by the (hashable) key.
    """

    def __init__(self, key: EncryptionKey):
        self.key = key
        self.fingerprint = key_fingerprint(key)
        bs_stream, ps_stream = derive_streams(key)
        self.e_bs = generate_permutation(
            bs_stream, RestrictionSpec(key.n_blocks, key.n_bs)
        )
        self.e_ps = generate_permutation(
            ps_stream, RestrictionSpec(key.block_len, key.n_ps)
        )
        n = key.h * key.w * key.c
        idx_img = np.arange(n, dtype=np.int64).reshape(key.h, key.w, key.c)
        staged = reassemble(
            permute_pixels(
                scramble_blocks(partition(idx_img, key.p), self.e_bs), self.e_ps
            )
        )
        self._enc_index = np.ascontiguousarray(staged.reshape(n))
        self._dec_index = np.empty(n, dtype=np.int64)
        self._dec_index[self._enc_index] = np.arange(n, dtype=np.int64)

    def _check_geometry(self, img: np.ndarray) -> None:
        _check_image_shape(img)
        if img.shape != self.key.geometry():
            raise ValidationError(
                f"image geometry {img.shape} does not match key geometry "
                f"{self.key.geometry()}"
            )

    def _gather(self, img: np.ndarray, index: np.ndarray) -> np.ndarray:
        src = np.ascontiguousarray(img.reshape(-1))
        out = np.empty_like(src)
        kernels.gather_flat(src, index, out)
        return out.reshape(img.shape)

    def encrypt_pixels(self, img: np.ndarray) -> np.ndarray:
        """Permute pixel values only; no provenance attached."""
        self._check_geometry(img)
        _check_pixel_dtype(img)
        return self._gather(img, self._enc_index)

    def decrypt_pixels(self, pixels: np.ndarray) -> np.ndarray:
        self._check_geometry(pixels)
        _check_pixel_dtype(pixels)
        return self._gather(pixels, self._dec_index)

    def encrypt(self, img: np.ndarray) -> EncryptedImage:
        return EncryptedImage(
            pixels=self.encrypt_pixels(img),
            fingerprint=self.fingerprint,
            n_bs=self.key.n_bs,
            n_ps=self.key.n_ps,
        )

    def decrypt(self, enc: EncryptedImage) -> np.ndarray:
        if enc.fingerprint != self.fingerprint:
            raise KeyMismatchError(
                f"ciphertext was produced by key {enc.fingerprint}, "
                f"supplied key is {self.fingerprint}"
            )
        return self.decrypt_pixels(enc.pixels)

    def inverse_permutations(self) -> tuple[Permutation, Permutation]:
        return inverse(self.e_bs), inverse(self.e_ps)


@lru_cache(maxsize=8)
def _cipher_for(key: EncryptionKey) -> BlockCipher:
    return BlockCipher(key)


def encrypt(img: np.ndarray, key: EncryptionKey) -> EncryptedImage:
    """Encrypt one image under a key; deterministic per (image, key)."""
    return _cipher_for(key).encrypt(img)


def decrypt(enc: EncryptedImage, key: EncryptionKey) -> np.ndarray:
    """Exact inverse of :func:`encrypt`; rejects a non-matching key."""
    return _cipher_for(key).decrypt(enc)
