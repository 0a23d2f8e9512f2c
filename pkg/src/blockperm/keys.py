"""Encryption keys: two 256-bit seeds bound to a geometry and restriction.

A key fully determines both permutations of the cipher: seed ``k1``
drives the block permutation of the ``(h/p) * (w/p)`` grid and seed
``k2`` drives the pixel permutation within each ``p*p*c`` block. The
geometry lives inside the key so a key cannot silently be applied to
images of a different shape, which would change the permutation sizes.

Key files are versioned UTF-8 JSON with hex-encoded seeds, extension
``.pbkey``. The public fingerprint is the first 128 bits of SHA-256 over
the canonical serialization, printed as 32 hex chars; it identifies a
key without revealing seed material.
"""

from __future__ import annotations

import hashlib
import json
import os
import secrets
from dataclasses import dataclass
from pathlib import Path

from .errors import KeyFormatError, ValidationError
from .rng import SEED_BYTES, SeededStream

KEY_FILE_VERSION = 1
KEY_FILE_FIELDS = ("version", "k1", "k2", "p", "n_bs", "n_ps", "h", "w", "c")


@dataclass(frozen=True)
class EncryptionKey:
    """Immutable key: seeds k1/k2 plus patch size, restriction, geometry."""

    k1: bytes
    k2: bytes
    p: int
    n_bs: int
    n_ps: int
    h: int
    w: int
    c: int

    def __post_init__(self):
        for name in ("k1", "k2"):
            seed = getattr(self, name)
            if not isinstance(seed, bytes) or len(seed) != SEED_BYTES:
                raise ValidationError(f"{name} must be {SEED_BYTES} bytes")
        for name in ("p", "h", "w", "c"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if self.h % self.p != 0:
            raise ValidationError(f"h={self.h} not divisible by p={self.p}")
        if self.w % self.p != 0:
            raise ValidationError(f"w={self.w} not divisible by p={self.p}")
        if not 0 <= self.n_bs <= self.n_blocks:
            raise ValidationError(
                f"n_bs exceeds N={self.n_blocks} (grid {self.grid_h}x{self.grid_w})"
                if self.n_bs > self.n_blocks
                else f"n_bs must be >= 0, got {self.n_bs}"
            )
        if not 0 <= self.n_ps <= self.block_len:
            raise ValidationError(
                f"n_ps exceeds L={self.block_len} (p={self.p}, c={self.c})"
                if self.n_ps > self.block_len
                else f"n_ps must be >= 0, got {self.n_ps}"
            )

    @property
    def grid_h(self) -> int:
        return self.h // self.p

    @property
    def grid_w(self) -> int:
        return self.w // self.p

    @property
    def n_blocks(self) -> int:
        """N: number of p x p blocks in the grid."""
        return self.grid_h * self.grid_w

    @property
    def block_len(self) -> int:
        """L: vectorized block length p*p*c."""
        return self.p * self.p * self.c

    def geometry(self) -> tuple[int, int, int]:
        return (self.h, self.w, self.c)


def keygen(p: int, n_bs: int, n_ps: int, h: int, w: int, c: int = 3) -> EncryptionKey:
    """Fresh key from system entropy; all parameters validated."""
    return EncryptionKey(
        k1=secrets.token_bytes(SEED_BYTES),
        k2=secrets.token_bytes(SEED_BYTES),
        p=p, n_bs=n_bs, n_ps=n_ps, h=h, w=w, c=c,
    )


def derive_key(
    seed, p: int, n_bs: int, n_ps: int, h: int, w: int, c: int = 3
) -> EncryptionKey:
    """Deterministic key from a caller-supplied seed, for reproducible demos.

    ``seed`` may be bytes, str or int. Not for protecting real data: the
    seed is whatever entropy the caller typed.
    """
    if isinstance(seed, int):
        seed = str(seed).encode("ascii")
    elif isinstance(seed, str):
        seed = seed.encode("utf-8")
    elif not isinstance(seed, (bytes, bytearray)):
        raise ValidationError("seed must be bytes, str or int")
    k1 = hashlib.sha256(b"blockperm.k1:" + bytes(seed)).digest()
    k2 = hashlib.sha256(b"blockperm.k2:" + bytes(seed)).digest()
    return EncryptionKey(k1=k1, k2=k2, p=p, n_bs=n_bs, n_ps=n_ps, h=h, w=w, c=c)


def derive_streams(key: EncryptionKey) -> tuple[SeededStream, SeededStream]:
    """Fresh deterministic streams for the block and pixel permutations."""
    return SeededStream(key.k1), SeededStream(key.k2)


def _key_dict(key: EncryptionKey) -> dict:
    return {
        "version": KEY_FILE_VERSION,
        "k1": key.k1.hex(),
        "k2": key.k2.hex(),
        "p": key.p,
        "n_bs": key.n_bs,
        "n_ps": key.n_ps,
        "h": key.h,
        "w": key.w,
        "c": key.c,
    }


def fingerprint(key: EncryptionKey) -> str:
    """128-bit public digest of the key as 32 hex chars."""
    canonical = json.dumps(_key_dict(key), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("ascii")).hexdigest()[:32]


def save_key(key: EncryptionKey, path) -> None:
    """Write a ``.pbkey`` JSON file with owner-only permissions."""
    path = Path(path)
    payload = json.dumps(_key_dict(key), indent=2) + "\n"
    path.write_text(payload, encoding="utf-8")
    try:
        os.chmod(path, 0o600)
    except OSError:
        pass  # best effort; not all filesystems support permissions


def load_key(path) -> EncryptionKey:
    """Parse a ``.pbkey`` file; errors name the offending field."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise KeyFormatError(f"{path}: unreadable key file: {exc}") from None
    if not isinstance(raw, dict):
        raise KeyFormatError(f"{path}: key file must hold a JSON object")
    for field_name in KEY_FILE_FIELDS:
        if field_name not in raw:
            raise KeyFormatError(f"{path}: missing field '{field_name}'")
    if raw["version"] != KEY_FILE_VERSION:
        raise KeyFormatError(
            f"{path}: unsupported version {raw['version']!r} "
            f"(expected {KEY_FILE_VERSION})"
        )
    seeds = {}
    for field_name in ("k1", "k2"):
        value = raw[field_name]
        if not isinstance(value, str) or len(value) != 2 * SEED_BYTES:
            raise KeyFormatError(
                f"{path}: field '{field_name}' must be {2 * SEED_BYTES} hex chars"
            )
        try:
            seeds[field_name] = bytes.fromhex(value)
        except ValueError:
            raise KeyFormatError(
                f"{path}: field '{field_name}' is not valid hex"
            ) from None
    ints = {}
    for field_name in ("p", "n_bs", "n_ps", "h", "w", "c"):
        value = raw[field_name]
        if not isinstance(value, int) or isinstance(value, bool):
            raise KeyFormatError(f"{path}: field '{field_name}' must be an integer")
        ints[field_name] = value
    try:
        return EncryptionKey(k1=seeds["k1"], k2=seeds["k2"], **ints)
    except ValidationError as exc:
        raise KeyFormatError(f"{path}: {exc}") from None
