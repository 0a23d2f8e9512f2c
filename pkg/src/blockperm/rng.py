"""Deterministic keyed byte stream used for permutation generation.

The stream expands a 256-bit seed with SHA-256 in counter mode:
block ``i`` is ``SHA256(seed || i)`` with ``i`` as an 8-byte big-endian
counter. Every draw is pure integer arithmetic on those bytes, so the
same seed produces the same sequence on any platform and any run.
"""

from __future__ import annotations

import hashlib

from .errors import ValidationError

SEED_BYTES = 32

_UINT64_SPAN = 1 << 64


class SeededStream:
    """Single-owner deterministic random stream over a 256-bit seed.

    Not thread-safe: generation of independent permutations in parallel
    must use distinct streams.
    """

    def __init__(self, seed: bytes):
        if not isinstance(seed, (bytes, bytearray)):
            raise ValidationError("seed must be bytes")
        if len(seed) != SEED_BYTES:
            raise ValidationError(
                f"seed must be {SEED_BYTES} bytes, got {len(seed)}"
            )
        self._seed = bytes(seed)
        self._counter = 0
        self._pool: list[int] = []

    def _refill(self) -> None:
        digest = hashlib.sha256(
            self._seed + self._counter.to_bytes(8, "big")
        ).digest()
        self._counter += 1
        # Four big-endian uint64 per block, consumed left to right.
        self._pool = [
            int.from_bytes(digest[off : off + 8], "big") for off in (24, 16, 8, 0)
        ]

    def next_uint64(self) -> int:
        """Next 64-bit word of the stream."""
        if not self._pool:
            self._refill()
        return self._pool.pop()

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling.

        Words >= the largest multiple of ``n`` below 2**64 are discarded,
        so the result carries no modulo bias.
        """
        if n <= 0:
            raise ValidationError(f"randbelow bound must be positive, got {n}")
        if n == 1:
            return 0
        limit = _UINT64_SPAN - (_UINT64_SPAN % n)
        while True:
            word = self.next_uint64()
            if word < limit:
                return word % n
