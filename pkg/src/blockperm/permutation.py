"""Restricted random permutations: generation, application, inversion.

A permutation of length ``n`` is stored as an index vector ``map`` where
``map[j]`` is the source index feeding destination ``j`` (zero-based).
The equivalent dense matrix ``E`` has ``E[i, j] = 1`` iff ``map[j] = i``;
applying the permutation to a row vector ``v`` is then ``v @ E``, which
equals the gather ``v[map]``. The index vector is the canonical
representation; dense matrices are exported only for small sizes and
oracle-style checks.

A *restricted* permutation keeps a chosen number of positions fixed
(``map[j] = j``) and shuffles the rest uniformly. With all positions
fixed it is the identity; with none it is an ordinary uniform random
permutation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .rng import SeededStream


def _as_readonly_map(values) -> np.ndarray:
    arr = np.array(values, dtype=np.int64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Permutation:
    """Bijection on {0..length-1} in index-vector form.

    ``fixed_positions`` records the positions that were deliberately
    pinned when the permutation was generated under a restriction; it is
    None for permutations built from a raw map. The residual shuffle may
    fix further positions by chance, so ``count_fixed_points`` can
    exceed ``len(fixed_positions)``.

    Instances are immutable (the map array is marked read-only) and safe
    to share across threads.
    """

    map: np.ndarray
    fixed_positions: Optional[tuple[int, ...]] = field(default=None)

    def __post_init__(self):
        arr = _as_readonly_map(self.map)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("permutation map must be a non-empty 1-d vector")
        if not np.array_equal(np.sort(arr), np.arange(arr.size)):
            raise ValidationError("map is not a bijection on {0..length-1}")
        object.__setattr__(self, "map", arr)
        if self.fixed_positions is not None:
            fixed = tuple(sorted(int(p) for p in self.fixed_positions))
            for p in fixed:
                if arr[p] != p:
                    raise ValidationError(
                        f"declared fixed position {p} is not fixed by the map"
                    )
            object.__setattr__(self, "fixed_positions", fixed)

    @property
    def length(self) -> int:
        return int(self.map.size)

    @property
    def n_fixed(self) -> Optional[int]:
        """Restriction parameter used at generation, if known."""
        if self.fixed_positions is None:
            return None
        return len(self.fixed_positions)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self.map, other.map)

    def __repr__(self) -> str:
        return f"Permutation(length={self.length}, map={self.map.tolist()})"


@dataclass(frozen=True)
class RestrictionSpec:
    """How many positions of a permutation stay fixed, and which.

    ``fixed_positions`` may be left None, in which case generation draws
    ``n_fixed`` distinct positions from the stream before shuffling the
    rest. When given, it must hold exactly ``n_fixed`` distinct in-range
    positions.
    """

    length: int
    n_fixed: int
    fixed_positions: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.length <= 0:
            raise ValidationError(f"length must be positive, got {self.length}")
        if not 0 <= self.n_fixed <= self.length:
            raise ValidationError(
                f"n_fixed must be in [0, {self.length}], got {self.n_fixed}"
            )
        if self.fixed_positions is not None:
            fixed = tuple(sorted(int(p) for p in self.fixed_positions))
            if len(set(fixed)) != len(fixed):
                raise ValidationError("fixed_positions contains duplicates")
            if len(fixed) != self.n_fixed:
                raise ValidationError(
                    f"fixed_positions has {len(fixed)} entries, expected {self.n_fixed}"
                )
            if fixed and (fixed[0] < 0 or fixed[-1] >= self.length):
                raise ValidationError("fixed_positions out of range")
            object.__setattr__(self, "fixed_positions", fixed)


def identity(length: int) -> Permutation:
    """The identity permutation (everything fixed)."""
    if length <= 0:
        raise ValidationError(f"length must be positive, got {length}")
    return Permutation(np.arange(length), tuple(range(length)))


def generate_permutation(stream: SeededStream, spec: RestrictionSpec) -> Permutation:
    """Draw a restricted random permutation from a deterministic stream.

    Draw order is pinned so that identical (seed, spec) pairs give
    identical results everywhere:

    1. If ``spec.fixed_positions`` is None and ``n_fixed > 0``, the fixed
       positions are sampled without replacement (each draw removes one
       entry from the ascending candidate list) and then sorted.
    2. The remaining sources, in ascending position order, are shuffled
       with an unbiased decreasing-index swap shuffle (Fisher-Yates with
       rejection-sampled bounded draws).

    The returned permutation fixes every designated position; the
    residual shuffle is uniform over the leftover positions and may fix
    more of them by chance.
    """
    if spec.fixed_positions is not None:
        fixed = spec.fixed_positions
    elif spec.n_fixed > 0:
        candidates = list(range(spec.length))
        chosen = []
        for _ in range(spec.n_fixed):
            chosen.append(candidates.pop(stream.randbelow(len(candidates))))
        fixed = tuple(sorted(chosen))
    else:
        fixed = ()

    fixed_set = set(fixed)
    free = [j for j in range(spec.length) if j not in fixed_set]
    values = list(free)
    for i in range(len(values) - 1, 0, -1):
        j = stream.randbelow(i + 1)
        values[i], values[j] = values[j], values[i]

    perm_map = np.arange(spec.length, dtype=np.int64)
    perm_map[free] = values
    return Permutation(perm_map, fixed)


def apply(perm: Permutation, v) -> np.ndarray:
    """Permute a vector: ``out[j] = v[perm.map[j]]``.

    Equivalent to the row-vector product ``v @ to_dense(perm)``.
    """
    arr = np.asarray(v)
    if arr.shape[0] != perm.length:
        raise ValidationError(
            f"vector length {arr.shape[0]} != permutation length {perm.length}"
        )
    return arr[perm.map]


def inverse(perm: Permutation) -> Permutation:
    """Inverse permutation: ``inv.map[perm.map[j]] = j``.

    In matrix form this is the transpose, since permutation matrices are
    orthogonal.
    """
    inv_map = np.empty(perm.length, dtype=np.int64)
    inv_map[perm.map] = np.arange(perm.length)
    return Permutation(inv_map, perm.fixed_positions)


def compose(first: Permutation, then: Permutation) -> Permutation:
    """Permutation equivalent to applying ``first``, then ``then``."""
    if first.length != then.length:
        raise ValidationError(
            f"cannot compose permutations of lengths {first.length} and {then.length}"
        )
    return Permutation(first.map[then.map])


def to_dense(perm: Permutation) -> np.ndarray:
    """Dense 0/1 matrix with ``E[i, j] = 1`` iff ``map[j] = i``.

    Intended for small lengths (tests and debugging); the matrix is
    length x length.
    """
    if perm.length > 1024:
        raise ValidationError(
            f"dense export limited to length <= 1024, got {perm.length}"
        )
    dense = np.zeros((perm.length, perm.length), dtype=np.int64)
    dense[perm.map, np.arange(perm.length)] = 1
    return dense


def count_fixed_points(perm: Permutation) -> int:
    """Number of positions j with ``map[j] = j``."""
    return int(np.count_nonzero(perm.map == np.arange(perm.length)))


def save_permutation(perm: Permutation, path) -> None:
    """Write the text export: ``length n_fixed`` then the zero-based map.

    ``n_fixed`` is the generation-time restriction when known, otherwise
    the realized fixed-point count.
    """
    n_fixed = perm.n_fixed
    if n_fixed is None:
        n_fixed = count_fixed_points(perm)
    lines = [
        f"{perm.length} {n_fixed}",
        " ".join(str(int(x)) for x in perm.map),
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_permutation(path) -> Permutation:
    """Read the text export written by :func:`save_permutation`."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 2:
        raise ValidationError(f"{path}: expected 2 lines, got {len(lines)}")
    try:
        length, n_fixed = (int(tok) for tok in lines[0].split())
        perm_map = [int(tok) for tok in lines[1].split()]
    except ValueError as exc:
        raise ValidationError(f"{path}: non-integer token: {exc}") from None
    if len(perm_map) != length:
        raise ValidationError(
            f"{path}: header says length {length}, map has {len(perm_map)} entries"
        )
    perm = Permutation(perm_map)
    if not 0 <= n_fixed <= count_fixed_points(perm):
        raise ValidationError(
            f"{path}: declared n_fixed {n_fixed} inconsistent with map"
        )
    return perm
