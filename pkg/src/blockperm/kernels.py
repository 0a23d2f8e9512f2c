"""Hot gather kernel with a numba fast path and a pure-numpy fallback.

Every image encryption or decryption reduces to one flat gather:
``out[i] = src[index[i]]`` over ``h*w*c`` elements with a precomputed
index. That gather is the only hot loop in the package, so it is the
only code carrying a JIT.

Backend selection, decided once at import:

* ``BLOCKPERM_BACKEND=numpy``  force the pure-numpy path
* ``BLOCKPERM_BACKEND=numba``  force numba (error if unavailable)
* unset                        numba when importable, else numpy

``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import BlockpermError


def _gather_flat_numpy(src: np.ndarray, index: np.ndarray, out: np.ndarray) -> np.ndarray:
    np.take(src, index, out=out)
    return out


try:
    import numba

    @numba.njit(cache=True)
    def _gather_flat_numba(src, index, out):  # pragma: no cover - jitted
        for i in range(index.shape[0]):
            out[i] = src[index[i]]
        return out

    _HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAS_NUMBA = False


_requested = os.environ.get("BLOCKPERM_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise BlockpermError(
        f"BLOCKPERM_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )
if _requested == "numba" and not _HAS_NUMBA:
    raise BlockpermError("BLOCKPERM_BACKEND=numba but numba is not importable")

if _requested == "numpy" or not _HAS_NUMBA:
    _BACKEND = "numpy"
    gather_flat = _gather_flat_numpy
else:
    _BACKEND = "numba"
    gather_flat = _gather_flat_numba


def active_backend() -> str:
    """Name of the gather backend selected at import ('numba' or 'numpy')."""
    return _BACKEND


def backend_impls() -> dict:
    """All importable gather implementations, keyed by backend name."""
    impls = {"numpy": _gather_flat_numpy}
    if _HAS_NUMBA:
        impls["numba"] = _gather_flat_numba
    return impls
