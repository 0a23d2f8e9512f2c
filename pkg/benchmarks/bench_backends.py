#!/usr/bin/env python3
"""Compare the numba and numpy gather backends on realistic image sizes.

Runs the one hot kernel (flat gather by precomputed index) through every
importable backend, checks they agree element-for-element, and prints a
timing table. Usage::

    python3 benchmarks/bench_backends.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from blockperm.cipher import BlockCipher
from blockperm.kernels import active_backend, backend_impls
from blockperm.keys import derive_key

SIZES = [
    ("cifar 32x32x3, p=8", dict(p=8, h=32, w=32)),
    ("vit 224x224x3, p=16", dict(p=16, h=224, w=224)),
    ("large 448x448x3, p=16", dict(p=16, h=448, w=448)),
]


def best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200,
                        help="timed repetitions per cell (default %(default)s)")
    args = parser.parse_args()

    impls = backend_impls()
    print(f"active backend: {active_backend()}   "
          f"available: {', '.join(sorted(impls))}")
    print(f"{'geometry':<24}" + "".join(f"{name + ' (ms)':>14}" for name in impls)
          + f"{'speedup':>10}")

    rng = np.random.default_rng(0)
    for label, geom in SIZES:
        key = derive_key(f"bench/{label}", n_bs=0, n_ps=0, c=3, **geom)
        cipher = BlockCipher(key)
        n = geom["h"] * geom["w"] * 3
        src = rng.integers(0, 256, size=n, dtype=np.uint8)
        index = cipher._enc_index
        out = np.empty_like(src)

        results = {}
        timings = {}
        for name, fn in impls.items():
            fn(src, index, out)  # warm up / jit compile
            results[name] = out.copy()
            timings[name] = best_of(lambda f=fn: f(src, index, out), args.repeats)

        first = next(iter(results.values()))
        for name, res in results.items():
            assert np.array_equal(res, first), f"{name} disagrees on {label}"

        row = f"{label:<24}" + "".join(
            f"{timings[name] * 1e3:>14.4f}" for name in impls
        )
        if len(timings) == 2:
            a, b = (timings[k] for k in impls)
            row += f"{(a / b if b else float('inf')):>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
