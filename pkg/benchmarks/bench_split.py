"""Benchmark the tree split-search kernel: numba JIT vs pure NumPy.

Run:  python benchmarks/bench_split.py
The same comparison at the forest level toggles visus.kernels.USE_NUMBA.
Set VISUS_NO_NUMBA=1 to see the package-wide fallback in action.
"""

import time

import numpy as np

from visus import kernels
from visus.predict.trees import TreeEnsembleRegressor


def bench_kernel(n=8000, p=60, repeats=5):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(n, p))
    y = rng.normal(size=n)
    feats = np.arange(p, dtype=np.int64)

    if kernels.HAVE_NUMBA:
        kernels._best_split_numba(X[:64], y[:64], feats, 2)  # compile outside timing

    timings = {}
    for name, fn in (
        ("numpy", kernels._best_split_numpy),
        ("numba", kernels._best_split_numba if kernels.HAVE_NUMBA else None),
    ):
        if fn is None:
            continue
        best = min(
            _timed(fn, X, y, feats)
            for _ in range(repeats)
        )
        timings[name] = best
    return timings


def _timed(fn, X, y, feats):
    start = time.perf_counter()
    fn(X, y, feats, 2)
    return time.perf_counter() - start


def bench_forest(n=4000, p=60, trees=10):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(n, p))
    y = X[:, 0] * 0.5 + rng.normal(size=n) * 0.1
    timings = {}
    modes = [("numpy", False)]
    if kernels.HAVE_NUMBA:
        modes.append(("numba", True))
    saved = kernels.USE_NUMBA
    try:
        for name, use in modes:
            kernels.USE_NUMBA = use
            start = time.perf_counter()
            TreeEnsembleRegressor(kind="random_forest", n_estimators=trees,
                                  max_depth=8, seed=3).fit(X, y)
            timings[name] = time.perf_counter() - start
    finally:
        kernels.USE_NUMBA = saved
    return timings


def main():
    print(f"numba available: {kernels.HAVE_NUMBA}; package default: "
          f"{'numba' if kernels.USE_NUMBA else 'numpy'}")
    kernel = bench_kernel()
    print("\nsingle split search (8000 x 60):")
    for name, t in kernel.items():
        print(f"  {name:6s} {1000 * t:8.2f} ms")
    if len(kernel) == 2:
        print(f"  speedup {kernel['numpy'] / kernel['numba']:.2f}x")
    forest = bench_forest()
    print("\nrandom forest fit (4000 x 60, 10 trees, depth 8):")
    for name, t in forest.items():
        print(f"  {name:6s} {t:8.2f} s")
    if len(forest) == 2:
        print(f"  speedup {forest['numpy'] / forest['numba']:.2f}x")


if __name__ == "__main__":
    main()
