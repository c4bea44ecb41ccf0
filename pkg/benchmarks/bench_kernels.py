#!/usr/bin/env python3
"""Time the hot kernels on both backends: numba @njit vs pure numpy.

Run from the repository root:

    python benchmarks/bench_kernels.py

The numba timings exclude the one-off JIT compile (a warmup call runs
first). Set TOKATTR_NUMBA=0 to verify the fallback is what you measure
elsewhere; this script always times the numpy path and adds the numba
path when the import succeeded.
"""

from __future__ import annotations

import time

import numpy as np

from tokattr import kernels
from tokattr.backend import NUMBA_ENABLED
from tokattr.rng import SplitMix64


def time_call(fn, *args, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def random_values(n: int, n_classes: int, seed: int) -> np.ndarray:
    gen = SplitMix64(seed)
    flat = np.array(
        [(gen.randbelow(20001) - 10000) / 10000 for _ in range((1 << n) * n_classes)]
    )
    return flat.reshape(1 << n, n_classes)


def bench_exact_combine() -> None:
    print("exact_combine: fold a (2^n x classes) coalition table into phi")
    print(f"{'n':>4} {'numpy (s)':>12} {'numba (s)':>12} {'speedup':>9}")
    for n in (10, 14, 16, 18):
        values = random_values(n, 3, seed=n)
        t_numpy = time_call(kernels._exact_combine_numpy, values, n)
        if NUMBA_ENABLED:
            weights = kernels.shapley_weights(n)
            pc = kernels.popcount_table(n)
            kernels._exact_combine_njit(values, weights, pc, n)  # warmup/compile
            t_numba = time_call(kernels._exact_combine_njit, values, weights, pc, n)
            print(f"{n:>4} {t_numpy:>12.4f} {t_numba:>12.4f} {t_numpy / t_numba:>8.1f}x")
        else:
            print(f"{n:>4} {t_numpy:>12.4f} {'-':>12} {'-':>9}")


def bench_perm_accumulate() -> None:
    print()
    print("perm_accumulate: sum walk marginals from prefix-value tables")
    print(f"{'walks':>7} {'numpy (s)':>12} {'numba (s)':>12} {'speedup':>9}")
    gen = SplitMix64(99)
    n, n_classes = 12, 3
    for walks in (2000, 8000, 20000):
        orders = np.array([gen.permutation(n) for _ in range(walks)], dtype=np.int64)
        step_values = np.random.default_rng(walks).random((walks, n + 1, n_classes))
        t_numpy = time_call(kernels._perm_accumulate_numpy, orders, step_values, n)
        if NUMBA_ENABLED:
            kernels._perm_accumulate_njit(orders, step_values, n)  # warmup/compile
            t_numba = time_call(kernels._perm_accumulate_njit, orders, step_values, n)
            print(f"{walks:>7} {t_numpy:>12.4f} {t_numba:>12.4f} {t_numpy / t_numba:>8.1f}x")
        else:
            print(f"{walks:>7} {t_numpy:>12.4f} {'-':>12} {'-':>9}")


if __name__ == "__main__":
    print(f"numba available and enabled: {NUMBA_ENABLED}")
    bench_exact_combine()
    bench_perm_accumulate()
