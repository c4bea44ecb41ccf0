"""Hot numeric kernels, in paired numba / pure-numpy implementations.

Both flavours of a kernel compute the same quantity; they may differ in
the last float bits because summation order differs. Reruns on one
backend are bit-identical. See ``backend`` for how the flavour is
selected and ``benchmarks/bench_kernels.py`` for a timing comparison.
"""

from __future__ import annotations

import math

import numpy as np

from .backend import NUMBA_ENABLED

if NUMBA_ENABLED:
    from numba import njit


def popcount_table(n_bits: int) -> np.ndarray:
    """Population counts for every integer in [0, 2**n_bits)."""
    size = 1 << n_bits
    table = np.zeros(size, dtype=np.int64)
    filled = 1
    while filled < size:
        table[filled : 2 * filled] = table[:filled] + 1
        filled *= 2
    return table


def shapley_weights(n: int) -> np.ndarray:
    """Coalition weights w[s] = s! (n-1-s)! / n! for s = 0..n-1."""
    fact_n = math.factorial(n)
    return np.array(
        [math.factorial(s) * math.factorial(n - 1 - s) / fact_n for s in range(n)],
        dtype=np.float64,
    )


# --- exact Shapley combination ------------------------------------------
#
# Given the full coalition value table v[mask, class] for an n-token game,
# phi[i, c] = sum over masks without bit i of
#             w[|mask|] * (v[mask | 1<<i, c] - v[mask, c]).


def _exact_combine_numpy(values: np.ndarray, n: int) -> np.ndarray:
    weights = shapley_weights(n)
    pc = popcount_table(n)
    masks = np.arange(1 << n, dtype=np.int64)
    phi = np.empty((n, values.shape[1]), dtype=np.float64)
    for i in range(n):
        without = masks[(masks >> i) & 1 == 0]
        w = weights[pc[without]]
        diff = values[without | (1 << i)] - values[without]
        phi[i] = w @ diff
    return phi


if NUMBA_ENABLED:

    @njit(cache=True)
    def _exact_combine_njit(values, weights, pc, n):  # pragma: no cover - jitted
        size = values.shape[0]
        n_classes = values.shape[1]
        phi = np.zeros((n, n_classes), dtype=np.float64)
        for mask in range(size):
            w = weights[pc[mask]]
            for i in range(n):
                if not (mask >> i) & 1:
                    hi = mask | (1 << i)
                    for c in range(n_classes):
                        phi[i, c] += w * (values[hi, c] - values[mask, c])
        return phi


def exact_combine(values: np.ndarray, n: int) -> np.ndarray:
    """Fold a (2**n, n_classes) coalition table into (n, n_classes) phi."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    if NUMBA_ENABLED:
        return _exact_combine_njit(values, shapley_weights(n), popcount_table(n), n)
    return _exact_combine_numpy(values, n)


# --- permutation marginal accumulation -----------------------------------
#
# orders[p, k] is the token visited at step k of walk p; step_values[p, k]
# is v(prefix of length k) so the marginal of orders[p, k] in walk p is
# step_values[p, k+1] - step_values[p, k]. Result is the per-token SUM of
# marginals (caller divides by the number of walks).


def _perm_accumulate_numpy(orders: np.ndarray, step_values: np.ndarray, n_tokens: int) -> np.ndarray:
    n_classes = step_values.shape[2]
    diffs = step_values[:, 1:, :] - step_values[:, :-1, :]
    phi = np.zeros((n_tokens, n_classes), dtype=np.float64)
    np.add.at(phi, orders.ravel(), diffs.reshape(-1, n_classes))
    return phi


if NUMBA_ENABLED:

    @njit(cache=True)
    def _perm_accumulate_njit(orders, step_values, n_tokens):  # pragma: no cover - jitted
        n_walks, n_steps = orders.shape
        n_classes = step_values.shape[2]
        phi = np.zeros((n_tokens, n_classes), dtype=np.float64)
        for p in range(n_walks):
            for k in range(n_steps):
                tok = orders[p, k]
                for c in range(n_classes):
                    phi[tok, c] += step_values[p, k + 1, c] - step_values[p, k, c]
        return phi


def perm_accumulate(orders: np.ndarray, step_values: np.ndarray, n_tokens: int) -> np.ndarray:
    """Sum walk marginals per token from prefix-value tables."""
    orders = np.ascontiguousarray(orders, dtype=np.int64)
    step_values = np.ascontiguousarray(step_values, dtype=np.float64)
    if NUMBA_ENABLED:
        return _perm_accumulate_njit(orders, step_values, n_tokens)
    return _perm_accumulate_numpy(orders, step_values, n_tokens)
