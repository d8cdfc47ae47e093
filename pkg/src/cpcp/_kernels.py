"""Hot inner kernels: numba-jitted with pure-numpy fallbacks.

The jitted path is used whenever numba imports successfully; set the
environment variable CPCP_DISABLE_NUMBA=1 before import to force the
numpy implementations (useful for debugging and for the benchmark in
benchmarks/bench_kernels.py, which times both paths).
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAS_NUMBA = False

USE_NUMBA = _HAS_NUMBA and os.environ.get("CPCP_DISABLE_NUMBA", "") != "1"


def consensus_counts_numpy(neighbors: np.ndarray) -> np.ndarray:
    """Co-selection counts: for each anchor row, every unordered pair of
    its neighbors gets both symmetric entries incremented once."""
    n = neighbors.shape[0]
    counts = np.zeros((n, n), dtype=np.int64)
    for idx in neighbors:
        counts[np.ix_(idx, idx)] += 1
    # the block update above also hits (j, j) cells; pairs are j != k only
    np.fill_diagonal(counts, 0)
    return counts


def kl_consistency_numpy(dense: np.ndarray, pruned: np.ndarray, eps: float) -> np.ndarray:
    """Row-wise KL(dense || pruned) after flooring every entry by eps and
    row-normalizing both matrices."""
    p = dense + eps
    p /= p.sum(axis=1, keepdims=True)
    q = pruned + eps
    q /= q.sum(axis=1, keepdims=True)
    return np.sum(p * np.log(p / q), axis=1)


if _HAS_NUMBA:

    @njit(cache=True)
    def consensus_counts_jit(neighbors):  # pragma: no cover - exercised via dispatch
        n, k = neighbors.shape
        counts = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            for a in range(k):
                j = neighbors[i, a]
                for b in range(a + 1, k):
                    l = neighbors[i, b]
                    counts[j, l] += 1
                    counts[l, j] += 1
        return counts

    @njit(cache=True)
    def kl_consistency_jit(dense, pruned, eps):  # pragma: no cover
        n = dense.shape[0]
        out = np.empty(n)
        for i in range(n):
            zp = 0.0
            zq = 0.0
            for j in range(n):
                zp += dense[i, j] + eps
                zq += pruned[i, j] + eps
            acc = 0.0
            for j in range(n):
                pj = (dense[i, j] + eps) / zp
                qj = (pruned[i, j] + eps) / zq
                acc += pj * np.log(pj / qj)
            out[i] = acc
        return out


def consensus_counts(neighbors: np.ndarray) -> np.ndarray:
    neighbors = np.ascontiguousarray(neighbors, dtype=np.int64)
    if USE_NUMBA:
        return consensus_counts_jit(neighbors)
    return consensus_counts_numpy(neighbors)


def kl_consistency(dense: np.ndarray, pruned: np.ndarray, eps: float) -> np.ndarray:
    dense = np.ascontiguousarray(dense, dtype=np.float64)
    pruned = np.ascontiguousarray(pruned, dtype=np.float64)
    if USE_NUMBA:
        return kl_consistency_jit(dense, pruned, eps)
    return kl_consistency_numpy(dense, pruned, eps)
