"""Consensus co-occurrence counts, edge pruning, per-instance consistency."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import ValidationError
from .graph import Affinity

DEFAULT_EPS = 1e-8


def dense_neighborhood_size(n: int, n_clusters: int) -> int:
    """Neighborhood size for the dense per-view graphs: round(n / c),
    clamped to [2, n - 1]."""
    k = int(np.rint(n / n_clusters))
    return max(2, min(k, n - 1))


def consensus_matrix(neighbors: np.ndarray) -> np.ndarray:
    """Count, for every unordered pair, how many anchors hold both nodes
    in their neighbor list.

    `neighbors` is (n, k) with row i listing the k-NN of instance i,
    distinct and excluding i itself.
    """
    neighbors = np.asarray(neighbors)
    if neighbors.ndim != 2:
        raise ValidationError("neighbor lists must form an (n, k) array")
    n = neighbors.shape[0]
    anchors = np.arange(n)[:, None]
    if np.any(neighbors == anchors):
        bad = int(np.flatnonzero(np.any(neighbors == anchors, axis=1))[0])
        raise ValidationError(f"anchor {bad} appears in its own neighbor list")
    sorted_rows = np.sort(neighbors, axis=1)
    if np.any(sorted_rows[:, 1:] == sorted_rows[:, :-1]):
        raise ValidationError("neighbor lists contain duplicate indices")
    if neighbors.size and (neighbors.min() < 0 or neighbors.max() >= n):
        raise ValidationError("neighbor index out of range")
    return _kernels.consensus_counts(neighbors)


def prune_affinity(dense: Affinity, counts: np.ndarray, tau: float) -> Affinity:
    """Zero out edges whose consensus count falls below tau."""
    if counts.shape != dense.weights.shape:
        raise ValidationError("consensus matrix shape does not match affinity")
    if tau < 0:
        raise ValidationError(f"tau must be nonnegative, got {tau}")
    weights = np.where(counts < tau, 0.0, dense.weights)
    return Affinity.from_weights(weights)


def consistency(dense: Affinity, pruned: Affinity, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Per-instance KL divergence between the dense and pruned neighbor
    distributions (rows floored by eps, then normalized)."""
    if dense.weights.shape != pruned.weights.shape:
        raise ValidationError("dense and pruned affinities differ in shape")
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    return _kernels.kl_consistency(dense.weights, pruned.weights, eps)
