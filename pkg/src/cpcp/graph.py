"""Per-view affinity graphs, transition probabilities, instance probabilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGraphError, ValidationError

GAUSSIAN = "euclidean-gaussian"
COSINE = "cosine"
METRICS = (GAUSSIAN, COSINE)

# magnitude of the deterministic noise injected into blank feature rows
BLANK_ROW_NOISE = 1e-6


@dataclass(frozen=True)
class Affinity:
    """Symmetric nonnegative affinity matrix with zero diagonal and its
    precomputed degree (row-sum) vector."""

    weights: np.ndarray
    degrees: np.ndarray

    @classmethod
    def from_weights(cls, weights: np.ndarray) -> "Affinity":
        return cls(weights=weights, degrees=weights.sum(axis=1))

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def _resolve_metric(metric: str) -> str:
    aliases = {
        "gaussian": GAUSSIAN,
        "g": GAUSSIAN,
        GAUSSIAN: GAUSSIAN,
        "cosine": COSINE,
        "cos": COSINE,
        COSINE: COSINE,
    }
    key = metric.strip().lower()
    if key not in aliases:
        raise ValidationError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return aliases[key]


def fill_blank_rows(features: np.ndarray) -> np.ndarray:
    """Replace all-zero feature rows with minute deterministic noise.

    Each blank row is drawn from a generator seeded by the row index, so
    repeated runs see identical data without any global RNG state.
    """
    blank = ~np.any(features != 0.0, axis=1)
    if not blank.any():
        return features
    out = features.copy()
    d = features.shape[1]
    for i in np.flatnonzero(blank):
        rng = np.random.default_rng(int(i))
        out[i] = BLANK_ROW_NOISE * rng.standard_normal(d)
    return out


def preprocess_features(features: np.ndarray, metric: str) -> np.ndarray:
    """Normalize a raw feature matrix for the given metric.

    Euclidean views are centered per dimension and scaled into [-1, 1];
    cosine views are left as-is. Blank rows get noise either way.
    """
    metric = _resolve_metric(metric)
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"feature matrix must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("feature matrix contains non-finite entries")
    if metric == GAUSSIAN:
        x = x - x.mean(axis=0)
        scale = np.abs(x).max(axis=0)
        scale[scale == 0.0] = 1.0
        x = x / scale
    return fill_blank_rows(x)


def _pairwise_sq_euclidean(x: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _cosine_similarity(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        raise ValidationError(
            "zero-norm feature row under cosine metric; run fill_blank_rows first"
        )
    xs = x / norms[:, None]
    sim = xs @ xs.T
    np.clip(sim, -1.0, 1.0, out=sim)
    return sim


def pairwise_distances(features: np.ndarray, metric: str) -> np.ndarray:
    """Dense distance matrix used for exact k-NN ranking."""
    metric = _resolve_metric(metric)
    x = fill_blank_rows(np.asarray(features, dtype=np.float64))
    if metric == GAUSSIAN:
        return np.sqrt(_pairwise_sq_euclidean(x))
    return 1.0 - _cosine_similarity(x)


def knn_neighbors(features: np.ndarray, k: int, metric: str) -> np.ndarray:
    """Index lists of the k nearest neighbors of every instance.

    Exact search over the dense distance matrix; the anchor is excluded
    and distance ties are broken toward the lower instance index.
    """
    n = features.shape[0]
    if not 1 <= k < n:
        raise ValidationError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    dist = pairwise_distances(features, metric)
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")
    return order[:, :k]


def affinity_from_neighbors(
    features: np.ndarray, neighbors: np.ndarray, metric: str
) -> Affinity:
    """Weighted affinity on the union-symmetrized k-NN edge set.

    Gaussian weights use exp(-d^2 / (2 sigma^2)) with sigma the mean
    distance over all retained edges of the view; cosine weights are the
    similarity clamped at zero.
    """
    metric = _resolve_metric(metric)
    n = features.shape[0]
    x = fill_blank_rows(np.asarray(features, dtype=np.float64))

    mask = np.zeros((n, n), dtype=bool)
    rows = np.repeat(np.arange(n), neighbors.shape[1])
    mask[rows, neighbors.ravel()] = True
    mask |= mask.T
    np.fill_diagonal(mask, False)

    if metric == GAUSSIAN:
        d2 = _pairwise_sq_euclidean(x)
        sigma = np.sqrt(d2[mask]).mean()
        if sigma == 0.0:
            # all retained pairs coincide; exp(0) everywhere on the edge set
            weights = mask.astype(np.float64)
        else:
            weights = np.where(mask, np.exp(-d2 / (2.0 * sigma**2)), 0.0)
    else:
        sim = _cosine_similarity(x)
        weights = np.where(mask, np.maximum(sim, 0.0), 0.0)
    np.fill_diagonal(weights, 0.0)
    return Affinity.from_weights(weights)


def build_knn_affinity(features: np.ndarray, k: int, metric: str) -> Affinity:
    """k-NN affinity graph of one view (union symmetrization)."""
    neighbors = knn_neighbors(features, k, metric)
    return affinity_from_neighbors(features, neighbors, metric)


def _as_weights(graph: Affinity | np.ndarray) -> np.ndarray:
    return graph.weights if isinstance(graph, Affinity) else np.asarray(graph, dtype=np.float64)


def transition_matrix(graph: Affinity | np.ndarray) -> np.ndarray:
    """Row-stochastic transition probabilities W_ij / D_ii."""
    w = _as_weights(graph)
    degrees = w.sum(axis=1)
    dead = np.flatnonzero(degrees <= 0.0)
    if dead.size:
        raise DegenerateGraphError(
            f"instance {int(dead[0])} has zero degree; cannot form transitions"
        )
    return w / degrees[:, None]


def instance_probability(graph: Affinity | np.ndarray) -> np.ndarray:
    """Degree distribution D_ii / sum_i D_ii."""
    w = _as_weights(graph)
    degrees = w.sum(axis=1)
    total = degrees.sum()
    if total <= 0.0:
        raise DegenerateGraphError("graph has zero total degree")
    return degrees / total


def floored(graph: Affinity | np.ndarray, eps: float) -> np.ndarray:
    """Every entry raised by eps, the full-support matrix used before
    forming probabilities from possibly sparse graphs."""
    return _as_weights(graph) + eps
