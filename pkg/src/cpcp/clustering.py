"""Constrained spectral clustering on the propagated scores."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.cluster import KMeans

from .errors import NumericalError, ValidationError

logger = logging.getLogger(__name__)

DEGREE_EPS = 1e-12


@dataclass(frozen=True)
class ClusterAssignment:
    """Best labeling across restarts plus everything each restart saw."""

    labels: np.ndarray
    inertia: float
    restart_labels: list[np.ndarray]
    restart_inertias: list[float]
    embedding: np.ndarray


def sigmoid_affinity(
    scores: np.ndarray,
    nonzero_only: bool = False,
) -> np.ndarray:
    """Map propagated scores to affinities: logistic on positive scores,
    0 elsewhere, zero diagonal. The temperature is the mean |score|,
    over all n^2 entries by default."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] != scores.shape[1]:
        raise ValidationError("scores must be a square matrix")
    magnitude = np.abs(scores)
    if nonzero_only:
        mask = magnitude > 0
        sigma = magnitude[mask].mean() if mask.any() else 0.0
    else:
        sigma = magnitude.mean()
    if sigma == 0.0:
        raise NumericalError("all propagated scores are zero; nothing to cluster")
    w = np.zeros_like(scores)
    positive = scores > 0
    w[positive] = 1.0 / (1.0 + np.exp(-scores[positive] / sigma))
    np.fill_diagonal(w, 0.0)
    return w


def spectral_embedding(affinity: np.ndarray, dim: int) -> np.ndarray:
    """Rows of the bottom `dim` eigenvectors of the symmetric normalized
    Laplacian, row-normalized to the unit sphere."""
    n = affinity.shape[0]
    if not 1 <= dim <= n:
        raise ValidationError(f"embedding dimension {dim} out of range for n={n}")
    w = 0.5 * (affinity + affinity.T)
    degrees = np.maximum(w.sum(axis=1), DEGREE_EPS)
    d_inv_sqrt = 1.0 / np.sqrt(degrees)
    l_sym = np.eye(n) - d_inv_sqrt[:, None] * w * d_inv_sqrt[None, :]
    l_sym = 0.5 * (l_sym + l_sym.T)
    vals, vecs = scipy.linalg.eigh(l_sym, subset_by_index=(0, dim - 1))
    if len(np.unique(np.round(vals, 8))) < dim:
        logger.warning(
            "embedding uses %d dimensions but only %d numerically distinct "
            "eigenvalues",
            dim,
            len(np.unique(np.round(vals, 8))),
        )
    norms = np.linalg.norm(vecs, axis=1)
    norms[norms == 0.0] = 1.0
    return vecs / norms[:, None]


def spectral_clustering(
    affinity: np.ndarray,
    clusters: int,
    embed_dim: int | None = None,
    restarts: int = 10,
    seed: int = 0,
) -> ClusterAssignment:
    """Normalized-Laplacian embedding (c + 1 dimensions unless overridden)
    followed by independent k-means++ runs seeded seed, seed+1, ...; the
    labeling with the lowest inertia wins."""
    n = affinity.shape[0]
    if not 2 <= clusters <= n:
        raise ValidationError(f"cluster count {clusters} out of range for n={n}")
    if restarts < 1:
        raise ValidationError(f"restarts must be >= 1, got {restarts}")
    if np.any(affinity < 0):
        raise ValidationError("affinity must be nonnegative")

    dim = clusters + 1 if embed_dim is None else embed_dim
    dim = min(dim, n)
    embedding = spectral_embedding(affinity, dim)

    all_labels: list[np.ndarray] = []
    all_inertias: list[float] = []
    for r in range(restarts):
        km = KMeans(
            n_clusters=clusters,
            init="k-means++",
            n_init=1,
            random_state=seed + r,
        ).fit(embedding)
        all_labels.append(km.labels_.copy())
        all_inertias.append(float(km.inertia_))
    best = int(np.argmin(all_inertias))
    return ClusterAssignment(
        labels=all_labels[best],
        inertia=all_inertias[best],
        restart_labels=all_labels,
        restart_inertias=all_inertias,
        embedding=embedding,
    )


def cluster_scores(
    scores: np.ndarray,
    clusters: int,
    embed_dim: int | None = None,
    restarts: int = 10,
    seed: int = 0,
    nonzero_only: bool = False,
) -> ClusterAssignment:
    """Sigmoid affinity followed by spectral clustering."""
    affinity = sigmoid_affinity(scores, nonzero_only=nonzero_only)
    return spectral_clustering(
        affinity, clusters, embed_dim=embed_dim, restarts=restarts, seed=seed
    )
