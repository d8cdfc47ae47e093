"""Instance-level view priors: pseudo-conditionals, rank-1 quotient
reconciliation, and the unified affinity graph."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError

logger = logging.getLogger(__name__)

POWER_ITER_TOL = 1e-12
POWER_ITER_MAX = 10_000


@dataclass(frozen=True)
class PseudoConditionals:
    """Pair of conditional tables over (instance, view).

    graph_given_instance: (n, S), each row a distribution over views.
    instance_given_graph: (n, S), each column a distribution over instances.
    """

    graph_given_instance: np.ndarray
    instance_given_graph: np.ndarray


@dataclass(frozen=True)
class Rank1Factors:
    """Best rank-1 approximation of a quotient matrix and the marginal
    distributions read off its factors."""

    q_hat: np.ndarray          # (n, S) rank-1
    m: np.ndarray              # (n,) positive, sums to 1
    n_vec: np.ndarray          # (S,) positive
    p_instance: np.ndarray     # marginal over instances (= m)
    p_graph: np.ndarray        # marginal over views, proportional to 1/n_vec


@dataclass(frozen=True)
class ReconcileResult:
    """Reconciled conditionals plus the pre-normalization solutions the
    closed form produces (kept for verification)."""

    conditionals: PseudoConditionals
    raw_instance_given_graph: np.ndarray
    raw_graph_given_instance: np.ndarray
    clamped: int


@dataclass(frozen=True)
class UnifiedGraph:
    """Fused affinity with its probability mass and Laplacian.

    weights: sparsified symmetric affinity W.
    probability: instance marginal, the diagonal of Pi.
    transition: pre-sparsification unified transition matrix (row-stochastic).
    laplacian: Pi - W after the global rescale keeping row sums <= Pi.
    """

    weights: np.ndarray
    probability: np.ndarray
    transition: np.ndarray
    laplacian: np.ndarray


def pseudo_graph_prior(consistencies: np.ndarray) -> np.ndarray:
    """Turn per-view consistencies (n, S) into a per-instance distribution
    over views: rows proportional to 1 / (c + 1)."""
    c = np.asarray(consistencies, dtype=np.float64)
    if c.ndim != 2:
        raise ValidationError("consistencies must form an (n, S) array")
    if not np.all(np.isfinite(c)) or np.any(c < 0):
        raise ValidationError("consistencies must be finite and nonnegative")
    inv = 1.0 / (c + 1.0)
    return inv / inv.sum(axis=1, keepdims=True)


def quotient_matrix(pc: PseudoConditionals) -> np.ndarray:
    """Element-wise ratio P(u|G) / P(G|u); rank 1 exactly when the two
    tables arise from a common joint distribution."""
    num = pc.instance_given_graph
    den = pc.graph_given_instance
    if np.any(num <= 0) or np.any(den <= 0):
        raise ValidationError("pseudo-conditionals must be strictly positive")
    q = num / den
    if not np.all(np.isfinite(q)):
        raise NumericalError("quotient matrix has non-finite entries")
    return q


def rank1_approximate(
    q: np.ndarray,
    tol: float = POWER_ITER_TOL,
    max_iter: int = POWER_ITER_MAX,
) -> Rank1Factors:
    """Leading singular pair of a positive matrix by power iteration on
    Q^T Q, returned as positive factors m n^T with sum(m) = 1."""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or np.any(q <= 0):
        raise ValidationError("quotient matrix must be a positive 2-D array")
    n, s = q.shape

    b = q.T @ q
    v = np.full(s, 1.0 / np.sqrt(s))
    for _ in range(max_iter):
        v_new = b @ v
        v_new /= np.linalg.norm(v_new)
        if np.linalg.norm(v_new - v) < tol:
            v = v_new
            break
        v = v_new

    qv = q @ v
    sigma = np.linalg.norm(qv)
    u = qv / sigma
    if u.sum() < 0:
        u, v = -u, -v
    if np.any(u <= 0) or np.any(v <= 0):
        raise NumericalError("leading singular pair of a positive matrix has mixed signs")

    m = u / u.sum()
    n_vec = sigma * u.sum() * v
    inv = 1.0 / n_vec
    p_graph = inv / inv.sum()
    return Rank1Factors(
        q_hat=np.outer(m, n_vec),
        m=m,
        n_vec=n_vec,
        p_instance=m,
        p_graph=p_graph,
    )


def solve_ratio_constrained(a, b, q, alpha, beta):
    """Closed form of the per-entry quadratic: minimize
    alpha/2 (x_u - a)^2 + beta/2 (x_g - b)^2 subject to x_u = q x_g.

    Returns (x_u, x_g). Broadcasts over array inputs.
    """
    x_g = (alpha * q * a + beta * b) / (alpha * q * q + beta)
    return q * x_g, x_g


def reconcile(
    pc: PseudoConditionals,
    q_hat: np.ndarray,
    clamp_eps: float = 1e-12,
) -> ReconcileResult:
    """Project the pseudo-conditionals onto the rank-1 ratio constraint,
    then renormalize rows of P(G|u) and columns of P(u|G)."""
    a = pc.instance_given_graph
    b = pc.graph_given_instance
    if np.any(q_hat <= 0):
        raise ValidationError("q_hat must be strictly positive")

    qp_alpha = 1.0 / np.sum(a * a)
    qp_beta = 1.0 / np.sum(b * b)
    x_u, x_g = solve_ratio_constrained(a, b, q_hat, qp_alpha, qp_beta)

    clamped = int(np.count_nonzero(x_g <= 0))
    if clamped:
        logger.warning("reconcile clamped %d nonpositive entries", clamped)
        x_g = np.maximum(x_g, clamp_eps)
        x_u = np.maximum(x_u, clamp_eps)

    graph_given_instance = x_g / x_g.sum(axis=1, keepdims=True)
    instance_given_graph = x_u / x_u.sum(axis=0, keepdims=True)
    return ReconcileResult(
        conditionals=PseudoConditionals(
            graph_given_instance=graph_given_instance,
            instance_given_graph=instance_given_graph,
        ),
        raw_instance_given_graph=x_u,
        raw_graph_given_instance=x_g,
        clamped=clamped,
    )


def _sparsify_top_k(weights: np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest entries of each row, union-symmetrized."""
    n = weights.shape[0]
    k = min(k, n - 1)
    # stable order on (-w, j): ties go to the lower column index
    order = np.argsort(-weights, axis=1, kind="stable")
    keep = np.zeros_like(weights, dtype=bool)
    rows = np.repeat(np.arange(n), k)
    keep[rows, order[:, :k].ravel()] = True
    keep |= keep.T
    return np.where(keep, weights, 0.0)


def unified_graph(
    p_instance: np.ndarray,
    graph_given_instance: np.ndarray,
    transitions: list[np.ndarray],
    k_final: int,
    eps: float = 1e-8,
) -> UnifiedGraph:
    """Fuse per-view transitions into one affinity using the reconciled
    instance-level view priors.

    The raw affinity is P(u_i) * sum_s P_s[i, j] * P(G_s | u_i); it is
    symmetrized by averaging, sparsified to the k_final strongest edges
    per row (union), and rescaled by one global constant so that no row
    sum exceeds its Pi entry.
    """
    if k_final < 1:
        raise ValidationError(f"k_final must be >= 1, got {k_final}")
    n, s = graph_given_instance.shape
    if len(transitions) != s:
        raise ValidationError("one transition matrix per view is required")

    unified_transition = np.zeros((n, n))
    for view, p_s in enumerate(transitions):
        unified_transition += p_s * graph_given_instance[:, view][:, None]

    raw = p_instance[:, None] * unified_transition
    sym = 0.5 * (raw + raw.T)
    np.fill_diagonal(sym, 0.0)

    weights = _sparsify_top_k(sym, k_final)

    # re-attach anyone the sparsification isolated
    dead = np.flatnonzero(weights.sum(axis=1) == 0.0)
    for i in dead:
        j = int(np.argmax(sym[i]))
        value = max(sym[i, j], eps)
        weights[i, j] = weights[j, i] = value

    ratio = weights.sum(axis=1) / p_instance
    weights = weights / ratio.max()

    laplacian = np.diag(p_instance) - weights
    return UnifiedGraph(
        weights=weights,
        probability=p_instance,
        transition=unified_transition,
        laplacian=laplacian,
    )
