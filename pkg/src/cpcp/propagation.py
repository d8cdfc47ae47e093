"""Closed-form pairwise constraint propagation over a fused graph."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NumericalError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_ETA = 0.25


@dataclass(frozen=True)
class ConstraintSet:
    """Must-link and cannot-link pairs as (m, 2) index arrays."""

    must: np.ndarray
    cannot: np.ndarray

    def __post_init__(self):
        for name in ("must", "cannot"):
            arr = np.asarray(getattr(self, name), dtype=np.int64).reshape(-1, 2)
            object.__setattr__(self, name, arr)

    def validate(self, n: int) -> None:
        for name in ("must", "cannot"):
            arr = getattr(self, name)
            if arr.size == 0:
                continue
            if arr.min() < 0 or arr.max() >= n:
                raise ValidationError(f"{name}-link index out of range for n={n}")
            if np.any(arr[:, 0] == arr[:, 1]):
                raise ValidationError(f"{name}-link pair repeats an instance")

    @property
    def size(self) -> int:
        return len(self.must) + len(self.cannot)


@dataclass(frozen=True)
class SideInformation:
    """Seed matrix Y and its positive / negative parts."""

    y: np.ndarray
    positive: np.ndarray = field(repr=False)
    negative: np.ndarray = field(repr=False)


def side_information(constraints: ConstraintSet, n: int) -> SideInformation:
    """Y[i, j] = 1 on must-links, -1 on cannot-links, 0 elsewhere,
    symmetric. A pair listed on both sides raises."""
    constraints.validate(n)
    y = np.zeros((n, n))
    for pairs, value in ((constraints.must, 1.0), (constraints.cannot, -1.0)):
        for i, j in pairs:
            if y[i, j] != 0.0 and y[i, j] != value:
                raise ValidationError(
                    f"pair ({i}, {j}) appears as both must-link and cannot-link"
                )
            y[i, j] = y[j, i] = value
    pos = np.where(y > 0, y, 0.0)
    neg = np.where(y < 0, y, 0.0)
    return SideInformation(y=y, positive=pos, negative=neg)


def balance_weight(constraints: ConstraintSet) -> float:
    """sqrt(|cannot| / |must|); 1.0 with a warning when either side is
    empty."""
    n_must = len(constraints.must)
    n_cannot = len(constraints.cannot)
    if n_must == 0 or n_cannot == 0:
        logger.warning(
            "constraint set has %d must-links and %d cannot-links; "
            "balance weight falls back to 1.0",
            n_must,
            n_cannot,
        )
        return 1.0
    return float(np.sqrt(n_cannot / n_must))


def _solve_spd(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a x = rhs for symmetric positive definite a, falling back to
    LU if the factorization fails."""
    try:
        c, low = scipy.linalg.cho_factor(a)
        return scipy.linalg.cho_solve((c, low), rhs)
    except scipy.linalg.LinAlgError:
        diag = np.abs(np.diag(a))
        worst = int(np.argmin(diag))
        logger.warning(
            "Cholesky failed (smallest pivot at index %d); using LU", worst
        )
        try:
            return scipy.linalg.solve(a, rhs)
        except scipy.linalg.LinAlgError as exc:
            raise NumericalError(
                f"propagation system is singular near instance {worst}"
            ) from exc


def _two_pass(a: np.ndarray, pi: np.ndarray, seed: np.ndarray, eta: float) -> np.ndarray:
    """F = eta^2 a^{-1} Pi seed Pi a^{-1} for symmetric a, via solves."""
    f_v = eta * _solve_spd(a, pi[:, None] * seed)
    return eta * _solve_spd(a, (f_v * pi[None, :]).T).T


def _balanced_system(
    laplacian: np.ndarray,
    pi: np.ndarray,
    side: SideInformation,
    eta: float,
    balance_alpha: float,
) -> tuple[np.ndarray, np.ndarray]:
    if eta <= 0:
        raise ValidationError(f"eta must be positive, got {eta}")
    if balance_alpha <= 0:
        raise ValidationError(
            f"balance_alpha must be positive, got {balance_alpha}"
        )
    a = laplacian + balance_alpha * eta * np.diag(pi)
    seed = balance_alpha * side.positive + side.negative
    return a, seed


def propagate_balanced(
    laplacian: np.ndarray,
    pi: np.ndarray,
    side: SideInformation,
    eta: float = DEFAULT_ETA,
    balance_alpha: float = 1.0,
) -> np.ndarray:
    """Propagate with the positive part up-weighted by balance_alpha:
        F = eta^2 (L + a eta Pi)^{-1} Pi (a Y+ + Y-) Pi (L + a eta Pi)^{-1}
    with a = balance_alpha, computed via solves."""
    system, seed = _balanced_system(laplacian, pi, side, eta, balance_alpha)
    return _two_pass(system, pi, seed, eta)


def propagate_vertical(
    laplacian: np.ndarray,
    pi: np.ndarray,
    side: SideInformation,
    eta: float = DEFAULT_ETA,
    balance_alpha: float = 1.0,
) -> np.ndarray:
    """First (column-wise) pass only:
        F_v = eta (L + a eta Pi)^{-1} Pi (a Y+ + Y-)."""
    system, seed = _balanced_system(laplacian, pi, side, eta, balance_alpha)
    return eta * _solve_spd(system, pi[:, None] * seed)


def objective_gradient(
    laplacian: np.ndarray,
    pi: np.ndarray,
    side: SideInformation,
    f_v: np.ndarray,
    eta: float = DEFAULT_ETA,
    balance_alpha: float = 1.0,
) -> np.ndarray:
    """Gradient of the vertical-pass objective at F_v:
        (L + a eta Pi) F_v - eta Pi (a Y+ + Y-).
    Zero exactly at the closed-form solution."""
    system, seed = _balanced_system(laplacian, pi, side, eta, balance_alpha)
    return system @ f_v - eta * pi[:, None] * seed


def objective_value(
    laplacian: np.ndarray,
    pi: np.ndarray,
    side: SideInformation,
    f_v: np.ndarray,
    eta: float = DEFAULT_ETA,
    balance_alpha: float = 1.0,
) -> float:
    """Quadratic whose unique minimizer is the vertical pass:
        1/2 <F, (L + a eta Pi) F> - eta <F, Pi (a Y+ + Y-)>."""
    system, seed = _balanced_system(laplacian, pi, side, eta, balance_alpha)
    quad = 0.5 * np.sum(f_v * (system @ f_v))
    linear = eta * np.sum(f_v * (pi[:, None] * seed))
    return float(quad - linear)


def mmcp_laplacian(transition: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Random-walk style Laplacian Pi - (Pi P + P^T Pi) / 2."""
    pp = pi[:, None] * transition
    return np.diag(pi) - 0.5 * (pp + pp.T)


def mmcp_unified(
    instance_given_graph: np.ndarray,
    transitions: list[np.ndarray],
    manual_prior: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Fuse views under a hand-set view prior by Bayes.

    instance_given_graph: (n, S), column s is P(u|G_s).
    Returns (pi, transition) with pi_i = sum_s P(u_i|G_s) P(G_s) and
    transition row-stochastic via P(G_s|u_i) weights.
    """
    manual_prior = np.asarray(manual_prior, dtype=np.float64)
    u = np.asarray(instance_given_graph, dtype=np.float64)
    if manual_prior.ndim != 1 or len(manual_prior) != len(transitions):
        raise ValidationError("one prior weight per view is required")
    if np.any(manual_prior <= 0) or not np.isclose(manual_prior.sum(), 1.0):
        raise ValidationError("manual view prior must be a positive distribution")
    if u.ndim != 2 or u.shape[1] != len(transitions):
        raise ValidationError("instance_given_graph must be (n, S)")

    pi = u @ manual_prior
    if np.any(pi <= 0):
        raise NumericalError("zero unified instance probability")
    graph_given_instance = u * manual_prior[None, :] / pi[:, None]
    n = u.shape[0]
    transition = np.zeros((n, n))
    for view, p_s in enumerate(transitions):
        transition += p_s * graph_given_instance[:, view][:, None]
    return pi, transition


def propagate_mmcp(
    pi: np.ndarray,
    l_hat: np.ndarray,
    y: np.ndarray,
    eta: float = DEFAULT_ETA,
) -> np.ndarray:
    """Unweighted two-pass closed form on a supplied Laplacian:
        F = eta^2 (eta Pi + L_hat)^{-1} Pi Y Pi (eta Pi + L_hat)^{-1}."""
    if eta <= 0:
        raise ValidationError(f"eta must be positive, got {eta}")
    system = l_hat + eta * np.diag(pi)
    return _two_pass(system, pi, y, eta)


def sample_constraints(
    labels: np.ndarray,
    budget_fraction: float,
    seed: int,
) -> ConstraintSet:
    """Draw round(budget_fraction * n(n-1)/2) distinct unordered pairs
    uniformly; each pair is a must-link iff its labels agree."""
    labels = np.asarray(labels)
    n = len(labels)
    total = n * (n - 1) // 2
    if not 0 < budget_fraction < 1:
        raise ValidationError(
            f"budget fraction must lie in (0, 1), got {budget_fraction}"
        )
    count = round(budget_fraction * total)
    if count > total:
        raise ValidationError(
            f"budget of {count} pairs exceeds the {total} available for n={n}"
        )
    rng = np.random.default_rng(seed)

    if count > total // 2:
        # dense regime: enumerate all pairs once
        pairs = np.array([(i, j) for i in range(n) for j in range(i + 1, n)])
        idx = rng.choice(total, size=count, replace=False)
        chosen = pairs[idx]
    else:
        seen = set()
        chosen = []
        while len(chosen) < count:
            i, j = (int(x) for x in rng.integers(0, n, size=2))
            if i == j:
                continue
            key = (min(i, j), max(i, j))
            if key in seen:
                continue
            seen.add(key)
            chosen.append(key)
        chosen = np.array(chosen, dtype=np.int64).reshape(-1, 2)

    same = labels[chosen[:, 0]] == labels[chosen[:, 1]]
    return ConstraintSet(must=chosen[same], cannot=chosen[~same])
