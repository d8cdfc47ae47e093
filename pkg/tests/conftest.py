"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's own code paths: consensus
counts come from itertools enumeration, gradients from central differences,
minimizers from steepest descent or scipy, k-NN from a naive sort. Tests
compare library output against these, not against the library itself.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from cpcp.prior import PseudoConditionals


def random_legal_joint(rng, n, s):
    """Strictly positive joint P(u_i, G_s) summing to one, plus the exact
    conditionals derived from it."""
    joint = rng.random((n, s)) + 0.05
    joint /= joint.sum()
    p_u = joint.sum(axis=1)
    p_g = joint.sum(axis=0)
    pc = PseudoConditionals(
        graph_given_instance=joint / p_u[:, None],
        instance_given_graph=joint / p_g[None, :],
    )
    return joint, pc, p_u, p_g


def consensus_oracle(neighbors):
    """Count co-selections by brute enumeration of unordered pairs."""
    n = neighbors.shape[0]
    counts = np.zeros((n, n), dtype=np.int64)
    for row in neighbors:
        for j, k in itertools.combinations(sorted(row.tolist()), 2):
            counts[j, k] += 1
            counts[k, j] += 1
    return counts


def knn_oracle(features, k, metric):
    """Naive k nearest neighbors, ties broken by lower index."""
    n = features.shape[0]
    out = np.zeros((n, k), dtype=np.int64)
    for i in range(n):
        dists = []
        for j in range(n):
            if j == i:
                continue
            if metric == "euclidean-gaussian":
                d = float(np.sum((features[i] - features[j]) ** 2))
            else:
                a = features[i] / max(np.linalg.norm(features[i]), 1e-300)
                b = features[j] / max(np.linalg.norm(features[j]), 1e-300)
                d = -float(a @ b)
            dists.append((d, j))
        dists.sort()
        out[i] = [j for _, j in dists[:k]]
    return out


def kl_rows_oracle(dense, pruned, eps):
    """Per-row KL(dense || pruned) after flooring, scalar loops only."""
    n = dense.shape[0]
    out = np.zeros(n)
    for i in range(n):
        p = dense[i] + eps
        q = pruned[i] + eps
        p = p / p.sum()
        q = q / q.sum()
        acc = 0.0
        for j in range(n):
            if p[j] > 0.0:
                acc += p[j] * np.log(p[j] / q[j])
        out[i] = acc
    return out


def finite_diff_grad(fn, x, h=1e-6):
    """Central-difference gradient of a scalar function of an array."""
    g = np.zeros_like(x, dtype=float)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (fn(xp) - fn(xm)) / (2.0 * h)
        it.iternext()
    return g


def steepest_descent_quadratic(a_mat, rhs, tol=1e-10, max_iter=200_000):
    """Minimize (1/2)<F, A F> - <F, rhs> by exact-line-search descent.

    Independent of the closed-form solver; used as the optimization oracle
    for the propagation objective.
    """
    f = np.zeros_like(rhs)
    for _ in range(max_iter):
        grad = a_mat @ f - rhs
        gnorm = np.linalg.norm(grad)
        if gnorm <= tol * (1.0 + np.linalg.norm(rhs)):
            break
        ag = a_mat @ grad
        step = float((grad * grad).sum() / (grad * ag).sum())
        f -= step * grad
    return f


def random_affinity(rng, n, density=1.0):
    """Symmetric nonnegative affinity, zero diagonal, connected via a ring."""
    w = rng.random((n, n))
    if density < 1.0:
        w *= rng.random((n, n)) < density
    w = 0.5 * (w + w.T)
    np.fill_diagonal(w, 0.0)
    for i in range(n):
        j = (i + 1) % n
        w[i, j] = max(w[i, j], 0.2)
        w[j, i] = w[i, j]
    return w


def random_system(rng, n):
    """Random valid (laplacian, pi) pair matching the unified-graph contract:
    W symmetric nonnegative, zero diagonal, row sums <= pi with equality at
    the max, L = diag(pi) - W."""
    w = random_affinity(rng, n)
    pi = rng.random(n) + 0.1
    pi /= pi.sum()
    w /= (w.sum(axis=1) / pi).max()
    return np.diag(pi) - w, pi


@pytest.fixture
def rng():
    return np.random.default_rng(0)
