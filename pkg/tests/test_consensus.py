"""Consensus counts, pruning, and per-instance consistency scores."""

import numpy as np
import pytest

from cpcp import consensus
from cpcp.errors import ValidationError
from cpcp.graph import Affinity
from conftest import consensus_oracle, kl_rows_oracle


def _random_neighbors(rng, n, k):
    out = np.zeros((n, k), dtype=np.int64)
    for i in range(n):
        pool = np.delete(np.arange(n), i)
        out[i] = rng.choice(pool, size=k, replace=False)
    return out


def test_consensus_hand_example():
    # anchors: 0 -> {1,2}, 1 -> {0,2}, 2 -> {0,1}, 3 -> {0,1}
    nb = np.array([[1, 2], [0, 2], [0, 1], [0, 1]])
    c = consensus.consensus_matrix(nb)
    assert c[0, 1] == 2  # anchors 2 and 3
    assert c[0, 2] == 1  # anchor 1
    assert c[1, 2] == 1  # anchor 0
    assert np.array_equal(c, c.T)
    assert np.all(np.diag(c) == 0)


def test_consensus_matches_enumeration_oracle():
    rng = np.random.default_rng(10)
    for trial in range(25):
        n = int(rng.integers(4, 30))
        k = int(rng.integers(1, n - 1))
        nb = _random_neighbors(rng, n, k)
        got = consensus.consensus_matrix(nb)
        want = consensus_oracle(nb)
        assert np.array_equal(got, want), f"trial {trial} n={n} k={k}"


def test_consensus_singleton_lists_give_zero():
    nb = np.array([[1], [2], [0]])
    assert np.all(consensus.consensus_matrix(nb) == 0)


def test_consensus_identical_lists_max_count():
    # all anchors outside {0,1} hold the list {0,1}; legal maximum is n-2
    # (anchors 0 and 1 cannot hold themselves)
    n = 9
    nb = np.tile([0, 1], (n, 1))
    nb[0] = [1, 2]
    nb[1] = [0, 2]
    c = consensus.consensus_matrix(nb)
    assert c[0, 1] == n - 2


def test_consensus_count_bound():
    rng = np.random.default_rng(11)
    n = 14
    nb = _random_neighbors(rng, n, 6)
    c = consensus.consensus_matrix(nb)
    assert c.max() <= n


def test_consensus_validation():
    with pytest.raises(ValidationError):
        consensus.consensus_matrix(np.array([[0, 1], [0, 2], [0, 1]]))  # anchor 0 in own list
    with pytest.raises(ValidationError):
        consensus.consensus_matrix(np.array([[1, 1], [0, 2], [0, 1]]))  # duplicate
    with pytest.raises(ValidationError):
        consensus.consensus_matrix(np.array([[1, 5], [0, 2], [0, 1]]))  # out of range


def test_prune_tau_zero_identity():
    rng = np.random.default_rng(12)
    w = rng.random((6, 6))
    w = 0.5 * (w + w.T)
    np.fill_diagonal(w, 0.0)
    counts = np.zeros((6, 6), dtype=np.int64)
    pruned = consensus.prune_affinity(Affinity.from_weights(w), counts, 0.0)
    assert np.array_equal(pruned.weights, w)


def test_prune_tau_above_max_zeroes_everything():
    rng = np.random.default_rng(13)
    w = rng.random((5, 5))
    w = 0.5 * (w + w.T)
    np.fill_diagonal(w, 0.0)
    counts = np.ones((5, 5), dtype=np.int64) * 3
    pruned = consensus.prune_affinity(Affinity.from_weights(w), counts, 4.0)
    assert np.all(pruned.weights == 0.0)


def test_prune_never_increases():
    rng = np.random.default_rng(14)
    for _ in range(10):
        n = int(rng.integers(4, 12))
        w = rng.random((n, n))
        w = 0.5 * (w + w.T)
        np.fill_diagonal(w, 0.0)
        counts = rng.integers(0, 5, size=(n, n))
        counts = np.minimum(counts, counts.T)
        tau = float(rng.integers(0, 5))
        pruned = consensus.prune_affinity(Affinity.from_weights(w), counts, tau)
        assert np.all(pruned.weights <= w + 1e-15)


def test_prune_hand_example_tau_one():
    nb = np.array([[1, 2], [0, 2], [0, 1], [0, 1]])
    counts = consensus.consensus_matrix(nb)
    w = np.ones((4, 4))
    np.fill_diagonal(w, 0.0)
    pruned = consensus.prune_affinity(Affinity.from_weights(w), counts, 1.0)
    # exactly the pairs with count 0 vanish: everything touching node 3
    assert pruned.weights[0, 3] == 0.0
    assert pruned.weights[1, 3] == 0.0
    assert pruned.weights[2, 3] == 0.0
    assert pruned.weights[0, 1] == 1.0
    assert pruned.weights[0, 2] == 1.0
    assert pruned.weights[1, 2] == 1.0


def test_consistency_zero_when_nothing_pruned():
    rng = np.random.default_rng(15)
    w = rng.random((7, 7))
    w = 0.5 * (w + w.T)
    np.fill_diagonal(w, 0.0)
    a = Affinity.from_weights(w)
    c = consensus.consistency(a, a)
    assert np.all(c == 0.0)


def test_consistency_matches_kl_oracle():
    rng = np.random.default_rng(16)
    for _ in range(10):
        n = 6
        w = rng.random((n, n))
        w = 0.5 * (w + w.T)
        np.fill_diagonal(w, 0.0)
        keep = rng.random((n, n)) < 0.6
        keep = keep & keep.T
        pruned = np.where(keep, w, 0.0)
        got = consensus.consistency(Affinity.from_weights(w), Affinity.from_weights(pruned))
        want = kl_rows_oracle(w, pruned, 1e-8)
        assert np.allclose(got, want, atol=1e-12)


def test_consistency_nonnegative():
    rng = np.random.default_rng(17)
    for _ in range(20):
        n = int(rng.integers(3, 10))
        w = rng.random((n, n))
        w = 0.5 * (w + w.T)
        np.fill_diagonal(w, 0.0)
        pruned = np.where(rng.random((n, n)) < 0.5, w, 0.0)
        pruned = np.minimum(pruned, pruned.T)
        c = consensus.consistency(Affinity.from_weights(w), Affinity.from_weights(pruned))
        assert np.all(c >= -1e-10)
        assert np.all(np.isfinite(c))


def test_consistency_half_half_row_example():
    # dense row [0.5, 0.5], pruned row keeps one edge: KL is large positive
    w = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    pruned = w.copy()
    pruned[0, 2] = 0.0
    pruned[2, 0] = 0.0
    c = consensus.consistency(Affinity.from_weights(w), Affinity.from_weights(pruned))
    eps = 1e-8
    p = (w[0] + eps) / (w[0] + eps).sum()
    q = (pruned[0] + eps) / (pruned[0] + eps).sum()
    want = float(np.sum(p * np.log(p / q)))
    assert np.isclose(c[0], want, rtol=1e-10)
    assert c[0] > 5.0  # pruning a half-weight edge is a big KL hit


def test_consistency_monotone_while_two_edges_survive():
    # removals that leave >= 2 edges in the row never decrease its score;
    # the last-edge boundary is a genuine counterexample (pinned below)
    rng = np.random.default_rng(18)
    checked = 0
    for _ in range(60):
        n = int(rng.integers(4, 10))
        w = rng.random((n, n))
        w = 0.5 * (w + w.T)
        np.fill_diagonal(w, 0.0)
        pruned = w.copy()
        edges = list(np.flatnonzero(pruned[0]))
        rng.shuffle(edges)
        prev = consensus.consistency(Affinity.from_weights(w), Affinity.from_weights(pruned))[0]
        while len(np.flatnonzero(pruned[0])) > 2:
            j = edges.pop()
            pruned[0, j] = 0.0
            pruned[j, 0] = 0.0
            cur = consensus.consistency(
                Affinity.from_weights(w), Affinity.from_weights(pruned)
            )[0]
            assert cur >= prev - 1e-12
            prev = cur
            checked += 1
    assert checked > 100


def test_consistency_not_monotone_at_last_edge():
    # dense row [0,1,1]: pruning one edge spikes the KL, pruning the second
    # collapses the pruned row back toward uniform and the KL drops
    w = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    one = w.copy()
    one[0, 1] = one[1, 0] = 0.0
    both = one.copy()
    both[0, 2] = both[2, 0] = 0.0
    c_one = consensus.consistency(Affinity.from_weights(w), Affinity.from_weights(one))[0]
    c_both = consensus.consistency(Affinity.from_weights(w), Affinity.from_weights(both))[0]
    assert c_one > 5.0
    assert c_both < 1.0
    assert c_both < c_one


def test_dense_neighborhood_size():
    assert consensus.dense_neighborhood_size(300, 3) == 100
    assert consensus.dense_neighborhood_size(10, 5) == 2
    assert consensus.dense_neighborhood_size(9, 8) == 2  # clamp up
    assert consensus.dense_neighborhood_size(4, 1) == 3  # clamp down to n-1
