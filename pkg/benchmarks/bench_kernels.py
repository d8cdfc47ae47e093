"""Time the jitted kernels against their numpy fallbacks.

Run twice to compare the dispatch paths end to end:

    python benchmarks/bench_kernels.py
    CPCP_DISABLE_NUMBA=1 python benchmarks/bench_kernels.py

or rely on the direct per-implementation timings below, which call both
paths from one process.
"""

from __future__ import annotations

import time

import numpy as np

from cpcp import _kernels


def _time(fn, *args, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    rng = np.random.default_rng(0)
    n, k = 1500, 120
    neighbors = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        pool = np.delete(np.arange(n), i)
        neighbors[i] = rng.choice(pool, size=k, replace=False)
    dense = rng.random((n, n))
    pruned = dense * (rng.random((n, n)) < 0.5)

    print(f"numba available: {_kernels._HAS_NUMBA}, dispatch uses numba: {_kernels.USE_NUMBA}")
    print(f"problem size: n={n}, k={k}")

    rows = []
    rows.append(("consensus_counts numpy", _time(_kernels.consensus_counts_numpy, neighbors)))
    if _kernels._HAS_NUMBA:
        _kernels.consensus_counts_jit(neighbors)  # compile outside the timer
        rows.append(("consensus_counts numba", _time(_kernels.consensus_counts_jit, neighbors)))
    rows.append(("kl_consistency numpy", _time(_kernels.kl_consistency_numpy, dense, pruned, 1e-8)))
    if _kernels._HAS_NUMBA:
        _kernels.kl_consistency_jit(dense, pruned, 1e-8)
        rows.append(("kl_consistency numba", _time(_kernels.kl_consistency_jit, dense, pruned, 1e-8)))

    width = max(len(name) for name, _ in rows)
    for name, seconds in rows:
        print(f"{name:<{width}}  {seconds * 1e3:9.2f} ms")

    if _kernels._HAS_NUMBA:
        a = _kernels.consensus_counts_numpy(neighbors)
        b = _kernels.consensus_counts_jit(neighbors)
        assert np.array_equal(a, b), "kernel outputs diverge"
        x = _kernels.kl_consistency_numpy(dense, pruned, 1e-8)
        y = _kernels.kl_consistency_jit(dense, pruned, 1e-8)
        assert np.allclose(x, y, rtol=1e-12, atol=1e-12), "kernel outputs diverge"
        print("paths agree on identical inputs")


if __name__ == "__main__":
    main()
