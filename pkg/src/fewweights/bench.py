"""Benchmark suites: kernel crossover and APSP solver comparisons.

Each suite returns machine-readable rows (dicts with fixed keys) plus a
rendered text table of per-(algorithm, n, d) median wall times.
"""

from __future__ import annotations

import time

import numpy as np

from . import minplus as mp
from .apsp import apsp_oracle, solve_apsp
from .core import POS_INF, WeightMatrix
from .generators import (
    random_dweights_graph,
    random_node_weighted_graph,
    random_weight_matrix,
)


def _timed(fn):
    t0 = time.perf_counter_ns()
    out = fn()
    return out, time.perf_counter_ns() - t0


def bench_kernels(sizes, seeds, density=0.5):
    """Packed vs naive boolean matrix product."""
    rows = []
    for n in sizes:
        for seed in seeds:
            rng = np.random.default_rng(seed)
            p = rng.random((n, n)) < density
            q = rng.random((n, n)) < density
            got, t_packed = _timed(lambda: mp.boolean_matrix_multiply(p, q))
            want, t_naive = _timed(lambda: mp.boolean_matmul_naive(p, q))
            ok = bool(np.array_equal(got, want))
            rows.append({"algo": "bool-packed", "n": n, "d": 0, "seed": seed,
                         "wall_ns": t_packed, "ok": ok})
            rows.append({"algo": "bool-naive", "n": n, "d": 0, "seed": seed,
                         "wall_ns": t_naive, "ok": ok})
    return rows


def bench_minplus_crossover(n, seeds, deltas=(8, 16, 32, 64), row_fraction=8):
    """boolean_min_plus at several bucket counts vs the naive product.

    Uses the node-weighted product shape: s = n/row_fraction rows against a
    boolean n x n matrix (naive runs on the 0/w equivalent matrix).
    """
    rows = []
    s = max(1, n // row_fraction)
    for seed in seeds:
        rng = np.random.default_rng(seed)
        a = random_weight_matrix(s, n, rng, low=0, high=n, inf_density=0.1)
        adj = rng.random((n, n)) < 0.3
        w = rng.integers(0, n, size=n)
        bmat = np.where(adj, w[None, :].repeat(n, axis=0),
                        POS_INF).astype(np.int64)
        want, t_naive = _timed(lambda: mp.min_plus_naive(a, WeightMatrix(bmat)))
        rows.append({"algo": "minplus-naive", "n": n, "d": 1, "seed": seed,
                     "wall_ns": t_naive, "ok": True})
        for delta in deltas:
            (got, wit), t_k = _timed(lambda: mp.boolean_min_plus(a, adj, delta))
            ok = bool(np.array_equal(
                np.where(got.data == POS_INF, got.data, got.data + w[None, :]),
                want.data))
            rows.append({"algo": f"boolean-minplus-d{delta}", "n": n, "d": 1,
                         "seed": seed, "wall_ns": t_k, "ok": ok})
    return rows


def bench_apsp(sizes, seeds, d=4, h=4):
    """Oracle vs the pivot solvers on random graphs."""
    rows = []
    for n in sizes:
        for seed in seeds:
            rng = np.random.default_rng(seed)
            g = random_node_weighted_graph(n, rng)
            want, t0 = _timed(lambda: apsp_oracle(g))
            rows.append({"algo": "oracle", "n": n, "d": 1, "seed": seed,
                         "wall_ns": t0, "ok": True})
            for algo in ("nw-det", "nw-rand"):
                got, t1 = _timed(lambda: solve_apsp(
                    g, algo, h=h, rng=np.random.default_rng(seed)))
                rows.append({"algo": algo, "n": n, "d": 1, "seed": seed,
                             "wall_ns": t1,
                             "ok": bool(np.array_equal(got.data, want.data))})
            ge = random_dweights_graph(n, d, rng)
            wante, t2 = _timed(lambda: apsp_oracle(ge))
            got, t3 = _timed(lambda: solve_apsp(ge, "dweights", h=h, d=d))
            rows.append({"algo": "dweights", "n": n, "d": d, "seed": seed,
                         "wall_ns": t3,
                         "ok": bool(np.array_equal(got.data, wante.data))})
    return rows


def median_table(rows):
    """Median wall time per (algo, n, d) as a fixed-width text table."""
    groups = {}
    for r in rows:
        groups.setdefault((r["algo"], r["n"], r["d"]), []).append(r)
    lines = [f"{'algo':<24}{'n':>7}{'d':>5}{'median_ms':>12}{'ok':>5}"]
    for (algo, n, d) in sorted(groups):
        g = groups[(algo, n, d)]
        med = float(np.median([r["wall_ns"] for r in g])) / 1e6
        ok = all(r.get("ok", True) for r in g)
        lines.append(f"{algo:<24}{n:>7}{d:>5}{med:>12.3f}{str(ok):>5}")
    return "\n".join(lines) + "\n"


SUITES = {
    "kernels": lambda sizes, seeds: bench_kernels(sizes, seeds),
    "minplus": lambda sizes, seeds: [r for n in sizes
                                     for r in bench_minplus_crossover(n, seeds)],
    "apsp": lambda sizes, seeds: bench_apsp(sizes, seeds),
}
