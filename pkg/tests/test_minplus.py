import heapq

import numpy as np
import pytest

from fewweights.core import (
    AuditError,
    EdgeWeightedGraph,
    NodeWeightedGraph,
    POS_INF,
    WeightMatrix,
    build_one_hop_matrix,
)
from fewweights import minplus as mp


def triple_loop_minplus(a, b):
    """Definitional oracle, independent of the library kernels."""
    n1, n2 = a.shape
    n3 = b.shape[1]
    out = np.full((n1, n3), POS_INF, dtype=np.int64)
    for i in range(n1):
        for j in range(n3):
            best = int(POS_INF)
            for k in range(n2):
                if a[i, k] != POS_INF and b[k, j] != POS_INF:
                    best = min(best, int(a[i, k]) + int(b[k, j]))
            out[i, j] = best
    return out


def rand_matrix(rng, r, c, inf_p=0.25, lo=-20, hi=20):
    m = rng.integers(lo, hi, size=(r, c)).astype(np.int64)
    m[rng.random((r, c)) < inf_p] = POS_INF
    return WeightMatrix(m, copy=False)


def dijkstra_node_weighted(g, s):
    dist = [int(POS_INF)] * g.n
    dist[s] = 0
    heap = [(0, s)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v in g.adj[u]:
            nd = d + int(g.node_weight[v])
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


# ----------------------------------------------------------------------------
# min_plus_naive
# ----------------------------------------------------------------------------

def test_naive_identity():
    ident = WeightMatrix.identity(4)
    assert mp.min_plus_naive(ident, ident) == ident


def test_naive_hand_example():
    a = WeightMatrix([[1, 2]])
    b = WeightMatrix([[3], [0]])
    assert mp.min_plus_naive(a, b).data.tolist() == [[2]]


def test_naive_matches_triple_loop():
    rng = np.random.default_rng(0)
    a = rand_matrix(rng, 12, 9)
    b = rand_matrix(rng, 9, 7)
    assert np.array_equal(mp.min_plus_naive(a, b).data,
                          triple_loop_minplus(a.data, b.data))


def test_naive_shape_mismatch():
    with pytest.raises(ValueError):
        mp.min_plus_naive(WeightMatrix([[1]]), WeightMatrix([[1], [2]]))


# ----------------------------------------------------------------------------
# packed boolean product
# ----------------------------------------------------------------------------

def test_boolean_matmul_identity_and_zero_row():
    rng = np.random.default_rng(1)
    p = rng.random((6, 6)) < 0.4
    p[2, :] = False
    assert np.array_equal(mp.boolean_matrix_multiply(p, np.eye(6, dtype=bool)), p)
    q = rng.random((6, 6)) < 0.4
    assert not mp.boolean_matrix_multiply(p, q)[2].any()


def test_boolean_matmul_random_vs_naive():
    rng = np.random.default_rng(2)
    p = rng.random((64, 64)) < 0.3
    q = rng.random((64, 64)) < 0.3
    assert np.array_equal(mp.boolean_matrix_multiply(p, q),
                          mp.boolean_matmul_naive(p, q))


def test_boolean_matmul_wide_inner_dimension():
    # forces the word-accumulation path (inner dim > 1024)
    rng = np.random.default_rng(3)
    p = rng.random((5, 1030)) < 0.02
    q = rng.random((1030, 9)) < 0.02
    assert np.array_equal(mp.boolean_matrix_multiply(p, q),
                          mp.boolean_matmul_naive(p, q))


# ----------------------------------------------------------------------------
# boolean_min_plus
# ----------------------------------------------------------------------------

def bool_minplus_ref(a, b):
    s, n = a.shape
    t = b.shape[1]
    out = np.full((s, t), POS_INF, dtype=np.int64)
    for i in range(s):
        for j in range(t):
            cand = [int(a[i, k]) for k in range(n)
                    if b[k, j] and a[i, k] != POS_INF]
            out[i, j] = min(cand) if cand else int(POS_INF)
    return out


def test_boolean_min_plus_identity():
    rng = np.random.default_rng(3)
    a = rand_matrix(rng, 5, 5)
    got, wit = mp.boolean_min_plus(a, np.eye(5, dtype=bool), 2)
    assert got == a


def test_boolean_min_plus_all_ones_gives_row_minima():
    rng = np.random.default_rng(4)
    a = rand_matrix(rng, 6, 8, inf_p=0.1)
    got, _ = mp.boolean_min_plus(a, np.ones((8, 3), dtype=bool), 4)
    mins = np.where(a.finite_mask().any(axis=1),
                    np.min(np.where(a.data == POS_INF, POS_INF, a.data), axis=1),
                    POS_INF)
    assert np.array_equal(got.data, np.tile(mins[:, None], (1, 3)))


@pytest.mark.parametrize("delta", [1, 4, 16])
def test_boolean_min_plus_random(delta):
    rng = np.random.default_rng(5 + delta)
    for _ in range(20):
        s, n, t = rng.integers(1, 17, size=3)
        a = rand_matrix(rng, s, n)
        b = rng.random((n, t)) < 0.4
        got, wit = mp.boolean_min_plus(a, b, delta)
        assert np.array_equal(got.data, bool_minplus_ref(a.data, b))
        for i in range(s):
            for j in range(t):
                if got.data[i, j] != POS_INF:
                    k = int(wit[i, j])
                    assert b[k, j] and a.data[i, k] == got.data[i, j]
                else:
                    assert wit[i, j] == -1


def test_boolean_min_plus_delta_independent():
    rng = np.random.default_rng(9)
    a = rand_matrix(rng, 8, 16)
    b = rng.random((16, 16)) < 0.3
    ref = None
    for delta in (1, 2, 3, 5, 16, 99):
        got, wit = mp.boolean_min_plus(a, b, delta)
        if ref is None:
            ref = (got, wit)
        else:
            assert got == ref[0]
            assert np.array_equal(wit, ref[1])


def test_bucket_index_partitions_rows():
    rng = np.random.default_rng(10)
    a = rand_matrix(rng, 6, 20, inf_p=0.3)
    idx = mp.build_bucket_index(a, 4)
    for i in range(6):
        seen = []
        prev_last = None
        for b in range(idx.delta):
            bucket = idx.bucket(i, b)
            vals = a.data[i, bucket]
            assert np.all(vals[:-1] <= vals[1:])
            if prev_last is not None and len(bucket):
                assert prev_last <= vals[0]
            if len(bucket):
                prev_last = vals[-1]
            seen.extend(bucket.tolist())
        finite_cols = np.nonzero(a.data[i] != POS_INF)[0]
        assert sorted(seen) == finite_cols.tolist()


# ----------------------------------------------------------------------------
# d_weights_min_plus
# ----------------------------------------------------------------------------

def column_capped_matrix(rng, n, t, d, inf_p=0.3, lo=-10, hi=10):
    m = np.full((n, t), POS_INF, dtype=np.int64)
    for j in range(t):
        palette = rng.integers(lo, hi, size=d)
        for i in range(n):
            if rng.random() >= inf_p:
                m[i, j] = palette[rng.integers(0, d)]
    return WeightMatrix(m, copy=False)


def test_dweights_all_inf():
    a = WeightMatrix(np.full((3, 4), POS_INF, dtype=np.int64))
    b = WeightMatrix(np.full((4, 5), POS_INF, dtype=np.int64))
    out = mp.d_weights_min_plus(a, b, 2)
    assert np.all(out.data == POS_INF)


@pytest.mark.parametrize("delta", [1, 4, 16])
def test_dweights_random_vs_naive(delta):
    rng = np.random.default_rng(11 + delta)
    for _ in range(20):
        s, n, t = rng.integers(1, 13, size=3)
        a = rand_matrix(rng, s, n)
        b = column_capped_matrix(rng, n, t, 3)
        got, wit = mp.d_weights_min_plus(a, b, delta, return_witnesses=True)
        want = mp.min_plus_naive(a, b)
        assert got == want
        for i in range(s):
            for j in range(t):
                if got.data[i, j] != POS_INF:
                    k = int(wit[i, j])
                    assert a.data[i, k] + b.data[k, j] == got.data[i, j]


def test_dweights_equals_boolean_plus_column_weight():
    # d = 1: one-hop matrix of a node-weighted graph
    rng = np.random.default_rng(20)
    n = 9
    edges = [(u, v) for u in range(n) for v in range(n)
             if u != v and rng.random() < 0.4]
    g = NodeWeightedGraph(n, edges, rng.integers(0, 9, size=n))
    onehop = np.full((n, n), POS_INF, dtype=np.int64)
    for u, v in g.edges():
        onehop[u, v] = g.node_weight[v]
    a = rand_matrix(rng, 5, n, inf_p=0.2, lo=0, hi=15)
    got = mp.d_weights_min_plus(a, WeightMatrix(onehop), 3, d=1)
    bool_part, _ = mp.boolean_min_plus(a, g.adjacency_bool(), 3)
    want = np.where(bool_part.data == POS_INF, POS_INF,
                    bool_part.data + g.node_weight[None, :])
    assert np.array_equal(got.data, want)


def test_dweights_audit_error():
    a = WeightMatrix([[0, 0, 0]])
    b = WeightMatrix([[1], [2], [3]])
    with pytest.raises(AuditError):
        mp.d_weights_min_plus(a, b, 1, d=2)


# ----------------------------------------------------------------------------
# hop-bounded products
# ----------------------------------------------------------------------------

def rand_node_graph(rng, n, p=0.3, lo=0, hi=10):
    edges = [(u, v) for u in range(n) for v in range(n)
             if u != v and rng.random() < p]
    return NodeWeightedGraph(n, edges, rng.integers(lo, hi, size=n))


def test_hop_product_h0_returns_input():
    rng = np.random.default_rng(30)
    g = rand_node_graph(rng, 6)
    a = rand_matrix(rng, 3, 6)
    out = mp.hop_bounded_product(a, g, 0)
    assert out.values == a


def test_hop_product_matches_dijkstra():
    rng = np.random.default_rng(31)
    for _ in range(5):
        n = int(rng.integers(4, 12))
        g = rand_node_graph(rng, n)
        res = mp.hop_bounded_product(mp.trivial_rows(np.arange(n), n), g, n,
                                     delta=2)
        for s in range(n):
            assert res.values.data[s].tolist() == dijkstra_node_weighted(g, s)


def test_hop_product_prefix_sum_path():
    g = NodeWeightedGraph(3, [(0, 1), (1, 2)], [7, 2, 3])
    res = mp.hop_bounded_product(mp.trivial_rows(np.array([0]), 3), g, 2)
    assert res.values.data[0].tolist() == [0, 2, 5]
    assert res.path(0, 2) == [0, 1, 2]


def test_hop_product_monotone_in_h():
    rng = np.random.default_rng(32)
    g = rand_node_graph(rng, 10)
    a = mp.trivial_rows(np.arange(10), 10)
    prev = None
    for h in range(6):
        cur = mp.hop_bounded_product(a, g, h, delta=3).values.data
        if prev is not None:
            assert np.all(cur <= prev)
        prev = cur


def test_hop_product_witness_paths_reevaluate():
    rng = np.random.default_rng(33)
    g = rand_node_graph(rng, 9)
    a = rand_matrix(rng, 4, 9, inf_p=0.5, lo=0, hi=9)
    res = mp.hop_bounded_product(a, g, 4, delta=2)
    for i in range(4):
        for v in range(9):
            p = res.path(i, v)
            val = res.values.data[i, v]
            if val == POS_INF:
                assert p is None
                continue
            assert len(p) - 1 <= 4
            w = int(a.data[i, p[0]]) + sum(int(g.node_weight[x]) for x in p[1:])
            assert w == val


def test_left_product_h0_and_cross_check():
    rng = np.random.default_rng(34)
    g = rand_node_graph(rng, 8)
    a = rand_matrix(rng, 8, 3, inf_p=0.3, lo=0, hi=9)
    assert mp.hop_bounded_product_left(g, a, 0).values == a
    # D^{<=3} * A computed two ways
    one = build_one_hop_matrix(g)
    d3 = mp.min_plus_naive(mp.min_plus_naive(one, one), one)
    want = mp.min_plus_naive(d3, a)
    got = mp.hop_bounded_product_left(g, a, 3, delta=2)
    assert got.values == want


def test_left_product_trivial_matches_right_on_reverse():
    rng = np.random.default_rng(35)
    g = rand_node_graph(rng, 9)
    n = g.n
    sel = np.array([1, 4, 7])
    a = np.full((n, sel.size), POS_INF, dtype=np.int64)
    a[sel, np.arange(sel.size)] = 0
    left = mp.hop_bounded_product_left(g, a, 3, delta=2).values.data
    one = build_one_hop_matrix(g)
    d3 = mp.min_plus_naive(mp.min_plus_naive(one, one), one).data
    assert np.array_equal(left, d3[:, sel])


def rand_edge_graph(rng, n, d, p=0.35, lo=0, hi=20):
    palettes = [rng.integers(lo, hi, size=d) for _ in range(n)]
    edges = []
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < p:
                edges.append((u, v, int(palettes[v][rng.integers(0, d)])))
    return EdgeWeightedGraph(n, edges)


def test_hop_edge_h0():
    rng = np.random.default_rng(36)
    g = rand_edge_graph(rng, 7, 2)
    a = rand_matrix(rng, 3, 7)
    assert mp.hop_bounded_product_edge(a, g, 0, d=2).values == a


def test_hop_edge_d1_matches_node_weighted():
    rng = np.random.default_rng(37)
    n = 8
    gnode = rand_node_graph(rng, n)
    edges = [(u, v, int(gnode.node_weight[v])) for u, v in gnode.edges()]
    gedge = EdgeWeightedGraph(n, edges)
    a = mp.trivial_rows(np.arange(n), n)
    r1 = mp.hop_bounded_product(a, gnode, 4, delta=2).values
    r2 = mp.hop_bounded_product_edge(a, gedge, 4, d=1, delta=2).values
    assert r1 == r2


def test_hop_edge_matches_repeated_naive():
    rng = np.random.default_rng(38)
    g = rand_edge_graph(rng, 9, 3)
    one = build_one_hop_matrix(g)
    a = rand_matrix(rng, 4, 9, inf_p=0.4, lo=0, hi=9)
    cur = a
    for _ in range(4):
        cur = mp.min_plus_naive(cur, one)
    got = mp.hop_bounded_product_edge(a, g, 4, d=3, delta=2)
    assert got.values == cur
    for i in range(4):
        for v in range(9):
            p = got.path(i, v)
            if p is None:
                continue
            w = int(a.data[i, p[0]])
            for x, y in zip(p, p[1:]):
                w += min(int(wt) for (u2, v2, wt) in g.edges()
                         if u2 == x and v2 == y)
            assert w == got.values.data[i, v]


def test_hop_edge_audit_failure():
    g = EdgeWeightedGraph(3, [(0, 2, 1), (1, 2, 2)])
    a = mp.trivial_rows(np.arange(3), 3)
    with pytest.raises(AuditError):
        mp.hop_bounded_product_edge(a, g, 1, d=1)
