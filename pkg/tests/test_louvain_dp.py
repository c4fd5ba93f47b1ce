import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpcommunity.generators import planted_partition, random_graph
from dpcommunity.graph import Clustering, Graph
from dpcommunity.louvain import louvain
from dpcommunity.louvain_dp import (_unrank_pairs, build_supergraph, high_pass_filter, louvain_dp,
                                    threshold)
from dpcommunity.metrics import modularity


def test_threshold_example():
    theta, s, clamped = threshold(10, 100, math.exp(-1))
    assert (theta, s, clamped) == (2, 8, False)


def test_threshold_clamps_to_one():
    # dense domain: the raw log is negative
    theta, s, clamped = threshold(90, 100, math.exp(-1))
    assert theta == 1 and clamped
    assert s <= 90


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 10**7), st.floats(0.0, 1.0), st.floats(1e-3, 20.0))
def test_threshold_bounds(m0, frac, eps1):
    m1 = min(max(1.0, frac * m0), m0 - 1.0)
    theta, s, _ = threshold(m1, m0, math.exp(-eps1))
    assert theta >= 1
    assert 0 <= s <= m1


def test_vanishing_noise_limit():
    g, _ = planted_partition(4, 20, 0.3, 0.02, 1)
    sg = build_supergraph(g, 2, 0)
    g1, p = high_pass_filter(sg, 800.0, 0.1, 3)
    assert p.theta == 1 and p.s == 0
    assert g1 == sg.base


def test_supergraph_examples(triangle):
    sg = build_supergraph(triangle, 2, permutation=[0, 1, 2])
    assert sg.num_supernodes == 1
    # n // k = 1 supernode; node 2 is a remainder and joins it
    assert sg.mapping.tolist() == [0, 0, 0]
    assert sg.base.m == 3


def test_supergraph_triangle_k1_and_kn(triangle):
    sg = build_supergraph(triangle, 1, permutation=[2, 0, 1])
    assert sg.base.n == 3 and sg.base.m == 3 and sg.base.is_simple
    whole = build_supergraph(triangle, 3, 0)
    assert whole.base.n == 1 and whole.base.loops[0] == 3
    with pytest.raises(ValueError):
        build_supergraph(triangle, 4, 0)


def test_supergraph_with_remainder_on_four_nodes():
    g = Graph.from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
    sg = build_supergraph(g, 2, permutation=[0, 1, 2, 3])
    assert sg.mapping.tolist() == [0, 0, 1, 1]
    assert sg.base.loops.tolist() == [1.0, 1.0]
    nb, w = sg.base.neighbors(0)
    assert dict(zip(nb.tolist(), w.tolist()))[1] == 2.0


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 60), st.integers(1, 10), st.integers(0, 2**31))
def test_supergraph_conserves_weight(n, k, seed):
    k = min(k, n)
    g = random_graph(n, min(n * (n - 1) // 2, 2 * n), seed)
    sg = build_supergraph(g, k, seed)
    assert sg.base.m == pytest.approx(g.m)
    assert sg.base.n == n // k
    sizes = np.bincount(sg.mapping, minlength=n // k)
    assert sizes[:-1].tolist() == [k] * (n // k - 1)
    assert sizes[-1] == k + n % k


def test_unrank_pairs_is_a_bijection():
    N = 40
    i, j = _unrank_pairs(np.arange(N * (N + 1) // 2))
    pairs = set(zip(i.tolist(), j.tolist()))
    assert pairs == {(a, b) for b in range(N) for a in range(b + 1)}


def test_unrank_pairs_large_indices():
    idx = np.array([10**12, 10**12 + 12345, 2**40 - 1], dtype=np.int64)
    i, j = _unrank_pairs(idx)
    assert np.all(j * (j + 1) // 2 + i == idx)
    assert np.all((0 <= i) & (i <= j))


def test_filter_invariants_and_edge_bound():
    g = random_graph(2000, 4000, 5)
    for seed in range(30):
        for k in (2, 8):
            for eps in (0.3, 1.0, 3.0):
                sg = build_supergraph(g, k, seed)
                g1, p = high_pass_filter(sg, eps - 0.1, 0.1, seed)
                assert p.theta >= 1
                assert 0 <= p.s <= p.m1_noisy
                assert g1.num_edges <= 2 * g.m
                assert np.all(g1.weights >= 1)


def test_zero_superedge_weights_follow_stated_cdf():
    g = random_graph(300, 600, 2)
    sg = build_supergraph(g, 1, 0)
    present = set(zip(*[a.tolist() for a in sg.base.edge_arrays()[:2]]))
    ws, theta = [], None
    for seed in range(40):
        g1, p = high_pass_filter(sg, 0.5, 0.1, seed)
        theta = p.theta if theta is None else theta
        if p.theta != theta:
            continue
        u, v, w = g1.edge_arrays()
        ws.extend(x for a, b, x in zip(u.tolist(), v.tolist(), w.tolist()) if (a, b) not in present)
    ws = np.array(ws)
    alpha = math.exp(-0.5)
    assert len(ws) > 2000 and ws.min() >= theta
    for x in range(theta, theta + 6):
        assert np.mean(ws <= x) == pytest.approx(1 - alpha ** (x - theta + 1), abs=0.02)


def test_lifted_clustering_keeps_supernodes_whole():
    g, _ = planted_partition(4, 40, 0.3, 0.01, 6)
    for seed in range(5):
        r = louvain_dp(g, 4, 2.0, seed)
        for members in np.unique(r.supergraph.mapping):
            labels = r.clustering.labels[r.supergraph.mapping == members]
            assert len(set(labels.tolist())) == 1
        assert r.ledger.total == pytest.approx(2.0)
        assert r.noisy_graph.num_edges <= 2 * g.m


def test_noiseless_limit_matches_exact_louvain():
    g, _ = planted_partition(4, 40, 0.3, 0.01, 6)
    exact = louvain(g, 0).final_modularity
    qs = [modularity(g, louvain_dp(g, 1, 1000.0, s).clustering) for s in range(5)]
    assert np.median(qs) == pytest.approx(exact, abs=0.02)


def test_private_beats_random_labels():
    g, _ = planted_partition(4, 100, 0.3, 0.01, 6)
    eps = 0.5 * math.log(g.n)
    rng = np.random.default_rng(0)
    q_random = max(modularity(g, Clustering(rng.integers(0, 4, g.n))) for _ in range(20))
    q = np.median([modularity(g, louvain_dp(g, 8, eps, s).clustering) for s in range(10)])
    assert q > q_random


def test_deterministic_and_budget_checks():
    g, _ = planted_partition(3, 30, 0.3, 0.02, 1)
    a = louvain_dp(g, 4, 1.0, 7).clustering
    b = louvain_dp(g, 4, 1.0, 7).clustering
    assert a.canonical_labels().tolist() == b.canonical_labels().tolist()
    with pytest.raises(ValueError):
        louvain_dp(g, 4, 0.05)


def test_degenerate_domain_flag():
    g = Graph.from_edges(3, [(0, 1), (1, 2)])
    r = louvain_dp(g, 3, 1.0, 0)
    assert "degenerate-domain" in r.flags
    assert r.clustering.num_communities == 1
