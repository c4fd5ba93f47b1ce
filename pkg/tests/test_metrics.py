import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIG_FINAL, FIG_FIRST_PASS, fig_clustering
from dpcommunity.graph import Clustering, Graph
from dpcommunity.metrics import (UndefinedModularityError, avg_f1, community_contribution, f1_sets,
                                 modularity, partial_modularity)


def _brute_avg_f1(a_blocks, b_blocks):
    def f1(x, y):
        x, y = set(x), set(y)
        inter = len(x & y)
        if inter == 0:
            return 0.0
        prec, rec = inter / len(x), inter / len(y)
        return 2 * prec * rec / (prec + rec)
    left = sum(max(f1(a, b) for b in b_blocks) for a in a_blocks) / len(a_blocks)
    right = sum(max(f1(a, b) for a in a_blocks) for b in b_blocks) / len(b_blocks)
    return 0.5 * left + 0.5 * right


def test_fig_values(fig_graph):
    assert abs(modularity(fig_graph, Clustering.singletons(13)) - (-0.0825)) < 1e-9
    assert abs(modularity(fig_graph, fig_clustering(FIG_FIRST_PASS)) - 0.46375) < 1e-9
    assert abs(modularity(fig_graph, fig_clustering(FIG_FINAL)) - 0.47) < 1e-9


def test_single_community_is_zero(fig_graph, triangle):
    assert modularity(fig_graph, Clustering.whole(13)) == pytest.approx(0.0, abs=1e-15)
    assert community_contribution(triangle, [0, 1, 2]) == pytest.approx(0.0, abs=1e-15)


def test_triangle_singleton_contribution(triangle):
    assert community_contribution(triangle, [0]) == pytest.approx(-1 / 9)


def test_first_pass_blocks_sum(fig_graph):
    total = sum(community_contribution(fig_graph, b) for b in FIG_FIRST_PASS)
    assert total == pytest.approx(0.46375, abs=1e-12)


def test_empty_graph_is_undefined():
    g = Graph.from_edges(3, [])
    with pytest.raises(UndefinedModularityError):
        modularity(g, Clustering.singletons(3))


def test_matches_networkx_on_fig_graph(fig_graph):
    G = nx.Graph()
    G.add_nodes_from(range(13))
    G.add_edges_from((u, v) for u, v in zip(*fig_graph.edge_arrays()[:2]))
    for blocks in (FIG_FIRST_PASS, FIG_FINAL, [[i] for i in range(13)]):
        ours = modularity(fig_graph, fig_clustering(blocks))
        assert ours == pytest.approx(nx.community.modularity(G, blocks), abs=1e-12)


def test_f1_closed_form_singletons_vs_one_block():
    for n in (1, 2, 5, 9, 40):
        got = avg_f1(Clustering.singletons(n), Clustering.whole(n))
        assert got == pytest.approx(2 / (n + 1), abs=1e-12)
    assert avg_f1(Clustering.singletons(9), Clustering.whole(9)) == pytest.approx(0.2)


def test_f1_small_case_matches_brute_force():
    a = [[0, 1], [2, 3]]
    b = [[0, 1, 2], [3]]
    got = avg_f1(Clustering.from_communities(a, 4), Clustering.from_communities(b, 4))
    # F1({0,1},{0,1,2}) = 0.8, F1({2,3},{3}) = 2/3
    assert got == pytest.approx(_brute_avg_f1(a, b))
    assert got == pytest.approx(0.5 * (0.8 + 2 / 3) / 2 + 0.5 * (0.8 + 2 / 3) / 2)


def test_f1_errors():
    with pytest.raises(ValueError):
        avg_f1(Clustering.singletons(3), Clustering.singletons(4))
    with pytest.raises(ValueError):
        avg_f1(np.zeros(0, dtype=int), np.zeros(0, dtype=int))


def test_f1_sets_empty_is_zero():
    assert f1_sets([], [1, 2]) == 0.0
    assert f1_sets([1, 2], [2, 3]) == pytest.approx(0.5)


def test_partial_cover_counts_outside_degree(triangle):
    # nodes 0 and 1 in one group, node 2 outside the scored set
    q = partial_modularity(triangle, np.array([0, 0, -1]))
    assert q == pytest.approx(1 / 3 - (4 / 6) ** 2)


label_lists = st.integers(1, 12).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 4), min_size=n, max_size=n),
                        st.lists(st.integers(0, 4), min_size=n, max_size=n)))


@settings(max_examples=200, deadline=None)
@given(label_lists)
def test_f1_properties(pair):
    a, b = Clustering(np.array(pair[0])), Clustering(np.array(pair[1]))
    v = avg_f1(a, b)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(avg_f1(b, a), abs=1e-12)
    assert avg_f1(a, a) == pytest.approx(1.0)
    brute = _brute_avg_f1([c.tolist() for c in a.communities], [c.tolist() for c in b.communities])
    assert v == pytest.approx(brute, abs=1e-12)


@st.composite
def weighted_graph_partition(draw):
    n = draw(st.integers(2, 14))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
                          min_size=1, max_size=40))
    weights = draw(st.lists(st.integers(1, 3), min_size=len(pairs), max_size=len(pairs)))
    labels = draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    return Graph.from_edges(n, pairs, weights), Clustering(np.array(labels))


@settings(max_examples=200, deadline=None)
@given(weighted_graph_partition())
def test_modularity_additive_and_bounded(data):
    g, c = data
    q = modularity(g, c)
    assert -1.0 <= q <= 1.0
    parts = math.fsum(community_contribution(g, b) for b in c.communities)
    assert q == pytest.approx(parts, abs=1e-12)


def _random_simple_graph(rng, n):
    p = rng.uniform(0.05, 0.6)
    iu = np.triu_indices(n, 1)
    mask = rng.random(len(iu[0])) < p
    return list(zip(iu[0][mask].tolist(), iu[1][mask].tolist()))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sensitivity_bound_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 31))
    edges = _random_simple_graph(rng, n)
    present = set(edges)
    missing = [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in present]
    if not edges or not missing:
        return
    g = Graph.from_edges(n, edges)
    g2 = Graph.from_edges(n, edges + [missing[rng.integers(len(missing))]])
    labels = rng.integers(0, rng.integers(1, n + 1), n)
    # partition of a random subset of the nodes
    labels[rng.random(n) < rng.uniform(0, 0.5)] = -1
    if (labels < 0).all():
        labels[0] = 0
    delta = abs(partial_modularity(g2, labels) - partial_modularity(g, labels))
    assert delta < 3.0 / g.m
