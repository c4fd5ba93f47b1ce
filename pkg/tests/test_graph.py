import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpcommunity.graph import (Clustering, Graph, GraphFormatError, induced_stats, load_edge_list,
                               random_permutation, read_clustering, subset_stats, write_clustering,
                               write_edge_list)


def _write(tmp_path, text, name="g.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_from_edges_merges_duplicates_and_is_symmetric():
    g = Graph.from_edges(3, [(0, 1), (1, 0), (1, 2)])
    assert g.num_edges == 2
    assert g.m == 3.0
    assert g.has_edge(1, 0) and g.has_edge(0, 1)
    for u in range(g.n):
        nb, w = g.neighbors(u)
        for v, x in zip(nb, w):
            back_nb, back_w = g.neighbors(v)
            assert x == back_w[list(back_nb).index(u)]


def test_selfloop_counts_once_in_m_twice_in_degree():
    g = Graph.from_edges(2, [(0, 0), (0, 1)], weights=[2.0, 1.0])
    assert g.m == 3.0
    assert g.degree.tolist() == [5.0, 1.0]
    assert g.degree.sum() == 2 * g.m


def test_arrays_are_read_only(triangle):
    with pytest.raises(ValueError):
        triangle.degree[0] = 7


def test_load_dedups_to_triangle(tmp_path):
    g = load_edge_list(_write(tmp_path, "0 1\n1 0\n0 1\n1 2\n2 0\n"))
    assert g.n == 3 and g.m == 3 and g.is_simple


def test_load_empty_file(tmp_path):
    g = load_edge_list(_write(tmp_path, ""))
    assert g.n == 0 and g.m == 0


def test_load_compacts_ids_in_first_appearance_order(tmp_path):
    g = load_edge_list(_write(tmp_path, "# comment\n10 5\n5 7\n"))
    assert g.node_ids.tolist() == [10, 5, 7]
    assert g.has_edge(0, 1) and g.has_edge(1, 2) and not g.has_edge(0, 2)


def test_load_drops_selfloops_but_keeps_node(tmp_path):
    g = load_edge_list(_write(tmp_path, "0 1\n2 2\n"))
    assert g.n == 3 and g.m == 1


def test_load_reports_line_number(tmp_path):
    with pytest.raises(GraphFormatError, match=":3:"):
        load_edge_list(_write(tmp_path, "0 1\n1 2\n1 x\n"))


def test_load_missing_file(tmp_path):
    with pytest.raises(GraphFormatError):
        load_edge_list(tmp_path / "nope.txt")


def test_directed_input_rejected_when_asked(tmp_path):
    p = _write(tmp_path, "0 1\n1 0\n")
    with pytest.raises(GraphFormatError):
        load_edge_list(p, directed_as_undirected=False)


def test_weighted_load(tmp_path):
    g = load_edge_list(_write(tmp_path, "0 1 2.5\n1 1 1\n"), weighted=True)
    assert g.m == 3.5 and g.loops[1] == 1.0


@pytest.mark.parametrize("weighted", [False, True])
def test_write_then_load_round_trip(tmp_path, weighted):
    rng = np.random.default_rng(3)
    edges = rng.integers(0, 12, size=(30, 2))
    if weighted:
        g = Graph.from_edges(14, edges, rng.integers(1, 5, 30).astype(float),
                             node_ids=np.arange(100, 114))
    else:
        edges = np.unique(np.sort(edges[edges[:, 0] != edges[:, 1]], axis=1), axis=0)
        g = Graph.from_edges(14, edges, node_ids=np.arange(100, 114))
    p = tmp_path / "rt.txt"
    write_edge_list(g, p)
    back = load_edge_list(p, weighted=weighted)
    assert back == g
    assert back.n == 14


def test_clustering_round_trip(tmp_path):
    c = Clustering.from_communities([[0, 3], [1], [2, 4]], 5)
    ids = [50, 60, 70, 80, 90]
    p = tmp_path / "c.txt"
    write_clustering(c, p, ids)
    assert p.read_text().splitlines()[0] == "50 80"
    assert read_clustering(p, ids) == c


def test_clustering_universe_mismatch(tmp_path):
    p = _write(tmp_path, "0 1\n2\n", "c.txt")
    with pytest.raises(GraphFormatError):
        read_clustering(p, [0, 1, 2, 3])


def test_clustering_requires_cover():
    with pytest.raises(ValueError):
        Clustering.from_communities([[0, 1], [1, 2]], 3)
    with pytest.raises(ValueError):
        Clustering.from_communities([[0, 1]], 3)


def test_clustering_equality_ignores_label_names():
    assert Clustering(np.array([5, 5, 2])) == Clustering(np.array([0, 0, 1]))
    assert Clustering(np.array([0, 1, 1])) != Clustering(np.array([0, 0, 1]))


def test_random_permutation_small_cases():
    assert random_permutation(1, 0).tolist() == [0]
    assert random_permutation(0, 0).tolist() == []
    assert random_permutation(8, 1).tolist() == random_permutation(8, 1).tolist()
    assert random_permutation(8, 1).tolist() != random_permutation(8, 2).tolist()


def test_random_permutation_is_uniform():
    rng = np.random.default_rng(11)
    draws = 100_000
    counts = Counter(tuple(random_permutation(5, rng).tolist()) for _ in range(draws))
    assert len(counts) == 120
    p = 1 / 120
    sigma = np.sqrt(draws * p * (1 - p))
    # Bonferroni-ish: 120 cells, allow 4 sigma
    assert max(abs(c - draws * p) for c in counts.values()) < 4 * sigma


def test_subset_stats_examples(triangle):
    assert subset_stats(triangle, [0, 1, 2]) == (3.0, 6.0)
    assert subset_stats(triangle, [0]) == (0.0, 2.0)
    assert subset_stats(triangle, [0, 1]) == (1.0, 4.0)
    with pytest.raises(IndexError):
        subset_stats(triangle, [3])


@st.composite
def graph_and_labels(draw):
    n = draw(st.integers(1, 15))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=40))
    weights = draw(st.lists(st.integers(1, 4), min_size=len(pairs), max_size=len(pairs)))
    g = Graph.from_edges(n, pairs, weights)
    labels = np.array(draw(st.lists(st.integers(0, 3), min_size=n, max_size=n)))
    return g, labels


@settings(max_examples=200, deadline=None)
@given(graph_and_labels())
def test_subset_stats_over_blocks(data):
    g, labels = data
    assert np.isclose(g.degree.sum(), 2 * g.m)
    c = Clustering(labels)
    stats = [subset_stats(g, b) for b in c.communities]
    assert sum(s[0] for s in stats) <= g.m + 1e-9
    assert np.isclose(sum(s[1] for s in stats), 2 * g.m)
    intra, deg = induced_stats(g, c.canonical_labels())
    assert np.allclose(intra, [s[0] for s in stats])
    assert np.allclose(deg, [s[1] for s in stats])


@settings(max_examples=100, deadline=None)
@given(graph_and_labels())
def test_adjacency_has_no_duplicates(data):
    g, _ = data
    for u in range(g.n):
        nb, _ = g.neighbors(u)
        assert len(set(nb.tolist())) == len(nb)
    u, v, w = g.edge_arrays()
    assert len(set(zip(u.tolist(), v.tolist()))) == len(u)
    assert np.isclose(w.sum(), g.m)


def test_all_pairs_from_edges_complete_graph():
    g = Graph.from_edges(5, list(itertools.combinations(range(5), 2)))
    assert g.m == 10 and np.all(g.degree == 4)
