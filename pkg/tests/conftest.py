import os
from pathlib import Path

import pytest

from dpcommunity.graph import Clustering, Graph, load_edge_list

# 13-node, 20-edge example graph used throughout the modularity and Louvain tests
FIG_EDGES = [(0, 1), (0, 2), (1, 2), (2, 10), (2, 12), (3, 4), (3, 12), (4, 5), (4, 8),
             (5, 6), (5, 11), (5, 12), (6, 11), (6, 12), (7, 8), (7, 9), (7, 10), (8, 9),
             (9, 10), (11, 12)]
FIG_FIRST_PASS = [[0, 1, 2], [3, 4], [5, 6, 11, 12], [7, 8, 9, 10]]
FIG_FINAL = [[0, 1, 2], [3, 4, 5, 6, 11, 12], [7, 8, 9, 10]]

AS20_NODES, AS20_EDGES = 6474, 12572


@pytest.fixture
def fig_graph():
    return Graph.from_edges(13, FIG_EDGES)


@pytest.fixture
def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def two_triangles():
    return Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


def fig_clustering(blocks):
    return Clustering.from_communities(blocks, 13)


def as20_path():
    candidates = [os.environ.get("DPCOMMUNITY_AS20GRAPH"),
                  Path(__file__).resolve().parents[1] / "data" / "as20000102.txt"]
    for c in candidates:
        if c and Path(c).is_file():
            return Path(c)
    return None


@pytest.fixture(scope="session")
def as20graph():
    path = as20_path()
    if path is None:
        pytest.skip("as20graph not available (set DPCOMMUNITY_AS20GRAPH or place data/as20000102.txt)")
    return load_edge_list(path)


# acceptance outcomes, filled by test_acceptance.py
RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    order = sorted(RESULTS, key=lambda k: (int(str(k).rstrip("s")), str(k)))
    for key in order:
        status, detail = RESULTS[key]
        label = f"criterion {key}" if isinstance(key, int) else f"supplementary {key[:-1]} (synthetic)"
        terminalreporter.write_line(f"{status} {label}: {detail}")
