"""Clustering quality: modularity and the average best-match F1 score."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Clustering, Graph, induced_stats, subset_stats


class UndefinedModularityError(ValueError):
    """Modularity of a graph with no edge weight."""


@dataclass
class QualityReport:
    modularity: float
    avg_f1: float
    num_communities: int
    wall_time: float = 0.0


def _check_m(g: Graph) -> float:
    if not g.m > 0:
        raise UndefinedModularityError("modularity is undefined for a graph with m = 0")
    return g.m


def community_contribution(g: Graph, nodes) -> float:
    """``l_S/m - (d_S/2m)**2`` for one node set."""
    m = _check_m(g)
    intra, deg = subset_stats(g, nodes)
    return intra / m - (deg / (2.0 * m)) ** 2


def modularity(g: Graph, clustering) -> float:
    """Weighted Newman-Girvan modularity of a full partition of ``g``."""
    m = _check_m(g)
    labels = clustering.labels if isinstance(clustering, Clustering) else np.asarray(clustering)
    if len(labels) != g.n:
        raise ValueError(f"clustering covers {len(labels)} nodes, graph has {g.n}")
    if (labels < 0).any():
        raise ValueError("clustering leaves nodes unassigned")
    labels = np.unique(labels, return_inverse=True)[1]
    intra, deg = induced_stats(g, labels)
    return float(intra.sum() / m - ((deg / (2.0 * m)) ** 2).sum())


def partial_modularity(g: Graph, labels) -> float:
    """Modularity of a partition of a node subset; label ``-1`` marks outsiders.

    Edges to outsiders count towards group degrees but never as intra edges.
    """
    m = _check_m(g)
    intra, deg = induced_stats(g, np.asarray(labels))
    return float(intra.sum() / m - ((deg / (2.0 * m)) ** 2).sum())


def _as_labels(c) -> np.ndarray:
    if isinstance(c, Clustering):
        return c.labels
    return Clustering.from_communities(c).labels


def avg_f1(c, c_ref) -> float:
    """Symmetric average of best-match F1 scores between two clusterings.

    ``F1(a, b) = 2|a & b| / (|a| + |b|)``; each block of one clustering is
    scored by its best match in the other, averaged per side, and the two
    side averages are averaged.
    """
    a, b = _as_labels(c), _as_labels(c_ref)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("avg_f1 of an empty clustering")
    if len(a) != len(b):
        raise ValueError("clusterings cover different node universes")
    _, a = np.unique(a, return_inverse=True)
    _, b = np.unique(b, return_inverse=True)
    size_a = np.bincount(a)
    size_b = np.bincount(b)
    key, overlap = np.unique(a * len(size_b) + b, return_counts=True)
    ia, ib = key // len(size_b), key % len(size_b)
    f1 = 2.0 * overlap / (size_a[ia] + size_b[ib])
    best_a = np.zeros(len(size_a))
    best_b = np.zeros(len(size_b))
    np.maximum.at(best_a, ia, f1)
    np.maximum.at(best_b, ib, f1)
    return float(0.5 * best_a.mean() + 0.5 * best_b.mean())


def f1_sets(a, b) -> float:
    """F1 of set ``a`` against set ``b``; 0 when either is empty."""
    a, b = set(a), set(b)
    if not a or not b:
        return 0.0
    return 2.0 * len(a & b) / (len(a) + len(b))
