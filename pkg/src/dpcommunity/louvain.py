"""Exact weighted Louvain modularity optimisation.

Each pass sweeps the nodes in a freshly shuffled order, greedily moving every
node into the neighbouring community with the largest modularity gain, then
folds communities into a weighted graph (intra-community weight becomes a
selfloop). Passes stop once a sweep moves nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import Clustering, Graph
from .mechanisms import as_generator
from .metrics import UndefinedModularityError, modularity

# Minimum modularity gain for a move; guards against float livelock.
MIN_GAIN = 1e-12


@dataclass
class LouvainResult:
    clustering: Clustering
    pass_partitions: list[Clustering] = field(default_factory=list)
    pass_modularities: list[float] = field(default_factory=list)
    final_modularity: float = 0.0


def aggregate(g: Graph, clustering) -> Graph:
    """Fold each community into one node.

    Cross-community weights are summed; intra-community weight (including
    member selfloops) becomes a selfloop, so ``m`` and total degree are kept.
    """
    labels = clustering.canonical_labels() if isinstance(clustering, Clustering) \
        else Clustering(clustering).canonical_labels()
    if len(labels) != g.n:
        raise ValueError("clustering does not cover the graph")
    k = int(labels.max()) + 1 if len(labels) else 0
    u, v, w = g.edge_arrays()
    return Graph.from_edges(k, np.column_stack([labels[u], labels[v]]), w)


def louvain(g: Graph, rng=None, min_gain: float = MIN_GAIN) -> LouvainResult:
    """Run the Louvain method on ``g``.

    ``pass_partitions[i]`` is the clustering of the original nodes after pass
    ``i``; ties between equally good target communities go to the lowest
    community id.
    """
    if not g.m > 0:
        raise UndefinedModularityError("Louvain needs a graph with positive edge weight")
    gen = as_generator(rng)
    mapping = np.arange(g.n)
    current = g
    result = LouvainResult(Clustering.singletons(g.n))
    while True:
        order = gen.permutation(current.n)
        comm, moved = _kernels.move_nodes(current.indptr, current.indices, current.weights,
                                          current.degree, current.m, order, min_gain * current.m)
        if not moved:
            break
        step = Clustering(np.asarray(comm))
        labels = step.canonical_labels()
        mapping = labels[mapping]
        clustering = Clustering(mapping)
        result.pass_partitions.append(clustering)
        result.pass_modularities.append(modularity(g, clustering))
        current = aggregate(current, step)
    if result.pass_partitions:
        result.clustering = result.pass_partitions[-1]
    result.final_modularity = modularity(g, result.clustering)
    return result


def louvain_or_singletons(g: Graph, rng=None) -> Clustering:
    """Louvain clustering, or all singletons when ``g`` has no edges."""
    if not g.m > 0:
        return Clustering.singletons(g.n)
    return louvain(g, rng).clustering
