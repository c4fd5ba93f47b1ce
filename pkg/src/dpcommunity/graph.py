"""Undirected weighted graphs, clusterings and their text formats.

Nodes are dense integer ids ``0..n-1``. Original ids read from an edge list
are kept in ``Graph.node_ids`` so that clusterings can be written back in
the input's id space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .mechanisms import as_generator


class GraphFormatError(ValueError):
    """Malformed edge-list or clustering file."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Graph:
    """Immutable weighted undirected graph in CSR form.

    Each undirected edge ``(u, v, w)`` with ``u != v`` is stored twice in the
    adjacency (once per direction); a selfloop is stored once and contributes
    ``2w`` to its node's degree and ``w`` to ``m``.
    """

    __slots__ = ("n", "indptr", "indices", "weights", "degree", "loops", "m",
                 "node_ids", "_edges", "_adj")

    def __init__(self, n, indptr, indices, weights, node_ids=None):
        self.n = int(n)
        self.indptr = _frozen(np.asarray(indptr, dtype=np.int64))
        self.indices = _frozen(np.asarray(indices, dtype=np.int64))
        self.weights = _frozen(np.asarray(weights, dtype=np.float64))
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        self_mask = rows == self.indices
        loops = np.zeros(self.n)
        np.add.at(loops, rows[self_mask], self.weights[self_mask])
        self.loops = _frozen(loops)
        deg = np.zeros(self.n)
        np.add.at(deg, rows, self.weights)
        self.degree = _frozen(deg + loops)
        self.m = float(self.degree.sum() / 2.0)
        if node_ids is None:
            node_ids = np.arange(self.n)
        self.node_ids = _frozen(np.asarray(node_ids, dtype=np.int64))
        if len(self.node_ids) != self.n:
            raise ValueError("node_ids length does not match n")
        self._edges = None
        self._adj = None

    @classmethod
    def from_edges(cls, n: int, edges, weights=None, node_ids=None) -> "Graph":
        """Build a graph from an ``(E, 2)`` edge array.

        Repeated pairs (in either orientation) are merged by summing their
        weights. Missing weights default to 1. Zero-weight pairs are dropped.
        """
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if weights is None:
            w = np.ones(len(edges))
        else:
            w = np.asarray(weights, dtype=np.float64)
            if w.shape != (len(edges),):
                raise ValueError("weights must have one entry per edge")
            if (w < 0).any():
                raise ValueError("edge weights must be non-negative")
        if len(edges) and (edges.min() < 0 or edges.max() >= n):
            raise ValueError(f"edge endpoint out of range 0..{n - 1}")
        u = np.minimum(edges[:, 0], edges[:, 1])
        v = np.maximum(edges[:, 0], edges[:, 1])
        key, inv = np.unique(u * max(n, 1) + v, return_inverse=True)
        wsum = np.bincount(inv, weights=w, minlength=len(key)) if len(key) else np.zeros(0)
        keep = wsum > 0
        key, wsum = key[keep], wsum[keep]
        cu, cv = key // max(n, 1), key % max(n, 1)
        off = cu != cv
        rows = np.concatenate([cu, cv[off]])
        cols = np.concatenate([cv, cu[off]])
        ws = np.concatenate([wsum, wsum[off]])
        order = np.lexsort((cols, rows))
        rows, cols, ws = rows[order], cols[order], ws[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(n, indptr, cols, ws, node_ids)

    # -- accessors -----------------------------------------------------------

    def neighbors(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.indptr[u], self.indptr[u + 1]
        return self.indices[a:b], self.weights[a:b]

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Each undirected edge once, as ``(u, v, w)`` arrays with ``u <= v``."""
        if self._edges is None:
            rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
            keep = rows <= self.indices
            self._edges = tuple(_frozen(a.copy()) for a in
                                (rows[keep], self.indices[keep], self.weights[keep]))
        return self._edges

    def adjacency_lists(self) -> list[list[tuple[int, float]]]:
        """Plain-Python adjacency, cached; used by the pure-Python sweeps."""
        if self._adj is None:
            ip, ix, ws = self.indptr.tolist(), self.indices.tolist(), self.weights.tolist()
            self._adj = [list(zip(ix[ip[u]:ip[u + 1]], ws[ip[u]:ip[u + 1]]))
                         for u in range(self.n)]
        return self._adj

    @property
    def num_edges(self) -> int:
        return len(self.edge_arrays()[0])

    @property
    def is_simple(self) -> bool:
        return not self.loops.any() and bool(np.all(self.weights == 1.0))

    def has_edge(self, u: int, v: int) -> bool:
        nb, _ = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.num_edges}, m={self.m:g})"

    def __eq__(self, other):
        """Label-aware equality: same original ids and same labelled edges."""
        if not isinstance(other, Graph):
            return NotImplemented
        if self.n != other.n or self.num_edges != other.num_edges:
            return False
        if set(self.node_ids.tolist()) != set(other.node_ids.tolist()):
            return False
        return _labelled_edges(self) == _labelled_edges(other)

    __hash__ = None


def _labelled_edges(g: Graph) -> set:
    u, v, w = g.edge_arrays()
    lu, lv = g.node_ids[u], g.node_ids[v]
    return set(zip(np.minimum(lu, lv).tolist(), np.maximum(lu, lv).tolist(), w.tolist()))


@dataclass(frozen=True, eq=False)
class Clustering:
    """A partition of ``0..n-1`` given by one label per node."""

    labels: np.ndarray
    _communities: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        object.__setattr__(self, "labels", _frozen(labels.copy()))

    @classmethod
    def from_communities(cls, blocks: Iterable[Iterable[int]], n: int | None = None) -> "Clustering":
        blocks = [np.fromiter(b, dtype=np.int64) for b in blocks]
        if n is None:
            n = int(sum(len(b) for b in blocks))
        labels = np.full(n, -1, dtype=np.int64)
        for c, b in enumerate(blocks):
            if len(b) and (b.min() < 0 or b.max() >= n):
                raise ValueError(f"node id out of range 0..{n - 1}")
            if (labels[b] != -1).any() or len(np.unique(b)) != len(b):
                raise ValueError("communities overlap")
            labels[b] = c
        if (labels == -1).any():
            raise ValueError(f"communities do not cover node {int(np.argmax(labels == -1))}")
        return cls(labels)

    @classmethod
    def singletons(cls, n: int) -> "Clustering":
        return cls(np.arange(n))

    @classmethod
    def whole(cls, n: int) -> "Clustering":
        return cls(np.zeros(n, dtype=np.int64))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def communities(self) -> list[np.ndarray]:
        """Blocks ordered by first appearance of their label; members ascending."""
        if self._communities is None:
            canon = self.canonical_labels()
            order = np.argsort(canon, kind="stable")
            bounds = np.cumsum(np.bincount(canon))[:-1] if len(canon) else []
            object.__setattr__(self, "_communities", np.split(order, bounds) if len(canon) else [])
        return self._communities

    @property
    def num_communities(self) -> int:
        return len(np.unique(self.labels))

    def canonical_labels(self) -> np.ndarray:
        """Labels renumbered ``0, 1, ...`` in order of first appearance."""
        if not len(self.labels):
            return self.labels.copy()
        _, first, inv = np.unique(self.labels, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        rank[np.argsort(first)] = np.arange(len(first))
        return rank[inv]

    def as_sets(self) -> set[frozenset]:
        return {frozenset(c.tolist()) for c in self.communities}

    def __eq__(self, other):
        if not isinstance(other, Clustering):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.canonical_labels(), other.canonical_labels())

    __hash__ = None

    def __len__(self):
        return self.num_communities


# -- ingestion ---------------------------------------------------------------

def load_edge_list(path, directed_as_undirected: bool = True, weighted: bool = False) -> Graph:
    """Read a SNAP-style edge list.

    Lines starting with ``#`` are comments; other lines hold whitespace
    separated ``u v`` pairs (extra columns are ignored unless ``weighted``,
    in which case the third column is the weight). Node ids are compacted to
    ``0..n-1`` in order of first appearance.

    Simple input (``weighted=False``) collapses duplicate and reversed pairs
    into one unit-weight edge and drops selfloops; the selfloop's node still
    counts towards ``n``. With ``directed_as_undirected=False`` a reversed
    duplicate is treated as evidence of directed input and rejected.
    """
    ids: dict[int, int] = {}
    us: list[int] = []
    vs: list[int] = []
    ws: list[float] = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise GraphFormatError(f"cannot read edge list {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tok = line.split()
            if len(tok) < 2:
                raise GraphFormatError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            try:
                a, b = int(tok[0]), int(tok[1])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: non-integer node id in {line!r}") from None
            w = 1.0
            if weighted and len(tok) > 2:
                try:
                    w = float(tok[2])
                except ValueError:
                    raise GraphFormatError(f"{path}:{lineno}: bad weight {tok[2]!r}") from None
                if w < 0:
                    raise GraphFormatError(f"{path}:{lineno}: negative weight")
            ia = ids.setdefault(a, len(ids))
            ib = ids.setdefault(b, len(ids))
            if ia == ib and not weighted:
                continue
            us.append(ia)
            vs.append(ib)
            ws.append(w)
    n = len(ids)
    node_ids = np.fromiter(ids.keys(), dtype=np.int64, count=n)
    if not us:
        return Graph.from_edges(n, np.zeros((0, 2), dtype=np.int64), node_ids=node_ids)
    edges = np.column_stack([us, vs])
    if weighted:
        return Graph.from_edges(n, edges, np.asarray(ws), node_ids=node_ids)
    if not directed_as_undirected:
        fwd = set(zip(us, vs))
        for a, b in fwd:
            if (b, a) in fwd:
                raise GraphFormatError(
                    f"{path}: pair ({node_ids[a]}, {node_ids[b]}) appears in both directions")
    lo, hi = np.minimum(edges[:, 0], edges[:, 1]), np.maximum(edges[:, 0], edges[:, 1])
    uniq = np.unique(lo * n + hi)
    return Graph.from_edges(n, np.column_stack([uniq // n, uniq % n]), node_ids=node_ids)


def write_edge_list(g: Graph, path) -> None:
    """Write ``g`` with original ids; the inverse of :func:`load_edge_list`.

    Simple graphs are written as ``u v`` pairs, anything else as ``u v w``
    (read back with ``weighted=True``). Isolated nodes are written as
    selfloop lines so that they survive a reload.
    """
    u, v, w = g.edge_arrays()
    ids = g.node_ids
    simple = g.is_simple
    touched = np.zeros(g.n, dtype=bool)
    touched[u] = True
    touched[v] = True
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# nodes: {g.n} edges: {len(u)}\n")
        for a, b, x in zip(ids[u].tolist(), ids[v].tolist(), w.tolist()):
            fh.write(f"{a} {b}\n" if simple else f"{a} {b} {x:.17g}\n")
        for a in ids[~touched].tolist():
            fh.write(f"{a} {a}\n" if simple else f"{a} {a} 0\n")


def write_clustering(c: Clustering, path, node_ids: Sequence[int] | None = None) -> None:
    """One community per line, members as space separated (original) ids."""
    ids = np.arange(c.n) if node_ids is None else np.asarray(node_ids)
    with open(path, "w", encoding="utf-8") as fh:
        for block in c.communities:
            fh.write(" ".join(map(str, ids[block].tolist())) + "\n")


def read_clustering(path, node_ids: Sequence[int] | None = None) -> Clustering:
    """Inverse of :func:`write_clustering`.

    With ``node_ids`` the file's ids are mapped back to dense ids and must
    cover exactly that universe; without, the file's ids must already be
    exactly ``0..n-1``.
    """
    blocks = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise GraphFormatError(f"cannot read clustering {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                blocks.append([int(t) for t in line.split()])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: non-integer node id") from None
    if not blocks:
        raise GraphFormatError(f"{path}: empty clustering")
    seen = [x for b in blocks for x in b]
    if node_ids is not None:
        index = {int(x): i for i, x in enumerate(node_ids)}
        if len(seen) != len(index) or set(seen) != index.keys():
            raise GraphFormatError(f"{path}: node universe does not match the graph")
        blocks = [[index[x] for x in b] for b in blocks]
        return Clustering.from_communities(blocks, len(index))
    if sorted(seen) != list(range(len(seen))):
        raise GraphFormatError(f"{path}: node ids are not exactly 0..{len(seen) - 1}")
    return Clustering.from_communities(blocks, len(seen))


# -- small helpers -----------------------------------------------------------

def random_permutation(n: int, rng) -> np.ndarray:
    """Uniform permutation of ``0..n-1``."""
    return as_generator(rng).permutation(n)


def subset_stats(g: Graph, nodes) -> tuple[float, float]:
    """``(intra_weight, degree_sum)`` of a node set.

    ``intra_weight`` sums edges with both endpoints in the set (selfloops
    once); ``degree_sum`` sums full weighted degrees, so edges leaving the
    set count towards it.
    """
    nodes = np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64)
    if len(nodes) and (nodes.min() < 0 or nodes.max() >= g.n):
        raise IndexError(f"node id out of range 0..{g.n - 1}")
    mask = np.zeros(g.n, dtype=bool)
    mask[nodes] = True
    u, v, w = g.edge_arrays()
    return float(w[mask[u] & mask[v]].sum()), float(g.degree[mask].sum())


def induced_stats(g: Graph, labels: np.ndarray, k: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-label intra weights and degree sums for every label at once.

    Nodes labelled ``-1`` are ignored (partial covers).
    """
    labels = np.asarray(labels, dtype=np.int64)
    if k is None:
        k = int(labels.max()) + 1 if len(labels) else 0
    u, v, w = g.edge_arrays()
    lu, lv = labels[u], labels[v]
    same = (lu == lv) & (lu >= 0)
    intra = np.bincount(lu[same], weights=w[same], minlength=k)
    inside = labels >= 0
    deg = np.bincount(labels[inside], weights=g.degree[inside], minlength=k)
    return intra, deg
