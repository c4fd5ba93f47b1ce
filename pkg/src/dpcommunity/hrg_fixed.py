"""Exponential mechanism over leaf orders of a fixed balanced dendrogram.

The dendrogram shape never changes; a Metropolis chain swaps pairs of leaves
and scores each order by the hierarchical-random-graph log-likelihood. A
graph is then sampled from the final dendrogram's connection probabilities
and clustered with exact Louvain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import Clustering, Graph
from .louvain import louvain_or_singletons
from .mechanisms import PrivacyLedger, as_generator, as_source, hrg_sensitivity

CHUNK = 1 << 16


def _build_shape(n: int):
    """Balanced binary tree over leaf positions by recursive halving.

    Internal node ``r`` splits ``[lo[r], hi[r])`` at ``mid[r]``; the left half
    gets the extra leaf when the range is odd. ``left``/``right`` are child
    internal ids, or -1 where the child is a single leaf.
    """
    n_int = max(n - 1, 0)
    lo = np.zeros(n_int, dtype=np.int64)
    mid = np.zeros(n_int, dtype=np.int64)
    hi = np.zeros(n_int, dtype=np.int64)
    left = np.full(n_int, -1, dtype=np.int64)
    right = np.full(n_int, -1, dtype=np.int64)
    if n < 2:
        return lo, mid, hi, left, right
    stack = [(0, n, -1, 0)]
    nxt = 0
    while stack:
        a, b, parent, side = stack.pop()
        r = nxt
        nxt += 1
        lo[r], hi[r] = a, b
        mid[r] = a + (b - a + 1) // 2
        if parent >= 0:
            (left if side == 0 else right)[parent] = r
        if b - mid[r] >= 2:
            stack.append((mid[r], b, r, 1))
        if mid[r] - a >= 2:
            stack.append((a, mid[r], r, 0))
    return lo, mid, hi, left, right


class Dendrogram:
    """Fixed balanced tree over ``n`` leaves with a leaf-to-node permutation.

    ``sigma[p]`` is the graph node at leaf position ``p`` and ``pos`` its
    inverse. ``counts[r]`` is the number of edges whose endpoints' lowest
    common ancestor is internal node ``r`` (the root is node 0).
    """

    def __init__(self, g: Graph, sigma=None):
        if g.loops.any():
            raise ValueError("dendrogram model needs a graph without selfloops")
        self.g = g
        self.n = g.n
        self.lo, self.mid, self.hi, self.left, self.right = _build_shape(g.n)
        self.n_left = self.mid - self.lo
        self.n_right = self.hi - self.mid
        self.pairs = (self.n_left * self.n_right).astype(np.float64)
        self.sigma = np.arange(g.n, dtype=np.int64) if sigma is None \
            else np.array(sigma, dtype=np.int64)
        if sorted(self.sigma.tolist()) != list(range(g.n)):
            raise ValueError("sigma must be a permutation of the nodes")
        self.pos = np.empty(g.n, dtype=np.int64)
        self.pos[self.sigma] = np.arange(g.n)
        self.counts = self.recount()

    def recount(self) -> np.ndarray:
        u, v, _ = self.g.edge_arrays()
        if self.n < 2:
            return np.zeros(0, dtype=np.int64)
        return _kernels.crossing_counts(self.mid, self.left, self.right, 0, self.pos,
                                        u, v, len(self.mid))

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.pairs

    def lca(self, a: int, b: int) -> int:
        """Internal node that separates leaf positions ``a`` and ``b``."""
        return int(_kernels._lca(self.mid, self.left, self.right, 0, a, b))

    def log_likelihood(self) -> float:
        return log_likelihood(self.counts, self.pairs)


def log_likelihood(counts, pairs) -> float:
    """``sum e ln p + (LR - e) ln(1 - p)`` with ``p = e / LR`` and ``0 ln 0 = 0``."""
    e = np.asarray(counts, dtype=np.float64)
    lr = np.asarray(pairs, dtype=np.float64)
    inner = (e > 0) & (e < lr)
    e, lr = e[inner], lr[inner]
    p = e / lr
    return float(np.sum(e * np.log(p) + (lr - e) * np.log1p(-p)))


class LeafSwapChain:
    """Metropolis chain over leaf permutations of a :class:`Dendrogram`."""

    def __init__(self, dendrogram: Dendrogram, eps: float, rng):
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.d = dendrogram
        self.eps = float(eps)
        self.gen = as_generator(rng)
        self.accepted = 0
        self.steps = 0

    def run(self, steps: int, trace: bool = False):
        """Advance the chain; with ``trace`` returns the base-n state code per step."""
        d, g = self.d, self.d.g
        n = d.n
        if n < 2:
            self.steps += steps
            return np.zeros(steps, dtype=np.int64) if trace else None
        scale = self.eps / (2.0 * hrg_sensitivity(n))
        if trace:
            pown = n ** np.arange(n, dtype=np.int64)
            code = int((d.sigma * pown).sum())
            out = np.empty(steps, dtype=np.int64)
        else:
            pown = np.zeros(0, dtype=np.int64)
            code = 0
        done = 0
        while done < steps:
            c = min(CHUNK, steps - done)
            first = self.gen.integers(0, n, c)
            second = (first + self.gen.integers(1, n, c)) % n
            uniforms = self.gen.random(c)
            buf = out[done:done + c] if trace else np.zeros(0, dtype=np.int64)
            acc, code = _kernels.swap_chain(g.indptr, g.indices, d.mid, d.left, d.right, 0,
                                            d.pairs, d.counts, d.sigma, d.pos, scale,
                                            first, second, uniforms, code, pown, buf)
            self.accepted += acc
            done += c
        self.steps += steps
        return out if trace else None


def sample_graph(d: Dendrogram, rng) -> Graph:
    """Draw each pair independently with the probability of its separating node."""
    gen = as_generator(rng)
    us, vs = [], []
    p = d.probabilities
    for r in np.flatnonzero(d.counts > 0):
        lr = int(d.n_left[r] * d.n_right[r])
        c = int(gen.binomial(lr, p[r]))
        if c == 0:
            continue
        idx = gen.choice(lr, size=c, replace=False)
        a = d.lo[r] + idx // d.n_right[r]
        b = d.mid[r] + idx % d.n_right[r]
        us.append(d.sigma[a])
        vs.append(d.sigma[b])
    if not us:
        return Graph.from_edges(d.n, np.zeros((0, 2), dtype=np.int64), node_ids=d.g.node_ids)
    edges = np.column_stack([np.concatenate(us), np.concatenate(vs)])
    return Graph.from_edges(d.n, edges, node_ids=d.g.node_ids)


@dataclass
class HRGResult:
    clustering: Clustering
    dendrogram: Dendrogram
    sample: Graph
    ledger: PrivacyLedger
    acceptance_rate: float
    flags: list[str] = field(default_factory=list)


def hrg_fixed(g: Graph, eps: float, burn_in: int = 1000, rng=None) -> HRGResult:
    """Sample a leaf order with ``burn_in * n`` swaps, then cluster a sampled graph."""
    source = as_source(rng)
    d = Dendrogram(g, source.spawn("start").gen.permutation(g.n))
    chain = LeafSwapChain(d, eps, source.spawn("chain"))
    chain.run(burn_in * g.n)
    sample = sample_graph(d, source.spawn("sample"))
    ledger = PrivacyLedger()
    ledger.spend("leaf permutation", eps)
    rate = chain.accepted / chain.steps if chain.steps else 0.0
    clustering = louvain_or_singletons(sample, source.spawn("louvain"))
    return HRGResult(clustering, d, sample, ledger, rate)
