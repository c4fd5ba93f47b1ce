"""Louvain on a noisy supergraph built by one-sided high-pass filtering.

Nodes are randomly grouped into supernodes of ``k``; superedge weights count
original edges between groups. Geometric noise is added only to the nonzero
superedges, which survive if they clear a threshold ``theta``; the expected
number of zero superedges that would have cleared it is then sampled
directly, so the noisy domain is never materialised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Clustering, Graph
from .louvain import louvain_or_singletons
from .mechanisms import PrivacyLedger, as_generator, as_source, geometric, laplace

DEFAULT_EPS2 = 0.1


@dataclass
class SuperGraph:
    base: Graph
    mapping: np.ndarray
    k: int

    @property
    def num_supernodes(self) -> int:
        return self.base.n


@dataclass
class FilterParams:
    eps1: float
    eps2: float
    alpha: float
    m1_noisy: float
    m0: int
    theta: int
    s: int
    flags: list[str] = field(default_factory=list)


def build_supergraph(g: Graph, k: int, rng=None, permutation=None) -> SuperGraph:
    """Group every ``k`` consecutive nodes of a random permutation.

    There are ``n // k`` supernodes; the ``n % k`` leftover nodes join the
    last one.
    """
    if not 1 <= k <= g.n:
        raise ValueError(f"group size k={k} must lie in 1..{g.n}")
    perm = as_generator(rng).permutation(g.n) if permutation is None \
        else np.asarray(permutation, dtype=np.int64)
    n_super = g.n // k
    mapping = np.empty(g.n, dtype=np.int64)
    mapping[perm] = np.minimum(np.arange(g.n) // k, n_super - 1)
    u, v, w = g.edge_arrays()
    base = Graph.from_edges(n_super, np.column_stack([mapping[u], mapping[v]]), w)
    return SuperGraph(base, mapping, k)


def filter_params(m1_count: int, n_super: int, eps1: float, eps2: float, rng) -> FilterParams:
    """Noisy superedge count, threshold and number of zero superedges to sample."""
    m0 = n_super * (n_super + 1) // 2
    alpha = math.exp(-eps1)
    flags = []
    m1 = m1_count + laplace(1.0 / eps2, rng)
    if m0 < 2:
        flags.append("degenerate-domain")
        return FilterParams(eps1, eps2, alpha, m1, m0, 1, 0, flags)
    if m1 < 1 or m1 > m0 - 1:
        flags.append("m1-clamped")
        m1 = min(max(m1, 1.0), m0 - 1.0)
    theta, s, clamped = threshold(m1, m0, alpha)
    if clamped:
        flags.append("theta-clamped")
    return FilterParams(eps1, eps2, alpha, m1, m0, theta, s, flags)


def threshold(m1: float, m0: int, alpha: float) -> tuple[int, int, bool]:
    """``(theta, s, clamped)`` for ``m1`` nonzero cells out of ``m0``.

    ``theta = ceil(log_alpha((1 + alpha) m1 / (m0 - m1)))``, raised to 1 if
    smaller, and ``s = floor((m0 - m1) alpha**theta / (1 + alpha))``.
    """
    if alpha == 0.0:
        theta = 1
    else:
        theta = math.ceil(math.log((1.0 + alpha) * m1 / (m0 - m1)) / math.log(alpha))
    clamped = theta < 1
    theta = max(theta, 1)
    s = math.floor((m0 - m1) * alpha ** theta / (1.0 + alpha))
    return theta, s, clamped


def _unrank_pairs(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map ``0..m0-1`` onto unordered pairs ``i <= j`` (selfloops included)."""
    j = ((np.sqrt(8.0 * idx + 1.0) - 1.0) // 2).astype(np.int64)
    # float sqrt can be off by one for large indices
    j -= (j * (j + 1) // 2 > idx)
    j += ((j + 1) * (j + 2) // 2 <= idx)
    return idx - j * (j + 1) // 2, j


def high_pass_filter(sg: SuperGraph, eps1: float, eps2: float = DEFAULT_EPS2, rng=None):
    """Return ``(G1, FilterParams)``, the noisy filtered supergraph."""
    if not eps1 > 0:
        raise ValueError("eps1 must be positive")
    if not eps2 > 0:
        raise ValueError("eps2 must be positive")
    gen = as_generator(rng)
    u, v, w = sg.base.edge_arrays()
    n_super = sg.base.n
    params = filter_params(len(u), n_super, eps1, eps2, gen)
    alpha, theta = params.alpha, params.theta

    if alpha > 0:
        noisy = w.astype(np.int64) + geometric(alpha, gen, len(u))
    else:
        noisy = w.astype(np.int64)
    keep = noisy >= theta
    eu, ev, ew = [u[keep]], [v[keep]], [noisy[keep].astype(np.float64)]

    s = params.s
    zeros_available = params.m0 - len(u)
    if s > zeros_available:
        params.flags.append("s-capped")
        s = max(zeros_available, 0)
    if s > 0:
        occupied = set((u * n_super + v).tolist())
        picked: set[int] = set()
        while len(picked) < s:
            need = s - len(picked)
            idx = gen.integers(0, params.m0, max(2 * need, 16))
            a, b = _unrank_pairs(idx)
            for key in (a * n_super + b).tolist():
                if key not in occupied and key not in picked:
                    picked.add(key)
                    if len(picked) == s:
                        break
        keys = np.fromiter(sorted(picked), dtype=np.int64, count=s)
        # P(X <= x) = 1 - alpha**(x - theta + 1) for x >= theta
        zw = theta - 1 + gen.geometric(1.0 - alpha, s)
        eu.append(keys // n_super)
        ev.append(keys % n_super)
        ew.append(zw.astype(np.float64))
    edges = np.column_stack([np.concatenate(eu), np.concatenate(ev)])
    g1 = Graph.from_edges(n_super, edges, np.concatenate(ew))
    return g1, params


@dataclass
class LouvainDPResult:
    clustering: Clustering
    noisy_graph: Graph
    supergraph: SuperGraph
    params: FilterParams
    ledger: PrivacyLedger

    @property
    def flags(self) -> list[str]:
        return self.params.flags


def louvain_dp(g: Graph, k: int, eps: float, rng=None, eps2: float = DEFAULT_EPS2) -> LouvainDPResult:
    """Private clustering: Louvain on the filtered supergraph, lifted back.

    Spends ``eps2`` on the superedge count and ``eps - eps2`` on the
    geometric noise.
    """
    if not eps > eps2:
        raise ValueError(f"eps={eps} must exceed eps2={eps2}")
    source = as_source(rng)
    sg = build_supergraph(g, k, source.spawn("permutation"))
    eps1 = eps - eps2
    g1, params = high_pass_filter(sg, eps1, eps2, source.spawn("filter"))
    ledger = PrivacyLedger()
    ledger.spend("superedge count", eps2)
    ledger.spend("geometric noise", eps1)
    super_clustering = louvain_or_singletons(g1, source.spawn("louvain"))
    labels = super_clustering.labels[sg.mapping]
    return LouvainDPResult(Clustering(labels), g1, sg, params, ledger)
