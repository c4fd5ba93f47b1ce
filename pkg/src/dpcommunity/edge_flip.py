"""Edge flipping shrunk to an expected ``m`` output edges, in O(m)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Clustering, Graph
from .louvain import louvain_or_singletons
from .mechanisms import PrivacyLedger, as_generator, as_source, laplace

DEFAULT_EPS2 = 0.1
MAX_DENSITY = 0.25
# below this many node pairs non-edges are enumerated instead of rejection sampled
SMALL_DOMAIN = 1 << 16


def flip_prob(eps: float) -> float:
    """Flipping probability ``2 / (e**eps + 1)``."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if eps > 700:
        return 2.0 * math.exp(-eps)
    return 2.0 / (math.exp(eps) + 1.0)


def flip_eps(s: float) -> float:
    """Inverse of :func:`flip_prob`."""
    return math.log(2.0 / s - 1.0)


@dataclass
class FlipResult:
    graph: Graph
    m_noisy: float
    kept: int
    added: int
    ledger: PrivacyLedger
    flags: list[str] = field(default_factory=list)


def edge_flip_shrink(g: Graph, s: float, rng=None, eps2: float = DEFAULT_EPS2) -> FlipResult:
    """Perturb ``g`` so the output has ``round(m + Laplace(1/eps2))`` edges.

    Real edges are kept independently with probability ``(1 - s~) p / 2``
    where ``s~`` is the flip probability after reserving ``eps2`` for the
    edge count and ``p`` shrinks the classic flip output to that count; the
    remainder is filled with uniformly random non-edges.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"flip probability must lie in (0, 1), got {s}")
    eps = flip_eps(s) - eps2
    if not eps > 0:
        raise ValueError(f"flip probability {s} leaves no budget after eps2={eps2}")
    n = g.n
    pairs = n * (n - 1) / 2.0
    if pairs > SMALL_DOMAIN and g.num_edges / pairs > MAX_DENSITY:
        raise ValueError("graph too dense for rejection sampling of non-edges")
    gen = as_generator(rng)
    flags = []
    m = g.num_edges
    m_noisy = m + laplace(1.0 / eps2, gen)
    if m_noisy <= 0:
        flags.append("m-clamped")
        m_noisy = 1.0
    s_t = flip_prob(eps)
    m0 = (1.0 - s_t) * m_noisy + n * (n - 1) / 4.0 * s_t
    p = m_noisy / m0
    keep_prob = min(1.0, (1.0 - s_t) * p / 2.0)

    u, v, _ = g.edge_arrays()
    off = u != v
    u, v = u[off], v[off]
    keep = gen.random(len(u)) < keep_prob
    ku, kv = u[keep], v[keep]
    kept = len(ku)
    target = int(round(m_noisy))
    n0 = target - kept
    if n0 < 0:
        flags.append("kept-exceeds-target")
        n0 = 0
    if n0 > pairs - m:
        flags.append("fill-capped")
        n0 = int(pairs - m)

    existing = set((u * n + v).tolist())
    chosen = set((ku * n + kv).tolist())
    added: list[int] = []
    if n0 and pairs <= SMALL_DOMAIN:
        iu, iv = np.triu_indices(n, 1)
        keys = iu * n + iv
        free = keys[~np.isin(keys, u * n + v)]
        added = gen.choice(free, size=n0, replace=False).tolist()
    while len(added) < n0:
        need = n0 - len(added)
        a = gen.integers(0, n, 2 * need + 8)
        b = gen.integers(0, n, 2 * need + 8)
        for x, y in zip(a.tolist(), b.tolist()):
            if x == y:
                continue
            key = x * n + y if x < y else y * n + x
            if key in existing or key in chosen:
                continue
            chosen.add(key)
            added.append(key)
            if len(added) == n0:
                break
    add = np.asarray(added, dtype=np.int64)
    edges = np.column_stack([np.concatenate([ku, add // n]), np.concatenate([kv, add % n])])
    out = Graph.from_edges(n, edges, node_ids=g.node_ids)
    ledger = PrivacyLedger()
    ledger.spend("edge count", eps2)
    ledger.spend("edge flipping", eps)
    return FlipResult(out, m_noisy, kept, len(added), ledger, flags)


@dataclass
class EdgeFlipClustering:
    clustering: Clustering
    flip: FlipResult

    @property
    def ledger(self) -> PrivacyLedger:
        return self.flip.ledger

    @property
    def flags(self) -> list[str]:
        return self.flip.flags


def edge_flip_clustering(g: Graph, eps: float, rng=None, eps2: float = DEFAULT_EPS2) -> EdgeFlipClustering:
    """EdgeFlipShrink at total budget ``eps``, then exact Louvain."""
    source = as_source(rng)
    flip = edge_flip_shrink(g, flip_prob(eps), source.spawn("flip"), eps2)
    return EdgeFlipClustering(louvain_or_singletons(flip.graph, source.spawn("louvain")), flip)
