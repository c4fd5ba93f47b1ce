"""Synthetic graphs with known block structure."""

from __future__ import annotations

import numpy as np

from .graph import Clustering, Graph
from .mechanisms import as_generator


def _strict_pairs(idx: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Unrank ``0..size*(size-1)/2 - 1`` onto pairs ``i < j < size``."""
    j = ((np.sqrt(8.0 * idx + 1.0) + 1.0) // 2).astype(np.int64)
    j -= (j * (j - 1) // 2 > idx)
    j += ((j + 1) * j // 2 <= idx)
    return idx - j * (j - 1) // 2, j


def _sample_pairs(gen, total: int, p: float) -> np.ndarray:
    c = int(gen.binomial(total, p)) if total else 0
    if c == 0:
        return np.zeros(0, dtype=np.int64)
    return np.sort(gen.choice(total, size=c, replace=False))


def planted_partition(blocks: int, size, p_in: float, p_out: float, rng=None):
    """Stochastic block model with equal (or given) block sizes.

    Returns ``(graph, truth)``; nodes of block ``b`` are contiguous.
    """
    if not (0 <= p_in <= 1 and 0 <= p_out <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    sizes = [int(size)] * blocks if np.isscalar(size) else [int(s) for s in size]
    if len(sizes) != blocks or min(sizes, default=1) < 1:
        raise ValueError("need one positive size per block")
    gen = as_generator(rng)
    starts = np.concatenate([[0], np.cumsum(sizes)])
    n = int(starts[-1])
    parts = []
    for a in range(blocks):
        sa = sizes[a]
        idx = _sample_pairs(gen, sa * (sa - 1) // 2, p_in)
        i, j = _strict_pairs(idx, sa)
        parts.append(np.column_stack([starts[a] + i, starts[a] + j]))
        for b in range(a + 1, blocks):
            sb = sizes[b]
            idx = _sample_pairs(gen, sa * sb, p_out)
            parts.append(np.column_stack([starts[a] + idx // sb, starts[b] + idx % sb]))
    edges = np.concatenate(parts) if parts else np.zeros((0, 2), dtype=np.int64)
    truth = Clustering(np.repeat(np.arange(blocks), sizes))
    return Graph.from_edges(n, edges), truth


def random_graph(n: int, m: int, rng=None) -> Graph:
    """Uniform simple graph with exactly ``m`` edges."""
    total = n * (n - 1) // 2
    if m > total:
        raise ValueError("too many edges for a simple graph")
    idx = np.sort(as_generator(rng).choice(total, size=m, replace=False))
    i, j = _strict_pairs(idx, n)
    return Graph.from_edges(n, np.column_stack([i, j]))
