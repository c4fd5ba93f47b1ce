"""Compiled inner loops: the two Metropolis chains and the Louvain sweep.

Random numbers are drawn by the callers from numpy generators and passed in
as arrays, so results depend only on the seed and not on numba's RNG.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def partition_chain(indptr, indices, weights, degree, loops, group, nodes,
                    lc, dc, m, scale, k, picks, offsets, uniforms,
                    code, powk, trace):
    """Run ``len(picks)`` single-node moves of the modularity chain.

    ``group`` is indexed by graph node (-1 outside the node set) and is
    updated in place together with the per-group tallies ``lc``/``dc``.
    ``scale`` is ``eps / (2 * sensitivity)``. When ``trace`` is non-empty the
    base-``k`` state code after every step is written into it.
    Returns ``(accepted_moves, code)``.
    """
    inv4m2 = 1.0 / (4.0 * m * m)
    tracing = trace.shape[0] > 0
    accepted = 0
    for t in range(picks.shape[0]):
        idx = picks[t]
        u = nodes[idx]
        gi = group[u]
        gj = (gi + offsets[t]) % k
        wi = 0.0
        wj = 0.0
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if v == u:
                continue
            gv = group[v]
            if gv == gi:
                wi += weights[e]
            elif gv == gj:
                wj += weights[e]
        du = degree[u]
        d_l = (wj - wi) / m
        new_di = dc[gi] - du
        new_dj = dc[gj] + du
        d_d = (new_di * new_di - dc[gi] * dc[gi] + new_dj * new_dj - dc[gj] * dc[gj]) * inv4m2
        dq = d_l - d_d
        if dq >= 0.0 or uniforms[t] < math.exp(scale * dq):
            lu = loops[u]
            lc[gi] -= wi + lu
            lc[gj] += wj + lu
            dc[gi] = new_di
            dc[gj] = new_dj
            group[u] = gj
            accepted += 1
            if tracing:
                code += (gj - gi) * powk[idx]
        if tracing:
            trace[t] = code
    return accepted, code


@njit(cache=True)
def _lca(mid, left, right, root, a, b):
    r = root
    while True:
        md = mid[r]
        if a < md and b < md:
            r = left[r]
        elif a >= md and b >= md:
            r = right[r]
        else:
            return r


@njit(cache=True)
def _node_ll(e, pairs):
    if e <= 0.0 or e >= pairs:
        return 0.0
    p = e / pairs
    return e * math.log(p) + (pairs - e) * math.log(1.0 - p)


@njit(cache=True)
def crossing_counts(mid, left, right, root, pos, eu, ev, n_internal):
    counts = np.zeros(n_internal, dtype=np.int64)
    for i in range(eu.shape[0]):
        counts[_lca(mid, left, right, root, pos[eu[i]], pos[ev[i]])] += 1
    return counts


@njit(cache=True)
def swap_chain(indptr, indices, mid, left, right, root, pairs, counts, sigma, pos,
               scale, first, second, uniforms, code, pown, trace):
    """Run leaf-swap Metropolis steps on a fixed dendrogram.

    ``first[t]``/``second[t]`` are the two leaf positions proposed at step t
    (equal positions are a no-op). ``counts`` holds the crossing edge count
    of every internal node and is kept exact. Returns ``(accepted, code)``.
    """
    n_internal = counts.shape[0]
    delta = np.zeros(n_internal, dtype=np.int64)
    mark = np.zeros(n_internal, dtype=np.bool_)
    touched = np.empty(n_internal, dtype=np.int64)
    tracing = trace.shape[0] > 0
    accepted = 0
    for t in range(first.shape[0]):
        a = first[t]
        b = second[t]
        if a != b:
            u = sigma[a]
            v = sigma[b]
            nt = 0
            for side in range(2):
                x = u if side == 0 else v
                other = v if side == 0 else u
                old_p = a if side == 0 else b
                new_p = b if side == 0 else a
                for e in range(indptr[x], indptr[x + 1]):
                    w = indices[e]
                    if w == other or w == x:
                        continue
                    pw = pos[w]
                    r_old = _lca(mid, left, right, root, old_p, pw)
                    r_new = _lca(mid, left, right, root, new_p, pw)
                    if r_old != r_new:
                        delta[r_old] -= 1
                        delta[r_new] += 1
                        if not mark[r_old]:
                            mark[r_old] = True
                            touched[nt] = r_old
                            nt += 1
                        if not mark[r_new]:
                            mark[r_new] = True
                            touched[nt] = r_new
                            nt += 1
            dl = 0.0
            for i in range(nt):
                r = touched[i]
                if delta[r] != 0:
                    dl += _node_ll(counts[r] + delta[r], pairs[r]) - _node_ll(counts[r], pairs[r])
            if dl >= 0.0 or uniforms[t] < math.exp(scale * dl):
                for i in range(nt):
                    r = touched[i]
                    counts[r] += delta[r]
                sigma[a] = v
                sigma[b] = u
                pos[u] = b
                pos[v] = a
                accepted += 1
                if tracing:
                    code += (v - u) * pown[a] + (u - v) * pown[b]
            for i in range(nt):
                r = touched[i]
                delta[r] = 0
                mark[r] = False
        if tracing:
            trace[t] = code
    return accepted, code


@njit(cache=True)
def move_nodes(indptr, indices, weights, degree, m, order, threshold):
    """Louvain local-move phase on a CSR graph.

    Sweeps ``order`` until a full sweep moves nothing. A node joins the
    neighbouring community with the largest gain when it beats staying by
    more than ``threshold``; ties go to the lowest community id.
    Returns ``(community, moved)``.
    """
    n = indptr.shape[0] - 1
    comm = np.arange(n)
    tot = degree.copy()
    links = np.zeros(n)
    seen = np.zeros(n, dtype=np.bool_)
    touched = np.empty(n, dtype=np.int64)
    two_m = 2.0 * m
    moved = False
    improved = True
    while improved:
        improved = False
        for u in order:
            cu = comm[u]
            ku = degree[u]
            nt = 0
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                if v == u:
                    continue
                c = comm[v]
                if not seen[c]:
                    seen[c] = True
                    touched[nt] = c
                    nt += 1
                links[c] += weights[e]
            tot[cu] -= ku
            stay = links[cu] - tot[cu] * ku / two_m
            best = cu
            best_gain = 0.0
            found = False
            for i in range(nt):
                c = touched[i]
                if c == cu:
                    continue
                gain = links[c] - tot[c] * ku / two_m
                if not found or gain > best_gain or (gain == best_gain and c < best):
                    best = c
                    best_gain = gain
                    found = True
            for i in range(nt):
                c = touched[i]
                links[c] = 0.0
                seen[c] = False
            if found and best_gain - stay > threshold:
                comm[u] = best
                tot[best] += ku
                improved = True
                moved = True
            else:
                tot[cu] += ku
    return comm, moved
