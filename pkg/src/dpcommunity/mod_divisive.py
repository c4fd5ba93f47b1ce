"""Private top-down k-ary partitioning scored by modularity.

Every tree node samples a split of its node set into at most ``k`` groups
with a Metropolis chain whose stationary law is the exponential mechanism
over modularity. The tree is then cut by a noisy dynamic program that
chooses, per node, between keeping the node whole and the best cuts of its
children.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import Clustering, Graph, subset_stats
from .mechanisms import (BudgetSchedule, PrivacyLedger, as_generator, as_source,
                         laplace, modularity_sensitivity, split_budget)
from .metrics import UndefinedModularityError

CHUNK = 1 << 16


class ModMCMC:
    """Metropolis chain over partitions of ``nodes`` into ``k`` labelled groups.

    Proposals move one uniformly chosen node to a uniformly chosen other
    group. Groups may become empty. ``lc``/``dc`` hold each group's intra
    weight and degree sum; only edges inside ``nodes`` count as intra.
    """

    def __init__(self, g: Graph, nodes, k: int, eps_p: float, rng, init=None, scratch=None):
        if not g.m > 0:
            raise UndefinedModularityError("modularity chain needs m > 0")
        if k < 2:
            raise ValueError("k must be at least 2")
        if not eps_p > 0:
            raise ValueError("eps_p must be positive")
        self.g = g
        self.nodes = np.asarray(nodes, dtype=np.int64)
        if len(self.nodes) == 0:
            raise ValueError("empty node set")
        self.k = int(k)
        self.eps_p = float(eps_p)
        self.sensitivity = modularity_sensitivity(g.m)
        self.gen = as_generator(rng)
        self.group = np.full(g.n, -1, dtype=np.int64) if scratch is None else scratch
        if init is None:
            init = self.gen.integers(0, self.k, len(self.nodes))
        init = np.asarray(init, dtype=np.int64)
        self.group[self.nodes] = init
        self.lc = np.zeros(self.k)
        self.dc = np.zeros(self.k)
        self._recount()
        self.steps = 0
        self.accepted = 0

    def _recount(self):
        g = self.g
        part = self.group[self.nodes]
        self.dc[:] = np.bincount(part, weights=g.degree[self.nodes], minlength=self.k)
        starts = g.indptr[self.nodes]
        lens = g.indptr[self.nodes + 1] - starts
        owner = np.repeat(self.nodes, lens)
        eidx = np.repeat(starts - np.cumsum(lens) + lens, lens) + np.arange(lens.sum())
        nb, w = g.indices[eidx], g.weights[eidx]
        same = self.group[nb] == self.group[owner]
        # non-loop edges are seen from both endpoints
        w = np.where(nb == owner, w, 0.5 * w)
        self.lc[:] = np.bincount(self.group[owner][same], weights=w[same], minlength=self.k)

    @property
    def part(self) -> np.ndarray:
        """Group id of each entry of ``nodes``."""
        return self.group[self.nodes].copy()

    def score(self) -> float:
        m = self.g.m
        return float((self.lc / m).sum() - ((self.dc / (2.0 * m)) ** 2).sum())

    def run(self, steps: int, trace: bool = False):
        """Advance the chain. With ``trace`` returns the state code per step.

        The code is ``sum(part[i] * k**i)``; only meaningful for small sets.
        """
        g = self.g
        scale = self.eps_p / (2.0 * self.sensitivity)
        size = len(self.nodes)
        if trace:
            powk = self.k ** np.arange(size, dtype=np.int64)
            code = int((self.part * powk).sum())
            out = np.empty(steps, dtype=np.int64)
        else:
            powk = np.zeros(0, dtype=np.int64)
            code = 0
        done = 0
        while done < steps:
            c = min(CHUNK, steps - done)
            picks = self.gen.integers(0, size, c)
            offsets = self.gen.integers(1, self.k, c)
            uniforms = self.gen.random(c)
            buf = out[done:done + c] if trace else np.zeros(0, dtype=np.int64)
            acc, code = _kernels.partition_chain(
                g.indptr, g.indices, g.weights, g.degree, g.loops, self.group, self.nodes,
                self.lc, self.dc, g.m, scale, self.k, picks, offsets, uniforms,
                code, powk, buf)
            self.accepted += acc
            done += c
        self.steps += steps
        return out if trace else None

    def release(self):
        """Clear this chain's entries in a shared scratch array."""
        self.group[self.nodes] = -1


def mod_mcmc(g: Graph, nodes, k: int, eps_p: float, burn_in: int = 50, rng=None) -> np.ndarray:
    """Sample a partition of ``nodes`` into at most ``k`` groups.

    Runs ``burn_in * len(nodes)`` Metropolis steps from a uniform random
    assignment and returns the final group id of every node.
    """
    chain = ModMCMC(g, nodes, k, eps_p, rng)
    chain.run(burn_in * len(chain.nodes))
    return chain.part


# -- the partition tree ------------------------------------------------------

@dataclass(eq=False)
class TreeNode:
    nodes: np.ndarray
    level: int
    intra: float
    degree: float
    m: float
    id: int = 0
    part: np.ndarray | None = None
    lc: np.ndarray | None = None
    dc: np.ndarray | None = None
    children: list["TreeNode"] = field(default_factory=list)
    mod_noisy: float | None = None

    @property
    def mod(self) -> float:
        """Modularity contribution of this node set taken as one community."""
        return self.intra / self.m - (self.degree / (2.0 * self.m)) ** 2

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self):
        """Breadth-first iteration over the subtree."""
        queue = deque([self])
        while queue:
            r = queue.popleft()
            yield r
            queue.extend(r.children)


def make_node(g: Graph, nodes, level: int = 0, node_id: int = 0) -> TreeNode:
    nodes = np.asarray(nodes, dtype=np.int64)
    intra, deg = subset_stats(g, nodes)
    return TreeNode(nodes, level, intra, deg, g.m, node_id)


def split_node(r: TreeNode, part: np.ndarray, lc: np.ndarray, dc: np.ndarray, next_id: int) -> int:
    """Attach one child per nonempty group of ``part``; returns the next free id."""
    r.part, r.lc, r.dc = part, lc, dc
    for gid in range(len(lc)):
        members = r.nodes[part == gid]
        if len(members) == 0:
            continue
        r.children.append(TreeNode(members, r.level + 1, float(lc[gid]), float(dc[gid]),
                                   r.m, next_id))
        next_id += 1
    return next_id


@dataclass
class Cut:
    nodes: list[TreeNode]

    def clustering(self, n: int) -> Clustering:
        return Clustering.from_communities([t.nodes for t in self.nodes], n)

    def value(self, noisy: bool = False) -> float:
        return math.fsum(t.mod_noisy if noisy else t.mod for t in self.nodes)


def best_cut(root: TreeNode, eps_m: float, m: float | None = None, rng=None) -> Cut:
    """Cut of the tree maximising (noisy) summed modularity contributions.

    Every node's contribution gets ``Laplace(3/(m eps_m))`` noise once;
    ``eps_m = inf`` disables the noise. Children are solved before parents,
    and a parent keeps itself unless its children's best total is larger.
    """
    if m is None:
        m = root.m
    noiseless = math.isinf(eps_m)
    if not noiseless and not eps_m > 0:
        raise ValueError("eps_m must be positive (or inf to disable noise)")
    gen = as_generator(rng)
    scale = modularity_sensitivity(m) / eps_m if not noiseless else 0.0
    stack = list(root.walk())
    sol: dict[int, tuple[float, bool]] = {}
    while stack:
        r = stack.pop()
        r.mod_noisy = r.mod if noiseless else r.mod + laplace(scale, gen)
        if r.is_leaf:
            sol[id(r)] = (r.mod_noisy, True)
        else:
            s_m = math.fsum(sol[id(c)][0] for c in r.children)
            sol[id(r)] = (s_m, False) if r.mod_noisy < s_m else (r.mod_noisy, True)
    chosen = []
    queue = deque([root])
    while queue:
        r = queue.popleft()
        if sol[id(r)][1]:
            chosen.append(r)
        else:
            queue.extend(r.children)
    return Cut(chosen)


def enumerate_cuts(root: TreeNode):
    """Every cut of the subtree (exponential; for small trees only)."""
    yield [root]
    if root.children:
        for combo in itertools.product(*(list(enumerate_cuts(c)) for c in root.children)):
            yield [t for part in combo for t in part]


@dataclass
class DivisiveResult:
    clustering: Clustering
    root: TreeNode
    cut: Cut
    schedule: BudgetSchedule
    ledger: PrivacyLedger
    flags: list[str] = field(default_factory=list)


def mod_divisive(g: Graph, k: int = 4, eps: float = 1.0, max_level: int = 3,
                 ratio: float = 2.0, eps_m: float = 0.01, burn_in: int = 50,
                 rng=None) -> DivisiveResult:
    """Build the k-ary tree level by level, then take the noisy best cut.

    Level ``i`` chains all use budget ``eps_levels[i]`` on disjoint node sets;
    single-node sets are not split further.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if burn_in < 1:
        raise ValueError("burn_in must be at least 1")
    schedule = split_budget(eps, max_level, ratio, eps_m)
    if not g.m > 0:
        raise UndefinedModularityError("ModDivisive needs a graph with m > 0")
    source = as_source(rng)
    ledger = PrivacyLedger()
    for i, e in enumerate(schedule.eps_levels):
        ledger.spend(f"partition level {i}", e, group=f"level-{i}")
    for j in range(1, max_level + 1):
        ledger.spend(f"best cut level {j}", eps_m, group=f"cut-{j}")

    root = TreeNode(np.arange(g.n), 0, g.m, 2.0 * g.m, g.m, 0)
    scratch = np.full(g.n, -1, dtype=np.int64)
    next_id = 1
    queue = deque([root])
    while queue:
        r = queue.popleft()
        if r.level >= max_level or len(r.nodes) < 2:
            continue
        chain = ModMCMC(g, r.nodes, k, schedule.eps_levels[r.level],
                        source.spawn(("mcmc", r.id)), scratch=scratch)
        chain.run(burn_in * len(r.nodes))
        part = chain.part
        chain.release()
        next_id = split_node(r, part, chain.lc.copy(), chain.dc.copy(), next_id)
        queue.extend(r.children)

    cut = best_cut(root, eps_m, g.m, source.spawn("best-cut"))
    return DivisiveResult(cut.clustering(g.n), root, cut, schedule, ledger)
