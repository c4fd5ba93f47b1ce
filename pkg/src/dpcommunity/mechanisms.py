"""Noise primitives and privacy-budget bookkeeping.

All samplers take either a :class:`RandomSource`, a numpy ``Generator`` or an
integer seed. Laplace draws come straight from numpy; the two-sided geometric
sampler inverts the closed-form CDF so each draw costs one uniform.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np


class BudgetError(ValueError):
    """The requested budget split leaves nothing for the main mechanism."""


class RandomSource:
    """A seeded generator that can derive independent, stable sub-sources.

    ``spawn(task_id)`` depends only on ``(seed, task_id)``, never on how many
    draws were taken before, so parallel tasks reproduce regardless of
    scheduling.
    """

    def __init__(self, seed: int = 0, _key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._key = _key
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=_key)
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def spawn(self, task_id) -> "RandomSource":
        digest = hashlib.blake2b(repr(task_id).encode(), digest_size=8).digest()
        return RandomSource(self.seed, self._key + (int.from_bytes(digest, "little"),))

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, depth={len(self._key)})"


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RandomSource):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    raise TypeError(f"cannot use {type(rng).__name__} as a random source")


def as_source(rng) -> RandomSource:
    """Coerce to a :class:`RandomSource` (needed where sub-sources are spawned)."""
    if isinstance(rng, RandomSource):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RandomSource(0 if rng is None else int(rng))
    if isinstance(rng, np.random.Generator):
        return RandomSource(int(rng.integers(2**63)))
    raise TypeError(f"cannot use {type(rng).__name__} as a random source")


# -- samplers ----------------------------------------------------------------

def laplace(scale: float, rng, size=None):
    """Draw from the Laplace density ``exp(-|x|/scale) / (2 scale)``."""
    if not scale > 0:
        raise ValueError(f"Laplace scale must be positive, got {scale}")
    if math.isinf(scale):
        raise ValueError("Laplace scale must be finite")
    return as_generator(rng).laplace(0.0, scale, size)


def geometric(alpha: float, rng, size=None):
    """Two-sided geometric noise: ``P(d) = (1-alpha)/(1+alpha) * alpha**|d|``.

    Inverse-CDF sampling. With ``F(-1) = alpha/(1+alpha)`` and
    ``F(0) = 1/(1+alpha)``, a uniform ``u`` below ``F(-1)`` maps to
    ``-floor(log_alpha(u (1+alpha)))``, above ``F(0)`` to
    ``ceil(log_alpha((1-u)(1+alpha))) - 1``, and to 0 otherwise.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    gen = as_generator(rng)
    u = np.maximum(gen.random(size), np.finfo(float).tiny)
    la = math.log(alpha)
    out = np.zeros(np.shape(u), dtype=np.int64)
    lo = u <= alpha / (1.0 + alpha)
    hi = u > 1.0 / (1.0 + alpha)
    with np.errstate(divide="ignore"):
        out = np.where(lo, -np.floor(np.log(u * (1.0 + alpha)) / la), out)
        out = np.where(hi, np.ceil(np.log((1.0 - u) * (1.0 + alpha)) / la) - 1.0, out)
    out = out.astype(np.int64)
    return int(out) if size is None else out


def exp_accept_prob(delta_score: float, eps_p: float, sensitivity: float) -> float:
    """Metropolis ratio ``min(1, exp(eps_p * delta / (2 * sensitivity)))``."""
    if not sensitivity > 0:
        raise ValueError("sensitivity must be positive")
    if delta_score >= 0:
        return 1.0
    if math.isinf(eps_p):
        return 0.0
    return math.exp(eps_p * delta_score / (2.0 * sensitivity))


def mh_accept(delta_score: float, eps_p: float, sensitivity: float, rng) -> bool:
    """One exponential-mechanism Metropolis decision for a score change."""
    p = exp_accept_prob(delta_score, eps_p, sensitivity)
    return p >= 1.0 or as_generator(rng).random() < p


def modularity_sensitivity(m: float) -> float:
    """Global sensitivity bound of modularity under one-edge changes."""
    return 3.0 / m


def hrg_sensitivity(n: int) -> float:
    """Sensitivity of the dendrogram log-likelihood, ``2 ln n``."""
    return 2.0 * math.log(n)


# -- budgets -----------------------------------------------------------------

@dataclass(frozen=True)
class BudgetSchedule:
    eps_total: float
    eps_levels: tuple[float, ...]
    eps_m: float
    ratio: float

    @property
    def max_level(self) -> int:
        return len(self.eps_levels)

    @property
    def eps_tree(self) -> float:
        return self.eps_total - self.max_level * self.eps_m


def split_budget(eps: float, max_level: int, ratio: float = 2.0, eps_m: float = 0.01) -> BudgetSchedule:
    """Geometric per-level budgets, level 0 largest.

    ``eps_levels[i] = ratio * eps_levels[i+1]`` and the levels sum to
    ``eps - max_level * eps_m``.
    """
    if max_level < 1:
        raise ValueError("max_level must be at least 1")
    if ratio < 1:
        raise ValueError("ratio must be >= 1")
    if eps_m < 0:
        raise ValueError("eps_m must be non-negative")
    eps1 = eps - max_level * eps_m
    if not eps1 > 0:
        raise BudgetError(f"eps={eps} is exhausted by {max_level} levels of eps_m={eps_m}")
    if ratio == 1:
        levels = [eps1 / max_level] * max_level
    else:
        last = eps1 * (ratio - 1.0) / (ratio ** max_level - 1.0)
        levels = [last * ratio ** (max_level - 1 - i) for i in range(max_level)]
    return BudgetSchedule(float(eps), tuple(levels), float(eps_m), float(ratio))


@dataclass
class PrivacyLedger:
    """Record of budget spent by one scheme run.

    Entries sharing a ``group`` ran on disjoint parts of the graph and
    compose in parallel (the group costs its maximum); distinct groups
    compose sequentially.
    """

    entries: list[tuple[str, str, float]] = field(default_factory=list)

    def spend(self, what: str, eps: float, group: str | None = None) -> None:
        if eps < 0:
            raise ValueError("cannot spend a negative budget")
        self.entries.append((group or what, what, float(eps)))

    @property
    def total(self) -> float:
        per_group: dict[str, float] = {}
        for group, _, eps in self.entries:
            per_group[group] = max(per_group.get(group, 0.0), eps)
        return math.fsum(per_group.values())

    def by_group(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for group, _, eps in self.entries:
            out[group] = max(out.get(group, 0.0), eps)
        return out
