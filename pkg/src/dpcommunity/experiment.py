"""Experiment grid: schemes x epsilon values x repeated runs."""

from __future__ import annotations

import csv
import hashlib
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .edge_flip import edge_flip_clustering
from .graph import Clustering, Graph, write_clustering
from .hrg_fixed import hrg_fixed
from .louvain import louvain
from .louvain_dp import louvain_dp
from .mechanisms import RandomSource, split_budget
from .metrics import avg_f1, modularity
from .mod_divisive import mod_divisive

SCHEMES = ("louvain", "louvaindp", "moddivisive", "edgeflip", "hrgfixed")
CSV_FIELDS = ["scheme", "eps", "run", "seed", "modularity", "avg_f1", "num_communities",
              "wall_time_s", "budget_spent", "flags"]
GRID_FACTORS = (0.1, 0.2, 0.3, 0.4, 0.5)

DEFAULT_PARAMS = {"k": None, "maxL": 3, "ratio": 2.0, "epsm": 0.01, "burnin": None, "eps2": 0.1}


class ConfigError(ValueError):
    pass


def eps_grid(n: int) -> list[float]:
    """``{0.1, ..., 0.5} * ln n``."""
    return [f * math.log(n) for f in GRID_FACTORS]


@dataclass
class ExperimentConfig:
    scheme: str
    eps: list[float] | None = None
    runs: int = 20
    seed: int = 0
    params: dict = field(default_factory=dict)

    def param(self, name):
        value = self.params.get(name)
        if value is None:
            value = DEFAULT_PARAMS[name]
        if value is None:
            value = {"k": 8 if self.scheme == "louvaindp" else 4,
                     "burnin": 1000 if self.scheme == "hrgfixed" else 50}[name]
        return value

    def eps_values(self, n: int) -> list[float]:
        if self.scheme == "louvain":
            return [math.inf]
        return list(self.eps) if self.eps else eps_grid(n)

    def validate(self, g: Graph) -> None:
        """Reject bad parameter combinations before any work starts."""
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if self.runs < 0:
            raise ConfigError("runs must be >= 0")
        if g.n == 0 or g.m <= 0:
            raise ConfigError("input graph has no edges")
        unknown = set(self.params) - set(DEFAULT_PARAMS)
        if unknown:
            raise ConfigError(f"unknown parameters: {', '.join(sorted(unknown))}")
        eps_list = self.eps_values(g.n)
        if any(not e > 0 for e in eps_list):
            raise ConfigError("eps values must be positive")
        if self.scheme == "louvaindp":
            k = self.param("k")
            if not 1 <= k <= g.n:
                raise ConfigError(f"k={k} must lie in 1..{g.n}")
            for e in eps_list:
                if not e > self.param("eps2"):
                    raise ConfigError(f"eps={e:g} does not exceed eps2={self.param('eps2'):g}")
        elif self.scheme == "edgeflip":
            for e in eps_list:
                if not e > self.param("eps2"):
                    raise ConfigError(f"eps={e:g} does not exceed eps2={self.param('eps2'):g}")
        elif self.scheme == "moddivisive":
            if self.param("k") < 2:
                raise ConfigError("k must be >= 2 for moddivisive")
            if self.param("burnin") < 1:
                raise ConfigError("burnin must be >= 1")
            for e in eps_list:
                try:
                    split_budget(e, self.param("maxL"), self.param("ratio"), self.param("epsm"))
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
        elif self.scheme == "hrgfixed":
            if self.param("burnin") < 1:
                raise ConfigError("burnin must be >= 1")


def cell_seed(master: int, scheme: str, eps_index: int, run: int) -> int:
    key = f"{master}|{scheme}|{eps_index}|{run}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little") >> 1


def run_scheme(scheme: str, g: Graph, eps: float, params: dict, rng) -> tuple[Clustering, float, list[str]]:
    """One private (or exact) clustering. Returns ``(clustering, budget, flags)``."""
    if scheme == "louvain":
        return louvain(g, rng).clustering, math.inf, []
    if scheme == "louvaindp":
        r = louvain_dp(g, params["k"], eps, rng, eps2=params["eps2"])
        return r.clustering, r.ledger.total, list(r.flags)
    if scheme == "moddivisive":
        r = mod_divisive(g, params["k"], eps, params["maxL"], params["ratio"], params["epsm"],
                         params["burnin"], rng)
        return r.clustering, r.ledger.total, list(r.flags)
    if scheme == "edgeflip":
        r = edge_flip_clustering(g, eps, rng, eps2=params["eps2"])
        return r.clustering, r.ledger.total, list(r.flags)
    if scheme == "hrgfixed":
        r = hrg_fixed(g, eps, params["burnin"], rng)
        return r.clustering, r.ledger.total, list(r.flags)
    raise ConfigError(f"unknown scheme {scheme!r}")


def _run_cell(args):
    scheme, g, eps, params, seed, truth = args
    t0 = time.perf_counter()
    clustering, budget, flags = run_scheme(scheme, g, eps, params, RandomSource(seed))
    wall = time.perf_counter() - t0
    return clustering.canonical_labels(), {
        "modularity": modularity(g, clustering),
        "avg_f1": avg_f1(clustering, truth),
        "num_communities": clustering.num_communities,
        "wall_time_s": wall,
        "budget_spent": budget,
        "flags": ";".join(flags),
    }


def _fmt(x) -> str:
    if isinstance(x, float):
        return "inf" if math.isinf(x) else f"{x:.10g}"
    return str(x)


def detect(g: Graph, config: ExperimentConfig, out_dir, truth: Clustering | None = None,
           workers: int = 1) -> list[dict]:
    """Run every (eps, run) cell, writing clusterings and ``results.csv`` into ``out_dir``.

    Without ``truth`` the exact Louvain clustering (seeded from the master
    seed) serves as ground truth for the F1 column.
    """
    config.validate(g)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = {name: config.param(name) for name in DEFAULT_PARAMS}
    if truth is None:
        truth = louvain(g, RandomSource(config.seed).spawn("ground-truth")).clustering
    elif truth.n != g.n:
        raise ConfigError("ground-truth clustering does not cover the graph")

    cells = []
    for i, eps in enumerate(config.eps_values(g.n)):
        for run in range(config.runs):
            cells.append((i, eps, run, cell_seed(config.seed, config.scheme, i, run)))
    jobs = [(config.scheme, g, eps, params, seed, truth) for _, eps, _, seed in cells]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(job) for job in jobs]

    rows = []
    cdir = out / "clusterings"
    if cells:
        cdir.mkdir(exist_ok=True)
    for (i, eps, run, seed), (labels, metrics) in zip(cells, results):
        name = f"{config.scheme}_eps{i}_run{run:03d}.txt"
        write_clustering(Clustering(labels), cdir / name, g.node_ids)
        rows.append({"scheme": config.scheme, "eps": eps, "run": run, "seed": seed, **metrics})
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    (out / "results.csv").write_text(buf.getvalue(), encoding="utf-8")
    return rows


def summarize(rows: list[dict]) -> list[dict]:
    """Mean and median modularity / F1 per epsilon."""
    by_eps: dict[float, list[dict]] = {}
    for row in rows:
        by_eps.setdefault(float(row["eps"]), []).append(row)
    out = []
    for eps, group in sorted(by_eps.items()):
        q = np.array([float(r["modularity"]) for r in group])
        f = np.array([float(r["avg_f1"]) for r in group])
        out.append({"eps": eps, "runs": len(group),
                    "modularity_mean": q.mean(), "modularity_median": float(np.median(q)),
                    "avg_f1_mean": f.mean(), "avg_f1_median": float(np.median(f))})
    return out
