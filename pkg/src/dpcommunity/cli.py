"""Command line entry point: ``detect``, ``eval`` and ``gen-planted``."""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
import time

from .experiment import SCHEMES, ConfigError, ExperimentConfig, detect, summarize
from .generators import planted_partition
from .graph import GraphFormatError, load_edge_list, read_clustering, write_clustering, write_edge_list
from .metrics import avg_f1, modularity

PARAM_FLAGS = {"k": int, "maxL": int, "ratio": float, "epsm": float, "burnin": int, "eps2": float}


def _eps_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad eps list {text!r}") from None


def _read_config(path: str) -> dict:
    """``[detect]`` section of an ini-style file, keys named like the flags."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if "detect" not in parser:
        raise ConfigError(f"{path}: missing [detect] section")
    return dict(parser["detect"])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dpcommunity",
                                description="Community detection under edge differential privacy.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="run a scheme over an eps grid and write clusterings + CSV")
    d.add_argument("--input", help="SNAP edge list")
    d.add_argument("--scheme", choices=SCHEMES)
    d.add_argument("--eps", type=_eps_list, help="comma separated eps values (default: {0.1..0.5} ln n)")
    d.add_argument("--runs", type=int)
    d.add_argument("--seed", type=int)
    d.add_argument("--truth", help="ground-truth clustering file (default: exact Louvain output)")
    d.add_argument("--out", help="output directory")
    d.add_argument("--workers", type=int, default=1)
    d.add_argument("--config", help="ini file with a [detect] section holding any of these options")
    for name, typ in PARAM_FLAGS.items():
        d.add_argument(f"--{name}", type=typ)

    e = sub.add_parser("eval", help="score a clustering file against a reference")
    e.add_argument("clustering")
    e.add_argument("reference")
    e.add_argument("--graph", help="edge list; required for modularity")

    gp = sub.add_parser("gen-planted", help="write a planted-partition graph")
    gp.add_argument("--blocks", type=int, default=4)
    gp.add_argument("--size", type=int, default=100)
    gp.add_argument("--p-in", type=float, default=0.3)
    gp.add_argument("--p-out", type=float, default=0.01)
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--out", required=True)
    gp.add_argument("--truth", help="also write the planted blocks as a clustering file")
    return p


def _detect(args) -> int:
    settings = _read_config(args.config) if args.config else {}
    for key in ("input", "scheme", "runs", "seed", "truth", "out", "workers", *PARAM_FLAGS):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if args.eps is not None:
        settings["eps"] = args.eps
    try:
        if "input" not in settings or "scheme" not in settings or "out" not in settings:
            raise ConfigError("--input, --scheme and --out are required (flags or config)")
        eps = settings.get("eps")
        if isinstance(eps, str):
            eps = _eps_list(eps)
        params = {k: PARAM_FLAGS[k](settings[k]) for k in PARAM_FLAGS if k in settings}
        config = ExperimentConfig(scheme=str(settings["scheme"]), eps=eps,
                                  runs=int(settings.get("runs", 20)),
                                  seed=int(settings.get("seed", 0)), params=params)
        g = load_edge_list(settings["input"])
        truth = read_clustering(settings["truth"], g.node_ids) if settings.get("truth") else None
        rows = detect(g, config, settings["out"], truth, int(settings.get("workers", 1)))
    except (ConfigError, GraphFormatError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for s in summarize(rows):
        print(f"eps={s['eps']:.4g} runs={s['runs']} Q(mean/median)={s['modularity_mean']:.4f}/"
              f"{s['modularity_median']:.4f} F1(mean/median)={s['avg_f1_mean']:.4f}/{s['avg_f1_median']:.4f}")
    return 0


def _eval(args) -> int:
    t0 = time.perf_counter()
    try:
        g = load_edge_list(args.graph) if args.graph else None
        ids = g.node_ids if g is not None else None
        if ids is None:
            c = read_clustering(args.clustering)
            ref = read_clustering(args.reference)
            if c.n != ref.n:
                raise GraphFormatError("clusterings cover different node universes")
        else:
            c = read_clustering(args.clustering, ids)
            ref = read_clustering(args.reference, ids)
    except GraphFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    q = modularity(g, c) if g is not None and g.m > 0 else ""
    f1 = avg_f1(c, ref)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["modularity", "avg_f1", "num_communities", "wall_time_s"])
    w.writerow([f"{q:.10g}" if q != "" else "", f"{f1:.10g}", c.num_communities,
                f"{time.perf_counter() - t0:.4f}"])
    return 0


def _gen_planted(args) -> int:
    g, truth = planted_partition(args.blocks, args.size, args.p_in, args.p_out, args.seed)
    write_edge_list(g, args.out)
    if args.truth:
        write_clustering(truth, args.truth, g.node_ids)
    print(f"wrote {g} to {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return {"detect": _detect, "eval": _eval, "gen-planted": _gen_planted}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
