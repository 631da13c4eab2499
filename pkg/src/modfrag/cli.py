"""Command-line workbench around the library.

Every subcommand writes its primary artifact to --out (or stdout) plus a
small JSON manifest echoing the fully resolved configuration, so runs are
reproducible from the manifest alone. Exit codes: 0 success, 2 input or
validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .adversarial import (BRUTE_FORCE_EDGE_LIMIT, adversarial_bruteforce,
                          adversarial_search)
from .ingest import (DEFAULT_BOUNDING_BOX, cluster_stations, build_demand,
                     degeneracy_survey, generate_corpus, load_trips,
                     manhattan_costs, survey_to_csv, two_cluster_corpus)
from .model import (DemandMatrix, StationGraph, ValidationError,
                    load_json_file, net_flow)
from .montecarlo import (DEFAULT_TRIALS, estimate_pof, scaling_sweep)
from .regimes import classify_regime
from .solver import min_cost_rebalance, solve_demand
from .splitting import SplitSpec

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _read_config(path):
    """Flat key=value config file; blank lines and # comments ignored."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(
                    f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config(args, parser_defaults):
    """Fill args from --config for every option the user left at default."""
    if not getattr(args, "config", None):
        return
    values = _read_config(args.config)
    for key, raw in values.items():
        if not hasattr(args, key):
            raise ValidationError(f"unknown config key: {key}")
        if getattr(args, key) != parser_defaults.get(key):
            continue  # explicit flag wins over config file
        current = parser_defaults.get(key)
        if isinstance(current, bool):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            value = int(raw)
        elif isinstance(current, float):
            value = float(raw)
        elif isinstance(current, list):
            value = [type(current[0])(tok) for tok in raw.split(",")]
        else:
            value = raw
        setattr(args, key, value)


def _write_text(text, out):
    if out and out != "-":
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_manifest(args, command, extra=None):
    manifest_path = getattr(args, "manifest", None)
    if not manifest_path:
        return
    resolved = {k: v for k, v in vars(args).items()
                if k not in ("func", "manifest") and v is not None}
    payload = {"command": command, "version": __version__,
               "config": resolved}
    if extra:
        payload.update(extra)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _load_graph(path) -> StationGraph:
    return StationGraph.from_json(load_json_file(path))


def _load_demand(path) -> DemandMatrix:
    return DemandMatrix.from_json(load_json_file(path))


def _parse_shares(spec: str):
    """'0.5' or '0.3,0.7' or a path to a JSON list of per-firm matrices."""
    if spec.endswith(".json"):
        return load_json_file(spec)
    parts = [float(tok) for tok in spec.split(",")]
    return parts[0] if len(parts) == 1 else parts


# --- subcommand handlers ---------------------------------------------------

def _cmd_solve(args):
    graph = _load_graph(args.graph)
    demand = _load_demand(args.demand)
    solution = solve_demand(graph, demand)
    _write_text(json.dumps(solution.to_json(), indent=2, sort_keys=True)
                + "\n", args.out)
    _write_manifest(args, "solve", {"cost": solution.cost})


def _cmd_classify(args):
    graph = _load_graph(args.graph)
    demand = _load_demand(args.demand)
    shares = _parse_shares(args.shares)
    label = classify_regime(graph, demand, shares)
    _write_text(json.dumps(label.to_json(), indent=2, sort_keys=True) + "\n",
                args.out)
    _write_manifest(args, "classify", {"regime": label.kind})


def _cmd_pof(args):
    graph = _load_graph(args.graph)
    demand = _load_demand(args.demand)
    spec = SplitSpec(family=args.family, shares=_parse_shares(args.shares),
                     firms=args.firms)
    est = estimate_pof(graph, demand, spec, theta=args.theta,
                       trials=args.trials, master_seed=args.seed,
                       threads=args.threads)
    payload = {"theta": est.theta, "gamma_mean": est.gamma_mean,
               "gamma_stderr": est.gamma_stderr,
               "gamma_over_theta": est.gamma_over_theta,
               "trials": est.trials, "monopolist_rc": est.monopolist_rc}
    _write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                args.out)
    _write_manifest(args, "pof", {"gamma_mean": est.gamma_mean})


def _cmd_sweep(args):
    graph = _load_graph(args.graph)
    demand = _load_demand(args.demand)
    spec = SplitSpec(family=args.family, shares=_parse_shares(args.shares),
                     firms=args.firms)
    curve = scaling_sweep(graph, demand, spec, theta_grid=args.theta,
                          trials_per_theta=args.trials,
                          master_seed=args.seed, threads=args.threads)
    _write_text(curve.to_csv(), args.out)
    extra = {"regime_hint": curve.regime_hint}
    if not curve.fit.indeterminate:
        extra["slope"] = curve.fit.slope
    _write_manifest(args, "sweep", extra)


def _cmd_adversarial(args):
    graph = _load_graph(args.graph)
    demand = _load_demand(args.demand)
    result = adversarial_search(graph, demand, restarts=args.restarts,
                                max_iters=args.max_iters, seed=args.seed)
    payload = result.to_json()
    n_edges = int((demand.counts > 0).sum())
    if n_edges <= BRUTE_FORCE_EDGE_LIMIT:
        exact = adversarial_bruteforce(graph, demand)
        payload["brute_force_value"] = exact.value
        payload["certified_optimal"] = bool(
            abs(exact.value - result.value) <= 1e-9 * max(1.0, exact.value))
        if exact.value > result.value:  # surface the gap, never hide it
            payload["kappa"] = exact.kappa.astype(int).tolist()
            payload["value"] = exact.value
    _write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                args.out)
    _write_manifest(args, "adversarial", {"value": payload["value"]})


def _cmd_ingest(args):
    trips, report = load_trips(args.trips, bounding_box=tuple(args.bbox))
    if not len(trips):
        raise ValidationError("no usable trips after filtering")
    clustering = cluster_stations(trips, args.stations, seed=args.seed)
    graph = manhattan_costs(clustering)
    demand = build_demand(trips, clustering, args.window_start,
                          f"{args.window_minutes}min")
    payload = {
        "graph": graph.to_json(),
        "demand": demand.to_json(),
        "ingest_report": vars(report),
        "kmeans": {"inertia": clustering.inertia,
                   "iterations": clustering.iterations},
    }
    _write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                args.out)
    _write_manifest(args, "ingest", {"rows_kept": report.rows_kept})


def _cmd_survey(args):
    trips, report = load_trips(args.trips, bounding_box=tuple(args.bbox))
    if not len(trips):
        raise ValidationError("no usable trips after filtering")
    rows = degeneracy_survey(trips, station_counts=args.stations,
                             window_lengths=args.window_minutes,
                             seed=args.seed)
    _write_text(survey_to_csv(rows), args.out)
    _write_manifest(args, "survey", {"rows_kept": report.rows_kept,
                                     "cells": len(rows)})


def _cmd_gen_corpus(args):
    if args.style == "two-cluster":
        frame = two_cluster_corpus(seed=args.seed, hours=args.hours)
    else:
        frame = generate_corpus(seed=args.seed, hours=args.hours)
    if args.out and args.out != "-":
        frame.to_csv(args.out, index=False)
    else:
        frame.to_csv(sys.stdout, index=False)
    _write_manifest(args, "gen-corpus", {"rows": len(frame)})


# --- parser ----------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="modfrag",
        description="Mobility-on-demand rebalancing and fragmentation "
                    "workbench.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="-",
                       help="output path ('-' for stdout)")
        p.add_argument("--manifest", default=None,
                       help="write a JSON manifest of the resolved run here")
        p.add_argument("--config", default=None,
                       help="key=value config file; explicit flags win")

    p = sub.add_parser("solve", help="min-cost rebalancing for one demand "
                                     "matrix")
    p.add_argument("--graph", required=True)
    p.add_argument("--demand", required=True)
    common(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("classify", help="fragmentation regime of a market "
                                        "split")
    p.add_argument("--graph", required=True)
    p.add_argument("--demand", required=True)
    p.add_argument("--shares", default="0.5",
                   help="scalar, comma list, or JSON file of share matrices")
    common(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("pof", help="Monte Carlo fragmentation cost at one "
                                   "demand scale")
    p.add_argument("--graph", required=True)
    p.add_argument("--demand", required=True)
    p.add_argument("--shares", default="0.5")
    p.add_argument("--family", choices=("binomial", "poisson"),
                   default="binomial")
    p.add_argument("--firms", type=int, default=2)
    p.add_argument("--theta", type=int, default=100)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads; never changes the output bytes")
    common(p)
    p.set_defaults(func=_cmd_pof)

    p = sub.add_parser("sweep", help="fragmentation cost across a grid of "
                                     "demand scales")
    p.add_argument("--graph", required=True)
    p.add_argument("--demand", required=True)
    p.add_argument("--shares", default="0.5")
    p.add_argument("--family", choices=("binomial", "poisson"),
                   default="binomial")
    p.add_argument("--firms", type=int, default=2)
    p.add_argument("--theta", type=int, nargs="+",
                   default=[25, 50, 100, 200, 400])
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("adversarial", help="worst-case deterministic demand "
                                           "split")
    p.add_argument("--graph", required=True)
    p.add_argument("--demand", required=True)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=_cmd_adversarial)

    p = sub.add_parser("ingest", help="trips CSV -> station graph + one "
                                      "demand window")
    p.add_argument("--trips", required=True)
    p.add_argument("--stations", type=int, default=20)
    p.add_argument("--window-start", required=True,
                   help="ISO-8601 window start")
    p.add_argument("--window-minutes", type=float, default=60.0)
    p.add_argument("--bbox", type=float, nargs=4,
                   default=list(DEFAULT_BOUNDING_BOX),
                   metavar=("LON_MIN", "LAT_MIN", "LON_MAX", "LAT_MAX"))
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("survey", help="affected-window fractions over a "
                                      "(stations x window) grid")
    p.add_argument("--trips", required=True)
    p.add_argument("--stations", type=int, nargs="+", default=[10, 20, 40])
    p.add_argument("--window-minutes", type=float, nargs="+",
                   default=[30.0, 60.0, 120.0])
    p.add_argument("--bbox", type=float, nargs=4,
                   default=list(DEFAULT_BOUNDING_BOX),
                   metavar=("LON_MIN", "LAT_MIN", "LON_MAX", "LAT_MAX"))
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=_cmd_survey)

    p = sub.add_parser("gen-corpus", help="write a synthetic trip corpus")
    p.add_argument("--style", choices=("generic", "two-cluster"),
                   default="generic")
    p.add_argument("--hours", type=int, default=24)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=_cmd_gen_corpus)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    defaults = {a.dest: a.default
                for group in parser._subparsers._group_actions
                for a in group.choices[args.command]._actions}
    try:
        _apply_config(args, defaults)
        args.func(args)
    except (ValidationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
