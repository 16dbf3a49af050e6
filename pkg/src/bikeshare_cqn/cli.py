"""Command-line front end: ``validate``, ``solve``, ``report`` and ``simulate``.

Exit codes: 0 success, 1 config/schema error, 2 model invariant violation,
3 reducible path graph, 4 no convergence, 5 state space too large.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from .config import config_document, load_config
from .errors import ConfigError, DisconnectedStation, ModelError, NoConvergence, ReducibleMatrix, StateSpaceTooLarge
from .fixedpoint import FixedPointConfig, solve_fixed_point
from .measures import performance_report
from .model import validate_model
from .pathgraph import build_path_graph, is_irreducible
from .routing import build_routing_matrix
from .simulator import SimConfig, simulate

EXIT_OK, EXIT_SCHEMA, EXIT_MODEL, EXIT_REDUCIBLE, EXIT_NOCONV, EXIT_TOO_LARGE = range(6)

log = logging.getLogger("bikeshare_cqn")


def _emit(obj, out: Optional[str]):
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path):
    """Return ``(config, model)`` or an exit code."""
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        model = validate_model(cfg.model)
    except DisconnectedStation as exc:
        for v in exc.violations:
            print(f"{type(exc).__name__}: {v}", file=sys.stderr)
        print("path graph: reducible")
        return EXIT_REDUCIBLE
    except ModelError as exc:
        for v in exc.violations:
            print(f"{type(exc).__name__}: {v}", file=sys.stderr)
        return EXIT_MODEL
    return cfg, model


def cmd_validate(args) -> int:
    loaded = _load(args.config)
    if isinstance(loaded, int):
        return loaded
    cfg, model = loaded
    print(f"model: valid ({model.N} stations, {len(model.roads)} roads, fleet {model.fleet}, K={model.K})")
    irreducible = is_irreducible(build_path_graph(model))
    print(f"path graph: {'irreducible' if irreducible else 'reducible'}")
    if args.echo_config:
        _emit(config_document(model, cfg.solver, cfg.sim), None)
    return EXIT_OK if irreducible else EXIT_REDUCIBLE


def _solver_config(cfg, args) -> FixedPointConfig:
    opts = dict(cfg.solver)
    fp = FixedPointConfig(
        tol=opts.get("tol", 1e-8),
        damping=opts.get("damping", 0.5),
        max_iter=opts.get("max_iter", 500),
        init=tuple(opts["init"]) if "init" in opts else None,
        convention=opts.get("road_factor_convention", "paper"),
        max_states=opts.get("max_states"),
    )
    overrides = {
        "tol": args.tol,
        "damping": args.damping,
        "max_iter": args.max_iter,
        "convention": args.road_factor_convention,
        "max_states": args.max_states,
    }
    return replace(fp, **{k: v for k, v in overrides.items() if v is not None})


def _solve(cfg, model, args):
    if not is_irreducible(build_path_graph(model)):
        print("path graph: reducible; the solver needs a strongly connected graph", file=sys.stderr)
        return EXIT_REDUCIBLE
    fp = _solver_config(cfg, args)
    try:
        return fp, solve_fixed_point(model, fp)
    except NoConvergence as exc:
        print(str(exc), file=sys.stderr)
        _emit({"error": "no_convergence", **exc.result.to_dict()}, args.out)
        return EXIT_NOCONV
    except StateSpaceTooLarge as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_TOO_LARGE
    except ReducibleMatrix as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_REDUCIBLE


def _write_marginals(path, report):
    with open(path, "w") as fh:
        fh.write("station,bikes,probability\n")
        for i, row in enumerate(report.marginals, start=1):
            for k, prob in enumerate(row):
                fh.write(f"{i},{k},{float(prob)!r}\n")


def _solve_payload(model, fp, res):
    report = performance_report(res.context, res.pi)
    payload = {
        **res.to_dict(),
        "logG": res.context.logG,
        "road_factor_convention": fp.convention,
        "report": report.to_dict(),
    }
    return payload, report


def cmd_solve(args) -> int:
    loaded = _load(args.config)
    if isinstance(loaded, int):
        return loaded
    cfg, model = loaded
    solved = _solve(cfg, model, args)
    if isinstance(solved, int):
        return solved
    fp, res = solved
    payload, report = _solve_payload(model, fp, res)
    _emit(payload, args.out)
    if args.dump_routing:
        with open(args.dump_routing, "w") as fh:
            fh.write(build_routing_matrix(model, res.pi).to_csv())
    if args.marginals:
        _write_marginals(args.marginals, report)
    return EXIT_OK


def cmd_report(args) -> int:
    loaded = _load(args.config)
    if isinstance(loaded, int):
        return loaded
    cfg, model = loaded
    solved = _solve(cfg, model, args)
    if isinstance(solved, int):
        return solved
    fp, res = solved
    report = performance_report(res.context, res.pi)
    _emit(report.to_dict(), args.out)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(report.station_csv())
    if args.marginals:
        _write_marginals(args.marginals, report)
    return EXIT_OK


def cmd_simulate(args) -> int:
    loaded = _load(args.config)
    if isinstance(loaded, int):
        return loaded
    cfg, model = loaded
    if not is_irreducible(build_path_graph(model)):
        print("warning: path graph is reducible; simulating anyway", file=sys.stderr)
    opts = dict(cfg.sim)
    for key in ("events", "seed", "replications", "warmup", "lambda_realization"):
        val = getattr(args, key)
        if val is not None:
            opts[key] = val
    try:
        sim_cfg = SimConfig(**opts)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    rep = simulate(model, sim_cfg)
    payload = {"simulation": rep.to_dict()}
    if args.compare:
        solved = _solve(cfg, model, args)
        if isinstance(solved, int):
            return solved
        fp, res = solved
        analytic = performance_report(res.context, res.pi)
        rows = []
        for i in range(model.N):
            rows.append({
                "station": i + 1,
                "analytic_full_prob": float(analytic.full_prob[i]),
                "empirical_full_prob": float(rep.full_prob[i]),
                "abs_gap_full_prob": float(abs(analytic.full_prob[i] - rep.full_prob[i])),
                "analytic_empty_prob": float(analytic.empty_prob[i]),
                "empirical_empty_prob": float(rep.empty_prob[i]),
                "abs_gap_empty_prob": float(abs(analytic.empty_prob[i] - rep.empty_prob[i])),
                "analytic_mean_station": float(analytic.mean_station[i]),
                "empirical_mean_station": float(rep.mean_station[i]),
            })
        payload["comparison"] = {
            "road_factor_convention": fp.convention,
            "stations": rows,
            "max_abs_gap_full_prob": float(np.max([r["abs_gap_full_prob"] for r in rows])),
        }
    _emit(payload, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bikeshare-cqn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model config and its path graph")
    p.add_argument("config")
    p.add_argument("--echo-config", action="store_true", help="print the normalised config")
    p.set_defaults(func=cmd_validate)

    def solver_flags(p):
        p.add_argument("config")
        p.add_argument("--out")
        p.add_argument("--max-states", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--damping", type=float)
        p.add_argument("--max-iter", type=int)
        p.add_argument("--road-factor-convention", choices=["paper", "bcmp"])
        p.add_argument("--marginals", metavar="CSV", help="write per-station marginals here")

    p = sub.add_parser("solve", help="solve for the full-station probabilities")
    solver_flags(p)
    p.add_argument("--dump-routing", metavar="CSV", help="write the converged routing matrix here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("report", help="solve and emit the performance report")
    solver_flags(p)
    p.add_argument("--csv", metavar="CSV", help="write per-station measures here")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", help="simulate the physical system")
    solver_flags(p)
    p.add_argument("--events", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--warmup", type=float)
    p.add_argument("--lambda-realization", choices=["exponential", "cyclic", "poisson"])
    p.add_argument("--compare", action="store_true", help="add analytic-vs-empirical columns")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
