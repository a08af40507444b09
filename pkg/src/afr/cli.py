"""Command-line entry point: ``afr run | converge | max-cfl | sweep``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import yaml

from .harness import CaseConfig, converge, max_cfl_bisect, run_case, sweep
from .reference_ops import build_reference_operators, dump_operators_csv
from .sensor import SCHEMES

# flag name -> CaseConfig field, for every option shared by the subcommands
_CASE_FLAGS = {
    "case": dict(help="case name (gaussian-pulse, leblanc, shock-diffraction, dmr, density-wave)"),
    "scheme": dict(choices=SCHEMES),
    "p": dict(type=int, help="polynomial degree 1..5"),
    "grid": dict(help="element counts NX or NXxNY"),
    "cfl": dict(type=float),
    "final-time": dict(type=float),
    "cfl-mode": dict(choices=("initial", "adaptive")),
    "flux": dict(choices=("ec-ra",)),
    "dissipation": dict(choices=("roe", "llf", "none")),
    "limiter": dict(choices=("on", "off")),
    "positivity-eps": dict(type=float),
    "kappa": dict(type=float),
    "sensor-variable": dict(choices=("density", "pressure")),
    "sensor-update": dict(choices=("step", "stage")),
    "c-plus": dict(type=float, help="override the maximum FR parameter"),
    "entropy-projection": dict(choices=("on", "off")),
    "gamma": dict(type=float),
    "sigma": dict(type=float, help="Gaussian pulse strength"),
    "max-steps": dict(type=int),
    "log-every": dict(type=int),
    "line-samples": dict(type=int),
}


def _add_case_options(parser):
    parser.add_argument("--config", help="YAML file with any of the options below; flags take precedence")
    for name, kw in _CASE_FLAGS.items():
        parser.add_argument(f"--{name}", default=None, **kw)


def _on_off(value):
    return value if not isinstance(value, str) else value.lower() in ("on", "true", "yes", "1")


def load_config(args) -> CaseConfig:
    """Merge defaults, the YAML config file and explicit flags (in that order)."""
    data = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ValueError(f"{args.config}: expected a mapping of option names to values")
        data = {k.replace("-", "_"): v for k, v in data.items()}
    for name in _CASE_FLAGS:
        value = getattr(args, name.replace("-", "_"))
        if value is not None:
            data[name.replace("-", "_")] = value
    for key in ("limiter", "entropy_projection"):
        if key in data:
            data[key] = _on_off(data[key])
    if getattr(args, "out", None):
        data["out"] = args.out
    return CaseConfig.from_mapping(data)


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_run(args) -> int:
    config = load_config(args)
    if args.dump_operators:
        d = 1 if config.case in ("leblanc", "density-wave") else 2
        ops = build_reference_operators(config.p, d)
        for path in dump_operators_csv(ops, args.dump_operators, config.c_plus):
            print(path)
    result = run_case(config, raise_on_failure=False)
    status = "completed" if result.completed else f"FAILED: {result.failure}"
    print(f"{config.case} {config.scheme} p={config.p}: {status} "
          f"(t={result.t:.6g}, steps={result.sim.solver.steps}, wall {result.wall_time:.1f}s)")
    if config.out:
        print(f"outputs in {config.out}")
    return 0 if result.completed else 2


def cmd_converge(args) -> int:
    config = load_config(args)
    grids = [g.strip() for g in args.grids.split(",")]
    schemes = args.schemes.split(",") if args.schemes else [config.scheme]
    for scheme in schemes:
        csv_path = os.path.join(args.out, f"convergence_{scheme}_p{config.p}.csv") if args.out else None
        reports, orders = converge(config.replace(scheme=scheme), grids, csv_path)
        print(f"{scheme} p={config.p}")
        print(f"{'grid':>8} {'dof':>8} {'L1':>12} {'L2':>12} {'Linf':>12} {'order':>7}")
        for g, rep, o in zip(grids, reports, orders):
            print(f"{g:>8} {rep.dof:>8d} {rep.l1:12.4e} {rep.l2:12.4e} {rep.linf:12.4e} {o:7.2f}")
    return 0


def cmd_max_cfl(args) -> int:
    config = load_config(args)
    schemes = args.schemes.split(",") if args.schemes else [config.scheme]
    results = {}
    for scheme in schemes:
        cfl = max_cfl_bisect(config.replace(scheme=scheme), args.lo, args.hi, args.tol)
        results[scheme] = cfl
        print(f"{scheme}: max CFL {cfl:.4f}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "max_cfl.json"), "w") as fh:
            json.dump({"config": dataclasses.asdict(config), "max_cfl": results}, fh, indent=2)
    return 0


def cmd_sweep(args) -> int:
    config = load_config(args)
    schemes = args.schemes.split(",") if args.schemes else list(SCHEMES)
    csv_path = os.path.join(args.out, "sweep.csv") if args.out else None
    rows = sweep(config, schemes, _floats(args.cfls), csv_path)
    print(f"{'scheme':>6} {'cfl':>7} {'done':>5} {'wall[s]':>8} {'max c':>10}")
    for scheme, cfl, done, wall, cmax in rows:
        print(f"{scheme:>6} {cfl:7.3f} {done:5d} {wall:8.1f} {cmax:10.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="afr", description="Adaptive flux reconstruction solver for the Euler equations")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one case")
    _add_case_options(p)
    p.add_argument("--out", help="directory for line CSV, VTK fields, summary and run log")
    p.add_argument("--dump-operators", metavar="DIR", help="also write the reference operators as CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("converge", help="grid convergence study")
    _add_case_options(p)
    p.add_argument("--grids", required=True, help="comma separated grids, e.g. 8,16,32,64")
    p.add_argument("--schemes", help="comma separated schemes (default: --scheme)")
    p.add_argument("--out", help="directory for the convergence CSV tables")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("max-cfl", help="bisect for the largest CFL that runs to completion")
    _add_case_options(p)
    p.add_argument("--schemes", help="comma separated schemes (default: --scheme)")
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=0.01)
    p.add_argument("--out", help="directory for max_cfl.json")
    p.set_defaults(func=cmd_max_cfl)

    p = sub.add_parser("sweep", help="run schemes over a list of CFL numbers")
    _add_case_options(p)
    p.add_argument("--schemes", help="comma separated schemes (default: all)")
    p.add_argument("--cfls", required=True, help="comma separated CFL numbers")
    p.add_argument("--out", help="directory for sweep.csv")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"afr: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
