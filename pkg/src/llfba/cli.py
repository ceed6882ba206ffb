"""``llfba`` command line: solve, verify, bench, aggregate, profile, enzyme-data."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import backend as bk
from .backend import SolveSettings
from .bench import MethodSpec, aggregate, format_summary, make_performance_profile, run_benchmark, write_profile, write_report
from .benders import BendersConfig, solve_llfba_benders
from .enzyme import build_enzyme_model, generate_enzyme_data, load_enzyme_data, save_enzyme_data
from .formulations import HULL, INDICATOR, BIGM, LooplessConfig, build_fba, build_llfba_bigm, build_llfba_hull, build_llfba_indicator, solve_fba, solve_llfba
from .io import ParseError, load_model, load_solution, save_solution
from .model import FluxSolution, Status, build_example_loop_model, build_two_cycle_model, random_model
from .verifier import Certified, InvalidInput, verify_loopless, verify_via_nullspace

logger = logging.getLogger("llfba")

SOLVE_DEFAULTS = {
    "method": "benders",
    "formulation": BIGM,
    "pct": 0.0,
    "strategy": "All",
    "epsilon": 1.0,
    "big_m": None,
    "time_limit": 1800.0,
    "seed": 0,
    "enzyme": None,
    "output": None,
    "lp_dump": None,
    "backend": None,
}


def resolve_instance(spec: str):
    """Model path or builtin name: ``example``, ``two_cycles``, ``random:<seed>``."""
    if spec == "example":
        return build_example_loop_model()
    if spec == "two_cycles":
        return build_two_cycle_model()
    if spec.startswith("random:"):
        return random_model(int(spec.split(":", 1)[1]))
    return load_model(spec)


def expand_instances(specs):
    out = []
    for spec in specs:
        if spec.startswith("random:") and ".." in spec:
            lo, hi = spec.split(":", 1)[1].split("..")
            out.extend(f"random:{s}" for s in range(int(lo), int(hi) + 1))
        else:
            out.append(spec)
    return out


def _read_config(path):
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _solve_options(args) -> dict:
    opts = dict(SOLVE_DEFAULTS)
    if args.config:
        cfg = _read_config(args.config)
        unknown = set(cfg) - set(opts)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        opts.update({k.replace("-", "_"): v for k, v in cfg.items()})
    for key in SOLVE_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def cmd_solve(args) -> int:
    opts = _solve_options(args)
    model = resolve_instance(args.model)
    backend = bk.get_backend(opts["backend"])
    settings = SolveSettings(time_limit_s=float(opts["time_limit"]), seed=int(opts["seed"]))
    target = model
    if opts["enzyme"]:
        target = build_enzyme_model(model, load_enzyme_data(opts["enzyme"]))
    method = opts["method"]
    formulation = {"bigm": BIGM, "indicator": INDICATOR, "hull": HULL}.get(method, BIGM)
    config = LooplessConfig(float(opts["epsilon"]), opts["big_m"], formulation)

    if opts["lp_dump"]:
        builder = {"fba": lambda m, c: build_fba(m), "bigm": build_llfba_bigm,
                   "indicator": build_llfba_indicator, "hull": build_llfba_hull}.get(method)
        if builder is not None:
            builder(target, config).write_lp(opts["lp_dump"])

    if method == "fba":
        sol = solve_fba(target, settings, backend)
    elif method in ("bigm", "indicator", "hull"):
        sol = solve_llfba(target, config, settings, backend)
    elif method in ("benders", "no_good"):
        cfg = BendersConfig(master_formulation=opts["formulation"], cuts_per_iter_pct=float(opts["pct"]),
                            cut_strategy=opts["strategy"], no_good_only=method == "no_good",
                            epsilon=float(opts["epsilon"]), big_M=opts["big_m"])
        sol, report = solve_llfba_benders(target, cfg, settings, backend)
        print(f"iterations={report.iterations} cuts={report.cuts}", file=sys.stderr)
    else:
        raise SystemExit(f"unknown method {method!r}")

    if target is not model and sol.v is not None:
        # report the folded fluxes of the original reactions
        folded = FluxSolution(sol.status, target.fold(sol.v), float(model.c @ target.fold(sol.v)))
        folded.extra = sol.extra
        sol = folded
    print(f"status={sol.status} objective={sol.objective_value:.10g}")
    if opts["output"]:
        save_solution(sol, opts["output"], model)
    return 0 if sol.status == Status.OPTIMAL else 2


def cmd_verify(args) -> int:
    model = resolve_instance(args.model)
    sol = load_solution(args.solution, model)
    if sol.v is None:
        print("solution has no fluxes", file=sys.stderr)
        return 1
    try:
        verdict = verify_loopless(model, sol.v, epsilon=args.epsilon, tol=args.tol)
        via_nullspace = verify_via_nullspace(model, sol.v, tol=args.tol)
    except InvalidInput as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    if isinstance(verdict, Certified):
        print(f"certified loopless (nullspace check: {'pass' if via_nullspace else 'FAIL'})")
        return 0 if via_nullspace else 1
    print("cycle found: " + " ".join(verdict.reaction_ids))
    return 1


def _method_specs(entries):
    specs = []
    for entry in entries:
        entry = {k.replace("-", "_"): v for k, v in entry.items()}
        if "big_m" in entry:
            entry["big_M"] = entry.pop("big_m")
        specs.append(MethodSpec(**entry))
    return specs


def cmd_bench(args) -> int:
    grid = _read_config(args.grid)
    specs = _method_specs(grid.get("methods", [{"method": "benders"}]))
    settings = SolveSettings(time_limit_s=float(grid.get("time_limit", 1800.0)), seed=int(grid.get("seed", 0)))
    instances = []
    for spec in expand_instances(grid.get("instances", [])):
        model = resolve_instance(spec)
        instances.append((model.name if not spec.startswith("random:") else spec, model))
    backend = bk.get_backend(grid.get("backend")) if grid.get("backend") else None
    out_path = args.output or grid.get("output")
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            run_benchmark(instances, specs, settings, backend, workers=int(grid.get("workers", 1)), out=fh)
    else:
        run_benchmark(instances, specs, settings, backend, workers=int(grid.get("workers", 1)), out=sys.stdout)
    return 0


def cmd_aggregate(args) -> int:
    summaries = aggregate(args.report, time_limit=args.time_limit)
    sys.stdout.write(format_summary(summaries))
    return 0


def cmd_profile(args) -> int:
    profile = make_performance_profile(args.report)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            write_profile(profile, fh)
    else:
        write_profile(profile, sys.stdout)
    return 0


def cmd_enzyme_data(args) -> int:
    model = resolve_instance(args.model)
    data = generate_enzyme_data(model, seed=args.seed)
    save_enzyme_data(data, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="llfba", description="Loopless flux balance analysis")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve FBA or loopless FBA on a model")
    p.add_argument("model", help="model JSON, or example / two_cycles / random:<seed>")
    p.add_argument("--method", choices=["fba", "bigm", "indicator", "hull", "benders", "no_good"])
    p.add_argument("--formulation", choices=["BigM", "Indicator", "Both"], help="Benders master formulation")
    p.add_argument("--pct", type=float, help="MIS per iteration as %% of reactions (0 = single cut)")
    p.add_argument("--strategy", help="All, Distinct, KSmallest(k) or DensityLimit(d)")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--big-m", dest="big_m", type=float)
    p.add_argument("--time-limit", dest="time_limit", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--enzyme", help="enzyme data JSON; solves the enzyme-constrained model")
    p.add_argument("--backend", help="backend name (default: $LLFBA_BACKEND or highs)")
    p.add_argument("--output", "-o", help="write solution JSON here")
    p.add_argument("--lp-dump", dest="lp_dump", help="write the monolithic problem in LP format")
    p.add_argument("--config", help="TOML file with any of the flags above")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a solution for internal cycles (exit 0 = loopless)")
    p.add_argument("model")
    p.add_argument("solution")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run a method x instance grid from a TOML file")
    p.add_argument("grid")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("aggregate", help="summarize a benchmark CSV")
    p.add_argument("report")
    p.add_argument("--time-limit", dest="time_limit", type=float)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("profile", help="performance-profile data from a benchmark CSV")
    p.add_argument("report")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("enzyme-data", help="generate seeded random enzyme data for a model")
    p.add_argument("model")
    p.add_argument("output")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_enzyme_data)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, bk.BackendError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
