"""Command line entry point: ``evsched {solve,simulate,sweep,check}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict

from ..errors import ConvergenceError, InfeasibleError, NonConvexError, ScenarioError
from ..problem import check_convexity, check_feasibility, total_cost
from .io import load_scenario, read_profile, write_profile, write_trace
from .metrics import evaluate
from .noise import ForecastNoise
from .sweep import POLICIES, RunSpec, compare_policies, format_comparison, run_cell

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INVALID = 3
EXIT_NONCONVERGED = 4

log = logging.getLogger("evsched")


def _fsnr(text: str) -> float:
    if text.lower() in ("inf", "+inf"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"FSNR must be a number of dB or 'inf', got {text!r}")


def _emit_json(obj):
    json.dump(obj, sys.stdout, indent=2, default=float)
    sys.stdout.write("\n")


def cmd_solve(args) -> int:
    s = load_scenario(args.scenario)
    noise = ForecastNoise(args.fsnr, seed=args.seed)
    profile, metrics = run_cell(args.policy, s, noise, seed=args.seed,
                                rect_power=args.rect_power, max_rounds=args.max_rounds)
    if args.out:
        write_profile(profile, args.out)
        _emit_json({"policy": args.policy, **asdict(metrics)})
    else:
        write_profile(profile, sys.stdout)
        log.info("metrics: %s", asdict(metrics))
    return EXIT_OK


def cmd_simulate(args) -> int:
    s = load_scenario(args.scenario)
    profile = read_profile(args.profile, s.delta_h, shape=(s.I, s.T))
    _, trace = total_cost(profile, s)
    u = s.per_unit(profile.sum_load)
    write_trace(u, trace, args.out if args.out else sys.stdout)
    if args.out:
        _emit_json(asdict(evaluate(profile, s)))
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = RunSpec.from_file(args.spec)
    rows = compare_policies(spec)
    text = format_comparison(rows)
    out = args.out or (spec.base_dir / spec.out if spec.out else None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check(args) -> int:
    s = load_scenario(args.scenario)
    convex, margin = check_convexity(s)
    feasible, report = check_feasibility(s)
    _emit_json({"convex": convex, "convexity_margin": margin, "feasible": feasible,
                "uniform_profile": report.summary()})
    return EXIT_OK if (convex and feasible) else EXIT_INFEASIBLE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="evsched", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="schedule one scenario with one policy")
    p.add_argument("--scenario", required=True)
    p.add_argument("--policy", choices=POLICIES, default="central")
    p.add_argument("--fsnr", type=_fsnr, default=math.inf, help="forecast SNR in dB, or 'inf'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="profile CSV (ev,slot,kw); metrics JSON then goes to stdout")
    p.add_argument("--rect-power", type=float)
    p.add_argument("--max-rounds", type=int, default=50)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="hot-spot trace of a given profile")
    p.add_argument("--scenario", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--out", help="trace CSV; metrics JSON then goes to stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="compare policies as described by a run-spec YAML")
    p.add_argument("--spec", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="convexity and feasibility report")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001
        code = _code_for(exc)
        if code is None:
            raise
        log.error("%s", exc)
        return code


def _code_for(exc):
    cause = exc
    while cause is not None:
        if isinstance(cause, InfeasibleError):
            return EXIT_INFEASIBLE
        if isinstance(cause, ConvergenceError):
            return EXIT_NONCONVERGED
        if isinstance(cause, (ScenarioError, NonConvexError)):
            return EXIT_INVALID
        cause = cause.__cause__
    return None


if __name__ == "__main__":
    sys.exit(main())
