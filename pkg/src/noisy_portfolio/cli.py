"""Command line interface: ``noisy-portfolio <command> ...``.

Exit status is 0 on success, 2 on a configuration error and 3 when
``--check`` finds a result outside its expected range. ``NP_SEED`` in the
environment overrides every base seed.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from typing import Optional, Sequence

from .core import ContractViolation
from .harness import (
    ConfigError,
    budget_shift_experiment,
    lag_necessity_experiment,
    load_config,
    run_experiment,
)
from .portfolio import PowerLawSchedule, schedule_validity

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3


def _seed(default: int) -> int:
    value = os.environ.get("NP_SEED")
    if value is None or value.strip() == "":
        return default
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"NP_SEED must be an integer, got {value!r}") from None


def _number(text: str) -> float:
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


def _cmd_run(args) -> int:
    config = load_config(args.config)
    config = config.with_seed(_seed(config.base_seed))
    if args.dense:
        from dataclasses import replace
        config = replace(config, dense=True)
    start = time.perf_counter()
    result = run_experiment(config, workers=args.workers, output=args.output)
    elapsed = time.perf_counter() - start
    print(result.table)
    evals = sum(t.final.total for t in result.traces)
    print(f"{len(result.traces)} runs, {evals} evaluations, {elapsed:.1f} s")
    for path in result.paths[-1:]:
        print(f"aggregate written to {path}")
    if args.check:
        mean = result.row.mean_slope
        lo = -math.inf if config.check_min is None else config.check_min
        hi = math.inf if config.check_max is None else config.check_max
        ok = lo <= mean <= hi
        print(f"check: mean slope {mean:.4f} in [{lo}, {hi}]: {'PASS' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_CHECK
    return EXIT_OK


def _cmd_lag(args) -> int:
    report = lag_necessity_experiment(args.e, args.beta, args.nmax, args.reps, lag=args.lag,
                                      n_min=args.nmin, seed=_seed(args.seed))
    print(report)
    if args.check:
        ok = True
        if args.expect_min is not None:
            ok &= report.frequency >= args.expect_min
        if args.expect_max is not None:
            ok &= report.frequency < args.expect_max
        print(f"check: {'PASS' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_CHECK
    return EXIT_OK


def _cmd_shift(args) -> int:
    schedule = PowerLawSchedule(args.a, args.b, args.lag)
    report = budget_shift_experiment(args.m, args.solver, args.problem, schedule, int(args.budget),
                                     args.reps, seed=_seed(args.seed))
    print(report)
    if args.check:
        log_m = math.log(args.m)
        ok = (0.7 * log_m <= report.nopa_deepest <= 1.4 * log_m
              and report.inopa_deepest < report.nopa_deepest)
        print(f"check: NOPA {report.nopa_deepest:.3f} in [{0.7 * log_m:.3f}, {1.4 * log_m:.3f}], "
              f"INOPA {report.inopa_deepest:.3f} < NOPA: {'PASS' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_CHECK
    return EXIT_OK


def _cmd_validate(args) -> int:
    report = schedule_validity(PowerLawSchedule(args.a, args.b, args.lag), args.alpha_star)
    print(report)
    if args.check and not report.all_passed:
        return EXIT_CHECK
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisy-portfolio",
                                     description="Noisy optimisation solvers and portfolios.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    run.add_argument("--output", help="directory for CSV output (overrides the config)")
    run.add_argument("--dense", action="store_true", help="record regret after every evaluation")
    run.add_argument("--check", action="store_true", help="exit 3 if the mean slope is out of range")
    run.set_defaults(func=_cmd_run)

    lag = sub.add_parser("lag-necessity", help="misranking frequency with and without a lag")
    lag.add_argument("--e", type=float, default=0.25)
    lag.add_argument("--beta", type=float, default=1.0)
    lag.add_argument("--nmax", type=int, default=200)
    lag.add_argument("--nmin", type=int, default=10)
    lag.add_argument("--reps", type=int, default=100)
    lag.add_argument("--lag", default=None, help="lag function, e.g. pow:0.25 (default: none)")
    lag.add_argument("--seed", type=int, default=0)
    lag.add_argument("--check", action="store_true")
    lag.add_argument("--expect-min", type=float, default=None)
    lag.add_argument("--expect-max", type=float, default=None)
    lag.set_defaults(func=_cmd_lag)

    shift = sub.add_parser("shift", help="budget offset of portfolios of identical solvers")
    shift.add_argument("--m", type=int, default=4)
    shift.add_argument("--solver", default="fabian1")
    shift.add_argument("--problem", default="sphere-d2-z0")
    shift.add_argument("--budget", type=float, default=1e5, help="evaluations for the solo run")
    shift.add_argument("--reps", type=int, default=20)
    shift.add_argument("--a", type=_number, default=4.2)
    shift.add_argument("--b", type=_number, default=2.2)
    shift.add_argument("--lag", default="pow:1/4.2")
    shift.add_argument("--seed", type=int, default=0)
    shift.add_argument("--check", action="store_true")
    shift.set_defaults(func=_cmd_shift)

    val = sub.add_parser("validate-schedule", help="check a power-law schedule")
    val.add_argument("--a", type=_number, required=True)
    val.add_argument("--b", type=_number, required=True)
    val.add_argument("--lag", default="none")
    val.add_argument("--alpha-star", type=float, default=1.0)
    val.add_argument("--check", action="store_true", help="exit 3 if any condition fails")
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ContractViolation) as exc:
        print(f"noisy-portfolio: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
