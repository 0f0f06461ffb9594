"""Command-line entry point: ``rnlshrink {estimate,simulate,backtest}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical or
convergence error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import EstimationError, InvalidInputError, NonConvergenceError
from .estimators import ESTIMATOR_NAMES, run_estimator
from .numkit import read_matrix, write_matrix
from .portfolio import BacktestConfig, ReturnPanel, rolling_backtest
from .rnl import DEFAULT_EPS, DEFAULT_MAX_ITER
from .simlab import ScenarioConfig, run_scenario

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

SEED_ENV = "RNLSHRINK_SEED"

log = logging.getLogger("rnlshrink")


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _unit_interval(text: str) -> float:
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rnlshrink",
        description="Robust nonlinear shrinkage of dispersion matrices, PRIAL simulations and GMV backtests.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for per-iteration traces")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate a covariance/dispersion matrix from an n x p CSV")
    est.add_argument("data", type=Path, help="CSV (no header) with observations in rows, or a JSON array of rows")
    est.add_argument("-m", "--method", choices=ESTIMATOR_NAMES, default="rnl", help="estimator (default: rnl)")
    est.add_argument("-o", "--output", type=Path, required=True, help="output matrix (.csv or .json); metadata goes to <stem>.meta.json")
    est.add_argument("--demean", action="store_true", help="remove column means first (QIS then uses n - 1)")
    est.add_argument("--eps", type=_positive_float, default=DEFAULT_EPS, help="eigenvector-iteration tolerance (default: 1e-10)")
    est.add_argument("--max-iter", type=_positive_int, default=DEFAULT_MAX_ITER, help="iteration cap for iterative methods (default: 1000)")
    est.add_argument("--tol", type=_positive_float, default=1e-8, help="Tyler fixed-point tolerance, scaled by p (default: 1e-8)")
    est.add_argument("--rho", type=_unit_interval, default=None, help="shrinkage intensity in (0, 1], required for method rls")

    sim = sub.add_parser("simulate", help="run a Monte-Carlo PRIAL scenario from a key=value config file")
    sim.add_argument("config", type=Path, help="scenario file with keys: " + ", ".join(
        ("structure", "p", "n", "nu", "replications", "seed", "estimators", "rho", "eps", "max_iter")))
    sim.add_argument("-o", "--output", type=Path, default=None, help="PRIAL CSV path (default: standard output)")
    sim.add_argument("--seed", type=int, default=None, help=f"override the config seed (fallback: ${SEED_ENV}, then 0)")
    sim.add_argument("-j", "--jobs", type=_positive_int, default=1, help="worker processes; results do not depend on it")

    bt = sub.add_parser("backtest", help="rolling-window GMV backtest on a daily return panel")
    bt.add_argument("returns", type=Path, help="CSV: header of asset ids, first column ISO dates, decimal returns, empty = missing")
    bt.add_argument("--caps", type=Path, default=None, help="market caps CSV with the same shape (selects the top-p universe)")
    bt.add_argument("-m", "--method", choices=ESTIMATOR_NAMES, default="rcnl", help="estimator (default: rcnl)")
    bt.add_argument("--window", type=_positive_int, default=252, help="estimation window in days (default: 252; 1260 also used)")
    bt.add_argument("--hold", type=_positive_int, default=21, help="holding period in days (default: 21)")
    bt.add_argument("-p", "--universe", type=int, default=100, help="number of assets per month (default: 100)")
    bt.add_argument("--max-missing", type=int, default=32, help="missing days allowed in the window (default: 32)")
    bt.add_argument("--rho", type=_unit_interval, default=None, help="shrinkage intensity for method rls")
    bt.add_argument("--report", type=Path, default=None, help="JSON report path (default: standard output)")
    bt.add_argument("--summary", type=Path, default=None, help="CSV summary path")
    return parser


def cmd_estimate(args: argparse.Namespace) -> int:
    Y = read_matrix(args.data)
    t0 = time.perf_counter()
    matrix, info = run_estimator(
        args.method, Y, demean=args.demean, rho=args.rho, eps=args.eps, max_iter=args.max_iter, tol=args.tol
    )
    info["seconds"] = time.perf_counter() - t0
    info["trace"] = float(np.trace(matrix))
    info["demean"] = args.demean
    write_matrix(args.output, matrix)
    meta = args.output.with_name(args.output.stem + ".meta.json")
    meta.write_text(json.dumps(info, indent=2) + "\n")
    log.info("wrote %s and %s", args.output, meta)
    return EXIT_OK


def _default_seed() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise InvalidInputError(f"${SEED_ENV} must be an integer, got {raw!r}") from None


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = ScenarioConfig.from_file(args.config, default_seed=_default_seed())
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    log.info("scenario %s", cfg)
    table = run_scenario(cfg, jobs=args.jobs)
    for row in table.rows:
        if row.failures:
            log.warning("%s at nu=%s failed in %d replications", row.estimator, row.nu, row.failures)
    text = table.to_csv(args.output)
    if args.output is None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_backtest(args: argparse.Namespace) -> int:
    panel = ReturnPanel.from_csv(args.returns, args.caps)
    cfg = BacktestConfig(
        estimation_window=args.window,
        holding_period=args.hold,
        p=args.universe,
        max_missing=args.max_missing,
        estimator=args.method,
        rho=args.rho,
    )
    report = rolling_backtest(panel, cfg)
    text = report.to_json(args.report)
    if args.report is None:
        sys.stdout.write(text + "\n")
    if args.summary is not None:
        report.to_csv(args.summary)
    if report.flagged:
        log.warning("%d of %d months fell back to equal weights", report.flagged, len(report.months))
    return EXIT_OK


COMMANDS = {"estimate": cmd_estimate, "simulate": cmd_simulate, "backtest": cmd_backtest}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (NonConvergenceError, EstimationError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"rnlshrink: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidInputError, ValueError, OSError) as exc:
        print(f"rnlshrink: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
