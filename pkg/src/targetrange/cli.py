"""Command-line front door: solve, sweep, validate, simulate, ingest-check.

Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 I/O
failure.  All outputs embed the config hash and seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig
from .evaluate import (
    frontier,
    sensitivity_sweep,
    write_frontier_csv,
    write_histogram_csv,
    write_percentile_csv,
    write_stats_csv,
)
from .market import CalibrationError, IngestError, IngestOptions, ingest_csv, save_scenarios
from .pipeline import build_model, build_scenarios, solve_from_config
from .regression import FitError
from .solver import SolverError, save_policy
from .specfun import ConvergenceError

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_yaml(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, out_dir=args.out)
    cfg.validate()
    return cfg


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def cmd_solve(args) -> int:
    cfg = _load_config(args)
    result = solve_from_config(cfg, out_of_sample=args.oos)
    h = cfg.config_hash()
    write_stats_csv(_out_path(cfg, "stats.csv"), result.report, h, cfg.seed)
    write_histogram_csv(_out_path(cfg, "histogram.csv"), result.distribution, h)
    write_percentile_csv(_out_path(cfg, "percentiles.csv"), result.distribution, h)
    save_policy(_out_path(cfg, "policy.npz"), result.policy)
    r = result.report
    loc = f"{r.location_ratio:.4f}" if np.isfinite(r.location_ratio) else "n/a"
    print(
        f"v0={r.v0_estimate:.6g} E={r.mean:.6g} SD={r.std:.6g} "
        f"P[W<1]={r.downside_prob:.4f} R={loc}"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    h = cfg.config_hash()
    if args.frontier_strs or args.frontier_crra:
        points = []
        if args.frontier_strs:
            pairs = [tuple(map(float, p.split(":"))) for p in args.frontier_strs.split(",")]
            points += frontier(cfg, "strs", pairs)
        if args.frontier_crra:
            gammas = [float(g) for g in args.frontier_crra.split(",")]
            points += frontier(cfg, "crra", gammas)
        write_frontier_csv(_out_path(cfg, "frontier.csv"), points, h, cfg.seed)
        print(f"frontier: {len(points)} points -> {_out_path(cfg, 'frontier.csv')}")
        return EXIT_OK
    if not args.values:
        raise ConfigError("sweep: provide --values (or a frontier flag)")
    values = [None if v in ("inf", "none") else float(v) for v in args.values.split(",")]
    rows = sensitivity_sweep(cfg, args.vary, values)
    path = _out_path(cfg, "sweep.csv")
    write_frontier_csv(path, rows, h, cfg.seed)
    print(f"sweep over {args.vary}: {len(rows)} rows -> {path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load_config(args)
    h = cfg.config_hash()
    rows = []
    for mode in ("classical_direct", "two_stage_const_sigma", "two_stage_state_sigma"):
        mode_cfg = dataclasses.replace(cfg, mode=mode)
        result = solve_from_config(mode_cfg, out_of_sample=args.oos)
        rows.append((mode, result.report))
    path = _out_path(cfg, "validate.csv")
    write_frontier_csv(path, rows, h, cfg.seed)
    for mode, r in rows:
        print(f"{mode}: v0={r.v0_estimate:.6g} E={r.mean:.6g} SD={r.std:.6g}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    model = build_model(cfg)
    scenarios = build_scenarios(cfg, model)
    path = _out_path(cfg, "scenarios.npz")
    save_scenarios(path, scenarios)
    print(
        f"{scenarios.n_paths} paths x {scenarios.n_periods} periods x "
        f"{scenarios.n_assets} assets -> {path}"
    )
    return EXIT_OK


def cmd_ingest_check(args) -> int:
    cfg = _load_config(args)
    if cfg.data.csv_path is None:
        raise ConfigError("ingest-check requires a csv data source in the config")
    table = ingest_csv(
        cfg.data.csv_path,
        IngestOptions(price_columns=cfg.data.price_columns, drop_gaps=cfg.data.drop_gaps),
    )
    print(
        f"{cfg.data.csv_path}: {table.log_returns.shape[0]} rows, "
        f"{table.n_series} series: {', '.join(table.series_names)}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="targetrange",
        description="Multi-period target-range portfolio optimization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, default=1, help="worker count (reserved)")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--oos", action="store_true", help="evaluate out-of-sample")

    p = sub.add_parser("solve", help="solve and evaluate one configuration")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="bound sensitivity sweep or efficient frontier")
    common(p)
    p.add_argument("--vary", choices=["upper", "lower"], default="upper")
    p.add_argument("--values", help="comma-separated bound values; 'inf' allowed")
    p.add_argument("--frontier-strs", help="comma-separated lower:upper pairs")
    p.add_argument("--frontier-crra", help="comma-separated gamma values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="compare regression modes on one configuration")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="calibrate and simulate scenarios only")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest-check", help="parse and report the configured CSV")
    common(p)
    p.set_defaults(func=cmd_ingest_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, FitError, ConvergenceError, CalibrationError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (IngestError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
