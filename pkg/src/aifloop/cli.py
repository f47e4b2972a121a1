"""Command-line front end.

Subcommands: run, sweep-horizon, compare, fit-ckm, show-ckm.
Exit codes: 0 success, 2 config error, 3 numerical degeneracy, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .ckm import fit_grid, load_grid, load_samples_csv, save_grid
from .config import POLICIES, load_config
from .errors import CkmFormatError, ConfigError, ContractViolation, NumericalDegeneracy
from .harness import (
    compare_policies,
    export,
    run_many,
    summarize,
    summary_means,
    sweep_horizon,
    _fmt,
    _summary_csv,
)


def _parse_seed_list(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in raw.split(",") if part.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"bad seed list {raw!r}: {exc}") from exc


def _parse_int_list(raw: str, what: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in raw.split(",") if part.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"bad {what} list {raw!r}: {exc}") from exc
    if not values:
        raise ConfigError(f"empty {what} list")
    return values


def _cmd_run(args) -> None:
    config = load_config(args.config)
    seeds = _parse_seed_list(args.seeds) if args.seeds else None
    logs = run_many(config, seeds=seeds, policy=args.policy, horizon=args.horizon)
    written = export(logs, args.format, args.out)
    for path in written:
        print(path)


def _cmd_compare(args) -> None:
    config = load_config(args.config)
    seeds = _parse_seed_list(args.seeds) if args.seeds else None
    by_policy = compare_policies(config, seeds=seeds)
    os.makedirs(args.out, exist_ok=True)
    all_logs = []
    for policy in POLICIES:
        all_logs.extend(by_policy[policy])
    for path in export(all_logs, args.format, args.out):
        print(path)
    # Policy-level comparison table (means over seeds).
    lines = ["policy," + ",".join(_COMPARISON_FIELDS)]
    for policy in POLICIES:
        means = summary_means(by_policy[policy])
        lines.append(policy + "," + ",".join(_fmt(means[f]) for f in _COMPARISON_FIELDS))
    path = os.path.join(args.out, "comparison.csv")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(path)


_COMPARISON_FIELDS = (
    "sum_j_est",
    "sum_j_ctrl",
    "sum_j_sens",
    "total_j",
    "total_j_window",
    "mean_efe",
)


def _cmd_sweep_horizon(args) -> None:
    config = load_config(args.config)
    seeds = _parse_seed_list(args.seeds) if args.seeds else None
    policies = tuple(args.policies.split(",")) if args.policies else ("aif",)
    for policy in policies:
        if policy not in POLICIES:
            raise ConfigError(f"unknown policy {policy!r} in --policies")
    horizons = tuple(range(1, args.max_horizon + 1))
    results = sweep_horizon(config, horizons, policies=policies, seeds=seeds)
    os.makedirs(args.out, exist_ok=True)
    written = []
    lines = ["policy,horizon,mean_total_j,std_total_j,mean_total_j_window,mean_efe"]
    for policy in policies:
        for horizon in horizons:
            logs = results[(policy, horizon)]
            path = os.path.join(args.out, f"sweep_{policy}_T{horizon}.csv")
            with open(path, "w") as fh:
                fh.write(_summary_csv(logs))
            written.append(path)
            totals = [log.aggregates.total_j for log in logs]
            mean_j = sum(totals) / len(totals)
            std_j = (sum((v - mean_j) ** 2 for v in totals) / len(totals)) ** 0.5
            means = summary_means(logs)
            lines.append(
                ",".join(
                    [policy, str(horizon), _fmt(mean_j), _fmt(std_j),
                     _fmt(means["total_j_window"]), _fmt(means["mean_efe"])]
                )
            )
    path = os.path.join(args.out, "sweep_summary.csv")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    written.append(path)
    for p in written:
        print(p)


def _cmd_fit_ckm(args) -> None:
    samples = load_samples_csv(args.samples)
    bounds = (args.x_min, args.x_max, args.y_min, args.y_max)
    grid = fit_grid(samples, bounds, (args.nx, args.ny), _parse_int_list(args.k, "k"))
    save_grid(grid, args.out)
    print(args.out)


def _cmd_show_ckm(args) -> None:
    grid = load_grid(args.grid)
    x_min, x_max, y_min, y_max = grid.bounds
    n_x, n_y = grid.resolution
    step_x = (x_max - x_min) / n_x
    step_y = (y_max - y_min) / n_y
    lines = ["x,y,k,var_x,var_y"]
    for k in grid.k_values:
        plane = grid.log_grids[k]
        for iy in range(n_y):
            cy = y_min + (iy + 0.5) * step_y
            for ix in range(n_x):
                cx = x_min + (ix + 0.5) * step_x
                lines.append(
                    ",".join(
                        [_fmt(cx), _fmt(cy), str(k),
                         _fmt(float(np.exp(plane[0, iy, ix]))),
                         _fmt(float(np.exp(plane[1, iy, ix])))]
                    )
                )
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aifloop",
        description="Closed-loop active-inference control and sensing allocation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run episodes for one policy and export logs")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")
    p_run.add_argument("--policy", choices=POLICIES, default=None)
    p_run.add_argument("--seeds", default=None, help="comma-separated seed override")
    p_run.add_argument("--horizon", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="run every policy over the same seeds")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--out", required=True)
    p_cmp.add_argument("--format", choices=("csv", "json"), default="csv")
    p_cmp.add_argument("--seeds", default=None)
    p_cmp.set_defaults(func=_cmd_compare)

    p_swp = sub.add_parser("sweep-horizon", help="cost versus planning horizon")
    p_swp.add_argument("--config", required=True)
    p_swp.add_argument("--out", required=True)
    p_swp.add_argument("--max-horizon", type=int, default=10)
    p_swp.add_argument("--policies", default=None, help="comma-separated policy list")
    p_swp.add_argument("--seeds", default=None)
    p_swp.set_defaults(func=_cmd_sweep_horizon)

    p_fit = sub.add_parser("fit-ckm", help="fit a raster variance map from samples CSV")
    p_fit.add_argument("--samples", required=True)
    p_fit.add_argument("--out", required=True)
    p_fit.add_argument("--x-min", type=float, required=True)
    p_fit.add_argument("--x-max", type=float, required=True)
    p_fit.add_argument("--y-min", type=float, required=True)
    p_fit.add_argument("--y-max", type=float, required=True)
    p_fit.add_argument("--nx", type=int, required=True)
    p_fit.add_argument("--ny", type=int, required=True)
    p_fit.add_argument("--k", required=True, help="comma-separated allocation set")
    p_fit.set_defaults(func=_cmd_fit_ckm)

    p_show = sub.add_parser("show-ckm", help="dump a grid file as a CSV raster")
    p_show.add_argument("--grid", required=True)
    p_show.add_argument("--out", required=True)
    p_show.set_defaults(func=_cmd_show_ckm)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, CkmFormatError, ContractViolation) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalDegeneracy as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
