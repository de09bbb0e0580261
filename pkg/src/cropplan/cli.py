"""Command-line experiment driver.

Subcommands: run-online, run-offline, run-oracle, run-compare, sweep,
validate, synth-prices. Flags mirror the experiment configuration; a JSON
config file may supply any field, with flags taking precedence.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import sys
from pathlib import Path

from . import experiments
from .catalog import load_catalog
from .experiments import ExperimentConfig, ExperimentError
from .market import load_price_spec, synth_prices, write_prices

CONFIG_FIELDS = {
    "catalog_path": Path,
    "prices_path": Path,
    "price_spec_path": Path,
    "price_seed": int,
    "start_date": dt.date.fromisoformat,
    "step_days": int,
    "horizon": int,
    "theta": float,
    "gamma": float,
    "violation_penalty": float,
    "trials": int,
    "seed_base": int,
    "alpha": float,
    "forecast_history_windows": int,
    "output_dir": Path,
    "figures": bool,
}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON file supplying any config field")
    parser.add_argument("--catalog", dest="catalog_path", type=Path, help="crop catalog file")
    parser.add_argument("--prices", dest="prices_path", type=Path, help="price CSV")
    parser.add_argument(
        "--price-spec", dest="price_spec_path", type=Path,
        help="synthetic price generator spec (used when --prices is absent)",
    )
    parser.add_argument("--price-seed", dest="price_seed", type=int, help="synthetic price seed")
    parser.add_argument(
        "--start-date", dest="start_date", type=dt.date.fromisoformat,
        help="override the catalog's start date (ISO-8601)",
    )
    parser.add_argument("--step-days", dest="step_days", type=int, help="days per timestep")
    parser.add_argument("--horizon", type=int, help="number of timesteps")
    parser.add_argument("--theta", type=float, help="smoothing weight on the last observation")
    parser.add_argument("--gamma", type=float, help="discount factor")
    parser.add_argument(
        "--penalty", dest="violation_penalty", type=float, help="constraint violation penalty"
    )
    parser.add_argument("--trials", type=int, help="number of seeded trials")
    parser.add_argument("--seed-base", dest="seed_base", type=int, help="seed of trial 0")
    parser.add_argument("--alpha", type=float, help="forecast smoothing constant")
    parser.add_argument(
        "--history-windows", dest="forecast_history_windows", type=int,
        help="pre-start windows used to fit the price forecast",
    )
    parser.add_argument("--out", dest="output_dir", type=Path, help="output directory")
    parser.add_argument(
        "--no-figures", dest="figures", action="store_false", default=None,
        help="skip figure rendering",
    )


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge defaults, config file, and flags (flags win)."""
    merged: dict = {}
    if args.config is not None:
        raw = json.loads(Path(args.config).read_text())
        if not isinstance(raw, dict):
            raise ExperimentError(f"{args.config}: config must be a JSON object")
        for key, value in raw.items():
            if key not in CONFIG_FIELDS:
                raise ExperimentError(f"{args.config}: unknown config field {key!r}")
            if value is not None:
                convert = CONFIG_FIELDS[key]
                merged[key] = bool(value) if convert is bool else convert(value)
    for key in CONFIG_FIELDS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return ExperimentConfig(**merged)


def _print_summary(summary: dict) -> None:
    if "trials" in summary:
        for rec in summary["trials"]:
            print(
                f"trial {rec['trial']:2d} seed {rec['seed']:4d} "
                f"start {rec['initial_crop']:<16s} revenue {rec['cumulative_revenue']:.2f} "
                f"violations {rec['violations']}"
            )
        print(f"mean cumulative revenue: {summary['mean_cumulative_revenue']:.2f}")
    if "mean_final_regret" in summary:
        mean = summary["mean_final_regret"]
        print(f"mean final regret: online {mean['online']:.2f}, offline {mean['offline']:.2f}")
        pct = summary["final_regret_difference_pct_of_offline"]
        if pct is not None:
            print(f"difference: {summary['final_regret_difference']:.2f} ({pct:+.1f}% of offline)")


def _cmd_run(args: argparse.Namespace) -> int:
    config = build_config(args)
    runner = {
        "run-online": experiments.run_online,
        "run-offline": experiments.run_offline,
        "run-oracle": experiments.run_oracle,
        "run-compare": experiments.run_compare,
    }[args.command]
    summary = runner(config)
    _print_summary(summary)
    print(f"outputs written to {config.output_dir}")
    return 0


def _parse_sweep_values(parameter: str, text: str) -> list:
    items = [chunk.strip() for chunk in text.split(",") if chunk.strip()]
    if not items:
        raise ExperimentError("sweep needs at least one value")
    if parameter == "step_days":
        return [int(chunk) for chunk in items]
    return [float(chunk) for chunk in items]


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = build_config(args)
    values = _parse_sweep_values(args.parameter, args.values)
    result = experiments.sweep(config, args.parameter, values)
    print(f"sweep table: {result['csv']}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    config = build_config(args)
    catalog_path = config.catalog_path or experiments.fixture_catalog_path()
    catalog = load_catalog(catalog_path, step_days=config.step_days)
    if config.start_date is not None:
        import dataclasses

        catalog = dataclasses.replace(catalog, start_date=config.start_date)
    failures = 0
    for path in args.trajectories:
        try:
            n = experiments.replay_trajectory_csv(path, catalog)
        except (ExperimentError, ValueError) as exc:
            print(f"FAIL {path}: {exc}", file=sys.stderr)
            failures += 1
        else:
            print(f"ok   {path}: {n} steps replay cleanly")
    return 1 if failures else 0


def _cmd_synth_prices(args: argparse.Namespace) -> int:
    spec_path = args.price_spec_path or experiments.fixture_price_spec_path()
    spec = load_price_spec(spec_path)
    series = synth_prices(args.seed, spec, args.date_from, args.date_to)
    write_prices(series, args.out_file)
    print(f"wrote {series.n_observations} observations to {args.out_file}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cropplan",
        description="Greenhouse crop rotation planning experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("run-online", "seeded online re-planning trials"),
        ("run-offline", "offline plan against the smoothed price forecast"),
        ("run-oracle", "offline plan with perfect price knowledge"),
        ("run-compare", "online, offline, and oracle on identical inputs"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_config_flags(p)
        p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run one parameter over a value list")
    _add_config_flags(p)
    p.add_argument("--parameter", required=True, choices=experiments.SWEEP_PARAMETERS)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate", help="replay trajectory CSVs against the transition rules")
    _add_config_flags(p)
    p.add_argument("trajectories", nargs="+", type=Path)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("synth-prices", help="generate a synthetic price CSV")
    p.add_argument("--price-spec", dest="price_spec_path", type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--from", dest="date_from", type=dt.date.fromisoformat, required=True)
    p.add_argument("--to", dest="date_to", type=dt.date.fromisoformat, required=True)
    p.add_argument("--out-file", type=Path, required=True)
    p.set_defaults(func=_cmd_synth_prices)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
