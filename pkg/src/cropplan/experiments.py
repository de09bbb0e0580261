"""Experiment orchestration: seeded trials, method runners, file outputs.

Everything the CLI does lives here as plain functions so tests can drive
experiments without spawning processes. All CSV outputs are deterministic
functions of (config, seeds, input data); wall-clock timings go only into
the JSON summaries.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import (
    CropCatalog,
    fixture_catalog_path,
    fixture_price_spec_path,
    harvestable_within_season,
    load_catalog,
)
from .fwl import FwlConfig, PlanCache, Trajectory, fwl_run
from .market import (
    PriceSeries,
    RevenueOracle,
    load_price_spec,
    load_prices,
    synth_prices,
)
from .mdp import PLANT, Action, FarmMDP, State, transition
from .metrics import RegretSeries, RuntimeProfile, cumulative_revenue, dynamic_regret
from .offline import offline_plan, offline_rollout, ses_revenue_source, time_expand


class ExperimentError(ValueError):
    """Raised for unusable experiment configurations or inputs."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment's knobs; None paths fall back to packaged fixtures.

    start_date and step_days default to the catalog file's own values.
    """

    catalog_path: Path | None = None
    prices_path: Path | None = None
    price_spec_path: Path | None = None
    price_seed: int = 0
    start_date: dt.date | None = None
    step_days: int | None = None
    horizon: int = 26
    theta: float = 0.5
    gamma: float = 0.95
    violation_penalty: float = -1e5
    trials: int = 10
    seed_base: int = 0
    alpha: float = 0.5
    forecast_history_windows: int = 26
    output_dir: Path = Path("runs")
    figures: bool = True

    def __post_init__(self):
        if self.horizon < 1:
            raise ExperimentError(f"horizon must be >= 1, got {self.horizon}")
        if self.trials < 1:
            raise ExperimentError(f"trials must be >= 1, got {self.trials}")
        if self.forecast_history_windows < 1:
            raise ExperimentError(
                f"forecast_history_windows must be >= 1, got {self.forecast_history_windows}"
            )


@dataclass(frozen=True)
class ExperimentContext:
    """Loaded, validated inputs shared by all methods of one experiment."""

    config: ExperimentConfig
    catalog: CropCatalog
    series: PriceSeries
    oracle: RevenueOracle
    model: FarmMDP


def build_context(config: ExperimentConfig) -> ExperimentContext:
    """Load catalog and prices, synthesize prices if only a spec is given."""
    catalog_path = config.catalog_path or fixture_catalog_path()
    catalog = load_catalog(catalog_path, step_days=config.step_days)
    if config.start_date is not None:
        catalog = dataclasses.replace(catalog, start_date=config.start_date)

    if config.prices_path is not None:
        series = load_prices(config.prices_path)
    else:
        spec_path = config.price_spec_path or fixture_price_spec_path()
        spec = load_price_spec(spec_path)
        first = catalog.timestep_date(-(config.forecast_history_windows + 1))
        last = catalog.timestep_date(config.horizon + 1)
        series = synth_prices(config.price_seed, spec, first, last)

    for crop in catalog.crops:
        if not series.has_crop(crop.id):
            raise ExperimentError(f"no price data for crop {crop.id!r}")

    oracle = RevenueOracle(series=series, catalog=catalog)
    return ExperimentContext(
        config=config,
        catalog=catalog,
        series=series,
        oracle=oracle,
        model=FarmMDP.from_catalog(catalog),
    )


def eligible_initial_crops(catalog: CropCatalog) -> list[str]:
    """Crops that can be newly planted at the start and reach maturity in season."""
    ids = [c.id for c in catalog.crops if harvestable_within_season(catalog, c.id, 0)]
    if not ids:
        raise ExperimentError("no crop is plantable at the start date")
    return ids


def trial_initial_state(catalog: CropCatalog, seed: int) -> State:
    """Seeded uniform draw of a newly planted crop."""
    ids = eligible_initial_crops(catalog)
    rng = np.random.default_rng(seed)
    crop_id = ids[int(rng.integers(len(ids)))]
    return State(crop_id, 1, catalog.crop(crop_id).lifespan, False)


@dataclass
class MethodResult:
    """All trials of one method plus its timing record."""

    name: str
    trajectories: list[Trajectory]
    profile: RuntimeProfile
    wall_seconds: float
    initial_seeds: list[int]


def run_online_trials(ctx: ExperimentContext, true_stages: dict | None = None) -> MethodResult:
    """The re-planning loop, all trials, sharing one per-timestep plan cache."""
    cfg = ctx.config
    cache = PlanCache(model=ctx.model, stages=true_stages if true_stages is not None else {})
    profile = RuntimeProfile()
    trajectories = []
    seeds = [cfg.seed_base + i for i in range(cfg.trials)]
    start = time.perf_counter()
    for seed in seeds:
        fwl_config = FwlConfig(
            theta=cfg.theta,
            gamma=cfg.gamma,
            violation_penalty=cfg.violation_penalty,
            horizon=cfg.horizon,
            initial_state=trial_initial_state(ctx.catalog, seed),
            seed=seed,
        )
        trajectories.append(
            fwl_run(fwl_config, ctx.catalog, ctx.oracle, plan_cache=cache, profile=profile)
        )
    return MethodResult(
        name="online",
        trajectories=trajectories,
        profile=profile,
        wall_seconds=time.perf_counter() - start,
        initial_seeds=seeds,
    )


def run_offline_trials(
    ctx: ExperimentContext,
    revenue_source_kind: str,
    true_stages: dict | None = None,
) -> MethodResult:
    """One full-horizon plan, rolled out from each trial's initial state.

    ``revenue_source_kind`` is "forecast" (smoothed price level) or "oracle"
    (true prices; the perfect-information reference).
    """
    cfg = ctx.config
    if revenue_source_kind == "forecast":
        source = ses_revenue_source(ctx.oracle, cfg.alpha, cfg.forecast_history_windows)
        plan_stages: dict = {}
        name = "offline"
    elif revenue_source_kind == "oracle":
        source = ctx.oracle
        plan_stages = true_stages if true_stages is not None else {}
        name = "oracle"
    else:
        raise ExperimentError(f"unknown revenue source kind {revenue_source_kind!r}")

    if true_stages is None:
        true_stages = {}
    profile = RuntimeProfile()
    start = time.perf_counter()
    expanded = time_expand(ctx.catalog, cfg.horizon, model=ctx.model)
    plan = offline_plan(
        expanded,
        source,
        cfg.gamma,
        cfg.violation_penalty,
        stage_cache=plan_stages,
        profile=profile,
    )
    trajectories = []
    seeds = [cfg.seed_base + i for i in range(cfg.trials)]
    for seed in seeds:
        initial = trial_initial_state(ctx.catalog, seed)
        trajectories.append(
            offline_rollout(
                plan,
                initial,
                ctx.oracle,
                cfg.violation_penalty,
                true_stage_cache=true_stages,
                profile=profile,
            )
        )
    return MethodResult(
        name=name,
        trajectories=trajectories,
        profile=profile,
        wall_seconds=time.perf_counter() - start,
        initial_seeds=seeds,
    )


# ---------------------------------------------------------------------------
# file output

TRAJECTORY_COLUMNS = (
    "t",
    "date",
    "crop",
    "maturity",
    "expiry",
    "state_flag",
    "action",
    "reward",
    "revenue",
    "violation",
)


def _fmt_bool(b: bool) -> str:
    return "true" if b else "false"


def _fmt_num(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(path: Path, catalog: CropCatalog, traj: Trajectory) -> None:
    """One row per executed step; the acting window's start date is recorded."""
    lines = [",".join(TRAJECTORY_COLUMNS)]
    for step in traj.steps:
        s = step.state_before
        lines.append(
            ",".join(
                [
                    str(step.t),
                    catalog.timestep_date(step.t - 1).isoformat(),
                    s.crop,
                    str(s.maturity),
                    str(s.expiry),
                    _fmt_bool(s.flag),
                    step.action.label,
                    _fmt_num(step.realized_reward),
                    _fmt_num(step.realized_revenue),
                    _fmt_bool(step.flag_raised),
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")


def parse_action_label(label: str) -> Action:
    if label.startswith("plant(") and label.endswith(")"):
        return Action(PLANT, label[len("plant(") : -1])
    return Action(label)


def replay_trajectory_csv(path: Path, catalog: CropCatalog) -> int:
    """Check consecutive rows against the transition rules; return row count.

    Raises ExperimentError naming the first inconsistent row.
    """
    import csv as _csv

    with Path(path).open(newline="") as fh:
        rows = list(_csv.DictReader(fh))
    if not rows:
        raise ExperimentError(f"{path}: empty trajectory")
    states = []
    for row in rows:
        states.append(
            State(row["crop"], int(row["maturity"]), int(row["expiry"]), row["state_flag"] == "true")
        )
    for i in range(len(rows) - 1):
        u = int(rows[i]["t"]) - 1
        succ = transition(catalog, states[i], parse_action_label(rows[i]["action"]), u)
        if succ != states[i + 1]:
            raise ExperimentError(
                f"{path}: row {i + 2}: recorded state {states[i + 1]} "
                f"does not match transition result {succ}"
            )
        if (rows[i]["violation"] == "true") != succ.flag:
            raise ExperimentError(f"{path}: row {i + 1}: violation column disagrees with rules")
    return len(rows)


def write_regret_csv(path: Path, series_by_trial: list[RegretSeries]) -> None:
    lines = ["trial,t,cumulative_regret"]
    for trial, series in enumerate(series_by_trial):
        for t, value in series.per_t:
            lines.append(f"{trial},{t},{_fmt_num(value)}")
    path.write_text("\n".join(lines) + "\n")


def _config_record(config: ExperimentConfig) -> dict:
    rec = dataclasses.asdict(config)
    for key, value in rec.items():
        if isinstance(value, (Path, dt.date)):
            rec[key] = str(value)
    return rec


def _trial_records(result: MethodResult) -> list[dict]:
    records = []
    for i, traj in enumerate(result.trajectories):
        records.append(
            {
                "trial": i,
                "seed": result.initial_seeds[i],
                "initial_crop": traj.steps[0].state_before.crop,
                "cumulative_revenue": cumulative_revenue(traj),
                "cumulative_reward": sum(s.realized_reward for s in traj.steps),
                "violations": sum(1 for s in traj.steps if s.flag_raised),
            }
        )
    return records


def _summary(config: ExperimentConfig, result: MethodResult) -> dict:
    trials = _trial_records(result)
    return {
        "method": result.name,
        "config": _config_record(config),
        "trials": trials,
        "mean_cumulative_revenue": float(np.mean([t["cumulative_revenue"] for t in trials])),
        "runtime_seconds": {
            **{k: round(v, 6) for k, v in result.profile.phases.items()},
            "wall": round(result.wall_seconds, 6),
        },
    }


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _emit_method(out: Path, catalog: CropCatalog, result: MethodResult, config) -> dict:
    for i, traj in enumerate(result.trajectories):
        write_trajectory_csv(out / f"{result.name}_trial{i:02d}.csv", catalog, traj)
    summary = _summary(config, result)
    _write_json(out / f"summary_{result.name}.json", summary)
    return summary


def _prepare_out(config: ExperimentConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# top-level experiment entry points


def run_online(config: ExperimentConfig) -> dict:
    """Seeded online trials; emits one trajectory CSV per trial plus a summary."""
    ctx = build_context(config)
    out = _prepare_out(config)
    result = run_online_trials(ctx)
    return _emit_method(out, ctx.catalog, result, config)


def run_offline(config: ExperimentConfig) -> dict:
    """Offline planner against the smoothed price forecast."""
    ctx = build_context(config)
    out = _prepare_out(config)
    result = run_offline_trials(ctx, "forecast")
    return _emit_method(out, ctx.catalog, result, config)


def run_oracle(config: ExperimentConfig) -> dict:
    """Offline planner with perfect knowledge of true prices."""
    ctx = build_context(config)
    out = _prepare_out(config)
    result = run_offline_trials(ctx, "oracle")
    return _emit_method(out, ctx.catalog, result, config)


def run_compare(config: ExperimentConfig) -> dict:
    """Online, offline-forecast, and oracle on identical inputs, plus regrets."""
    ctx = build_context(config)
    out = _prepare_out(config)
    true_stages: dict = {}
    online = run_online_trials(ctx, true_stages=true_stages)
    offline = run_offline_trials(ctx, "forecast", true_stages=true_stages)
    oracle = run_offline_trials(ctx, "oracle", true_stages=true_stages)

    summaries = {
        result.name: _emit_method(out, ctx.catalog, result, config)
        for result in (online, offline, oracle)
    }

    regrets_online = [
        dynamic_regret(subject, ref)
        for subject, ref in zip(online.trajectories, oracle.trajectories)
    ]
    regrets_offline = [
        dynamic_regret(subject, ref)
        for subject, ref in zip(offline.trajectories, oracle.trajectories)
    ]
    write_regret_csv(out / "regret_online.csv", regrets_online)
    write_regret_csv(out / "regret_offline.csv", regrets_offline)

    final_online = [series.final for series in regrets_online]
    final_offline = [series.final for series in regrets_offline]
    mean_online = float(np.mean(final_online))
    mean_offline = float(np.mean(final_offline))
    difference = mean_online - mean_offline
    percentage = None
    if abs(mean_offline) > 1e-9:
        percentage = 100.0 * difference / abs(mean_offline)

    summary = {
        "config": _config_record(config),
        "per_trial_final_regret": {
            "online": final_online,
            "offline": final_offline,
        },
        "mean_final_regret": {"online": mean_online, "offline": mean_offline},
        "final_regret_difference": difference,
        "final_regret_difference_pct_of_offline": percentage,
        "runtime_seconds": {
            name: {**{k: round(v, 6) for k, v in s["runtime_seconds"].items()}}
            for name, s in summaries.items()
        },
    }
    _write_json(out / "compare_summary.json", summary)

    if config.figures:
        from . import figures

        figures.regret_curves(
            regrets_online, regrets_offline, out / "fig_regret.png"
        )
    return summary


SWEEP_PARAMETERS = ("theta", "gamma", "step_days")


def _sweep_config(config: ExperimentConfig, parameter: str, value, base_days: int):
    if parameter == "theta":
        if not 0 <= value <= 1:
            raise ExperimentError(f"theta value {value} outside [0, 1]")
        return dataclasses.replace(config, theta=float(value))
    if parameter == "gamma":
        if not 0 <= value < 1:
            raise ExperimentError(f"gamma value {value} outside [0, 1)")
        return dataclasses.replace(config, gamma=float(value))
    if parameter == "step_days":
        step = int(value)
        if step != value or step < 1:
            raise ExperimentError(f"step_days value {value!r} must be a positive integer")
        horizon = max(1, round(base_days / step))
        return dataclasses.replace(config, step_days=step, horizon=horizon)
    raise ExperimentError(f"unknown sweep parameter {parameter!r}; pick from {SWEEP_PARAMETERS}")


def sweep(config: ExperimentConfig, parameter: str, values: list) -> dict:
    """One run set per value with shared seeds; long-format CSV plus timings.

    Rows report the online method; for step_days the offline planner also
    runs so its solve-time scaling lands in the timings JSON.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ExperimentError(f"unknown sweep parameter {parameter!r}; pick from {SWEEP_PARAMETERS}")
    if not values:
        raise ExperimentError("sweep needs at least one value")
    out = _prepare_out(config)
    base_ctx = build_context(config)
    base_days = base_ctx.catalog.step_days * config.horizon

    rows = ["parameter,value,trial,cumulative_revenue,final_regret"]
    timings = {}
    revenue_by_value = {}
    shared_stages: dict = {}  # stage arrays are theta/gamma independent
    oracle_by_gamma: dict = {}
    for value in values:
        cfg_v = _sweep_config(config, parameter, value, base_days)
        if parameter == "step_days":
            ctx = build_context(cfg_v)
            true_stages: dict = {}
        else:
            ctx = dataclasses.replace(base_ctx, config=cfg_v)
            true_stages = shared_stages
        online = run_online_trials(ctx, true_stages=true_stages)
        if parameter == "step_days" or cfg_v.gamma not in oracle_by_gamma:
            oracle = run_offline_trials(ctx, "oracle", true_stages=true_stages)
            if parameter != "step_days":
                oracle_by_gamma[cfg_v.gamma] = oracle
        else:
            oracle = oracle_by_gamma[cfg_v.gamma]
        value_timings = {
            "online": {k: round(v, 6) for k, v in online.profile.phases.items()},
            "oracle": {k: round(v, 6) for k, v in oracle.profile.phases.items()},
        }
        if parameter == "step_days":
            offline = run_offline_trials(ctx, "forecast", true_stages=true_stages)
            value_timings["offline"] = {
                k: round(v, 6) for k, v in offline.profile.phases.items()
            }
        regrets = [
            dynamic_regret(subject, ref)
            for subject, ref in zip(online.trajectories, oracle.trajectories)
        ]
        revenues = [cumulative_revenue(traj) for traj in online.trajectories]
        revenue_by_value[value] = revenues
        for trial, (revenue_value, series) in enumerate(zip(revenues, regrets)):
            rows.append(
                f"{parameter},{value},{trial},{_fmt_num(revenue_value)},{_fmt_num(series.final)}"
            )
        timings[str(value)] = value_timings

    csv_path = out / f"sweep_{parameter}.csv"
    csv_path.write_text("\n".join(rows) + "\n")
    _write_json(
        out / f"sweep_{parameter}_timings.json",
        {"parameter": parameter, "values": [str(v) for v in values], "timings": timings},
    )

    if config.figures:
        from . import figures

        figures.sweep_box(
            parameter, values, [revenue_by_value[v] for v in values],
            out / f"fig_sweep_{parameter}.png",
        )
        if parameter == "step_days":
            figures.runtime_scaling(
                values,
                [timings[str(v)]["offline"].get("solve", 0.0) for v in values],
                [timings[str(v)]["online"].get("solve", 0.0) for v in values],
                out / "fig_runtime_step_days.png",
            )
    return {"csv": str(csv_path), "timings": timings}
