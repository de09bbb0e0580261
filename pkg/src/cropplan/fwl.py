"""Online re-planning against exponentially smoothed reward history.

Each timestep the planner refreshes its reward estimate as a convex
combination of the previous estimate and the last observed reward matrix,
re-solves the discounted MDP frozen at the current timestep's seasonality,
executes the single prescribed action, and records the realized outcome
under the true rewards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import CropCatalog
from .market import RevenueOracle
from .mdp import HARVEST, Action, FarmMDP, RewardMatrix, State
from .solver import default_eps, extract_policy, value_iteration


class FwlError(ValueError):
    """Raised for invalid online-loop configuration."""


@dataclass(frozen=True)
class FwlConfig:
    """Parameters of one online run.

    theta weights the newest observation in the smoothed estimate; 1.0 is
    allowed (pure last observation). The seed is bookkeeping only: given an
    explicit initial state the loop itself is deterministic.
    """

    theta: float
    gamma: float
    violation_penalty: float
    horizon: int
    initial_state: State
    seed: int = 0
    max_iter: int = 10_000

    def __post_init__(self):
        if not 0 <= self.theta <= 1:
            raise FwlError(f"theta must be in [0, 1], got {self.theta}")
        if not 0 <= self.gamma < 1:
            raise FwlError(f"gamma must be in [0, 1), got {self.gamma}")
        if not self.violation_penalty < 0:
            raise FwlError(f"violation penalty must be negative, got {self.violation_penalty}")
        if self.horizon < 1:
            raise FwlError(f"horizon must be >= 1, got {self.horizon}")


@dataclass(frozen=True)
class TrajectoryStep:
    """One executed step: epoch (1-based), pre-action state, outcome."""

    t: int
    state_before: State
    action: Action
    realized_reward: float
    realized_revenue: float
    flag_raised: bool


@dataclass(frozen=True)
class Trajectory:
    """Complete run record; realized values always come from true rewards."""

    steps: tuple[TrajectoryStep, ...]
    final_state: State
    policies: tuple[np.ndarray, ...] | None = None

    @property
    def horizon(self) -> int:
        return len(self.steps)


def smooth_update(r_hat_prev: RewardMatrix, r_prev: RewardMatrix, theta: float) -> RewardMatrix:
    """Elementwise convex combination: (1-theta)*estimate + theta*last observed."""
    if not 0 <= theta <= 1:
        raise FwlError(f"theta must be in [0, 1], got {theta}")
    if r_hat_prev.values.shape != r_prev.values.shape:
        raise FwlError(
            f"shape mismatch: {r_hat_prev.values.shape} vs {r_prev.values.shape}"
        )
    blended = (1.0 - theta) * r_hat_prev.values + theta * r_prev.values
    return RewardMatrix(values=blended, timestep_tag=r_prev.timestep_tag + 1)


@dataclass
class PlanCache:
    """Per-timestep planning work, shareable across trials.

    The smoothed estimate depends only on elapsed true rewards, never on
    the states a trial visits, so every initial state sees the same per-step
    policies. Reuse a cache only across runs that agree on catalog, prices,
    theta, gamma, and penalty.
    """

    model: FarmMDP
    stages: dict = field(default_factory=dict)
    estimates: list = field(default_factory=list)
    policies: list = field(default_factory=list)

    def stage(self, t: int, oracle: RevenueOracle, violation_penalty: float):
        if t not in self.stages:
            self.stages[t] = self.model.stage(t, oracle, violation_penalty)
        return self.stages[t]


def _ensure_plans(
    cache: PlanCache, config: FwlConfig, oracle: RevenueOracle, horizon: int, profile
) -> None:
    """Extend the cached policy prefix through step ``horizon - 1``."""
    while len(cache.policies) < horizon:
        u = len(cache.policies)
        with _maybe_phase(profile, "solve"):
            next_idx, _ = cache.stage(u, oracle, config.violation_penalty)
            if u == 0:
                # estimate seeded from the last window before the start
                r_hat = RewardMatrix(
                    values=cache.stage(-1, oracle, config.violation_penalty)[1],
                    timestep_tag=0,
                )
            else:
                r_true_prev = RewardMatrix(
                    values=cache.stage(u - 1, oracle, config.violation_penalty)[1],
                    timestep_tag=u - 1,
                )
                r_hat = smooth_update(cache.estimates[u - 1], r_true_prev, config.theta)
            solved = value_iteration(
                next_idx,
                r_hat.values,
                config.gamma,
                eps=default_eps(r_hat.values),
                max_iter=config.max_iter,
            )
            policy = extract_policy(solved.values, next_idx, r_hat.values, config.gamma)
        cache.estimates.append(r_hat)
        cache.policies.append(policy)


class _NullTimer:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _maybe_phase(profile, name: str):
    return _NullTimer() if profile is None else profile.phase(name)


def fwl_run(
    config: FwlConfig,
    catalog: CropCatalog,
    revenue_oracle: RevenueOracle,
    *,
    plan_cache: PlanCache | None = None,
    record_policies: bool = False,
    profile=None,
) -> Trajectory:
    """Run the online loop for ``config.horizon`` steps.

    Step u (0-based) plans on the MDP frozen at u using the smoothed reward
    estimate, executes the single prescribed action under the true dynamics,
    and observes the true reward of window u. Recorded epochs are 1-based.
    """
    if plan_cache is None:
        plan_cache = PlanCache(model=FarmMDP.from_catalog(catalog))
    model = plan_cache.model
    if config.initial_state not in model.space.index:
        raise FwlError(f"initial state {config.initial_state} not in the state space")

    _ensure_plans(plan_cache, config, revenue_oracle, config.horizon, profile)

    state = config.initial_state
    steps = []
    policies = [] if record_policies else None
    for u in range(config.horizon):
        policy = plan_cache.policies[u]
        next_idx, rewards_true = plan_cache.stage(u, revenue_oracle, config.violation_penalty)
        with _maybe_phase(profile, "simulate"):
            state, step = execute_step(model, state, int(policy[model.space.index[state]]),
                                       next_idx, rewards_true, u)
        steps.append(step)
        if record_policies:
            policies.append(policy.copy())

    return Trajectory(
        steps=tuple(steps),
        final_state=state,
        policies=tuple(policies) if record_policies else None,
    )


def execute_step(
    model: FarmMDP,
    state: State,
    action_idx: int,
    next_idx: np.ndarray,
    rewards_true: np.ndarray,
    u: int,
) -> tuple[State, TrajectoryStep]:
    """Apply one action under true dynamics; record realized reward/revenue."""
    i = model.space.index[state]
    successor = model.space.states[int(next_idx[i, action_idx])]
    realized = float(rewards_true[i, action_idx])
    action = model.actions[action_idx]
    mature = state.maturity == model.catalog.crop(state.crop).max_maturity
    harvest_pay = action.kind == HARVEST and mature and not successor.flag
    step = TrajectoryStep(
        t=u + 1,
        state_before=state,
        action=action,
        realized_reward=realized,
        realized_revenue=realized if harvest_pay else 0.0,
        flag_raised=successor.flag,
    )
    return successor, step
