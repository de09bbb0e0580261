"""Offline full-horizon planning and the perfect-information oracle.

The non-stationary finite-horizon problem becomes stationary by adjoining
the timestep to the state. The expanded graph is acyclic in time, so one
backward sweep solves it exactly; a flattened encoding with a zero-reward
absorbing sink supports solving the same system with plain value iteration
as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import CropCatalog
from .market import RevenueOracle, price_at, ses_forecast
from .mdp import FarmMDP, State
from .fwl import Trajectory, execute_step


class OfflineError(ValueError):
    """Raised for invalid offline-planning inputs."""


@dataclass(frozen=True)
class ExpandedSpace:
    """Base states crossed with decision epochs 1..T.

    Expanded index of (state i, epoch t) is (t-1)*S + i. Epoch t acts during
    window t-1 of the calendar (epochs are 1-based, windows 0-based); value
    beyond the horizon is zero.
    """

    model: FarmMDP
    T: int

    def __post_init__(self):
        if self.T < 1:
            raise OfflineError(f"T must be >= 1, got {self.T}")

    @property
    def n_base(self) -> int:
        return len(self.model.space)

    @property
    def n_states(self) -> int:
        return self.n_base * self.T

    def expanded_index(self, state_idx: int, t: int) -> int:
        if not 1 <= t <= self.T:
            raise OfflineError(f"epoch {t} outside 1..{self.T}")
        return (t - 1) * self.n_base + state_idx

    def state_of(self, expanded_idx: int) -> tuple[State, int]:
        t, i = divmod(expanded_idx, self.n_base)
        return self.model.space.states[i], t + 1


def time_expand(catalog: CropCatalog, T: int, model: FarmMDP | None = None) -> ExpandedSpace:
    """Adjoin epochs 1..T to the enumerated state space."""
    if model is None:
        model = FarmMDP.from_catalog(catalog)
    return ExpandedSpace(model=model, T=T)


def layer_stage(expanded: ExpandedSpace, u: int, revenue_source, violation_penalty: float,
                cache: dict | None = None):
    """Stage arrays for internal step u (epoch u+1), optionally memoized."""
    if cache is not None and u in cache:
        return cache[u]
    stage = expanded.model.stage(u, revenue_source, violation_penalty)
    if cache is not None:
        cache[u] = stage
    return stage


@dataclass(frozen=True)
class OfflinePlan:
    """Per-epoch policies and values from one full-horizon solve."""

    expanded: ExpandedSpace
    policies: np.ndarray  # (T, S) action indices
    values: np.ndarray  # (T, S) value at each epoch
    gamma: float


def backward_induction(
    expanded: ExpandedSpace,
    revenue_source,
    violation_penalty: float,
    gamma: float,
    stage_cache: dict | None = None,
) -> OfflinePlan:
    """Exact solve of the expanded system in one backward sweep over epochs."""
    if not 0 <= gamma <= 1:
        raise OfflineError(f"gamma must be in [0, 1], got {gamma}")
    T, S = expanded.T, expanded.n_base
    values = np.zeros((T, S))
    policies = np.zeros((T, S), dtype=np.int64)
    v_next = np.zeros(S)  # value beyond the horizon
    for u in range(T - 1, -1, -1):
        next_idx, rewards = layer_stage(expanded, u, revenue_source, violation_penalty, stage_cache)
        q = rewards + gamma * v_next[next_idx]
        policies[u] = np.argmax(q, axis=1)
        values[u] = np.max(q, axis=1)
        v_next = values[u]
    return OfflinePlan(expanded=expanded, policies=policies, values=values, gamma=gamma)


def flatten_expanded(
    expanded: ExpandedSpace,
    revenue_source,
    violation_penalty: float,
    stage_cache: dict | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Encode the expanded system for the stationary solver.

    Rows follow the expanded index order; one extra zero-reward absorbing
    sink (last row) receives every transition out of the final epoch.
    """
    T, S = expanded.T, expanded.n_base
    n_actions = len(expanded.model.actions)
    sink = T * S
    next_full = np.empty((T * S + 1, n_actions), dtype=np.int64)
    rewards_full = np.zeros((T * S + 1, n_actions))
    for u in range(T):
        next_idx, rewards = layer_stage(expanded, u, revenue_source, violation_penalty, stage_cache)
        rows = slice(u * S, (u + 1) * S)
        rewards_full[rows] = rewards
        next_full[rows] = (u + 1) * S + next_idx if u < T - 1 else sink
    next_full[sink] = sink
    return next_full, rewards_full


def offline_plan(
    expanded: ExpandedSpace,
    revenue_source,
    gamma: float,
    violation_penalty: float,
    stage_cache: dict | None = None,
    profile=None,
) -> OfflinePlan:
    """Plan once over the whole horizon against the given revenue source."""
    if profile is None:
        return backward_induction(expanded, revenue_source, violation_penalty, gamma, stage_cache)
    with profile.phase("solve"):
        return backward_induction(expanded, revenue_source, violation_penalty, gamma, stage_cache)


def offline_rollout(
    plan: OfflinePlan,
    initial_state: State,
    true_oracle: RevenueOracle,
    violation_penalty: float,
    true_stage_cache: dict | None = None,
    profile=None,
) -> Trajectory:
    """Execute a plan from an initial state under true dynamics and rewards.

    Transitions are deterministic, so following the per-epoch policies is
    the plan's open-loop action sequence for that start.
    """
    expanded = plan.expanded
    model = expanded.model
    if initial_state not in model.space.index:
        raise OfflineError(f"initial state {initial_state} not in the state space")
    state = initial_state
    steps = []
    for u in range(expanded.T):
        next_idx, rewards_true = layer_stage(
            expanded, u, true_oracle, violation_penalty, true_stage_cache
        )
        action_idx = int(plan.policies[u][model.space.index[state]])
        with _maybe_phase(profile, "simulate"):
            state, step = execute_step(model, state, action_idx, next_idx, rewards_true, u)
        steps.append(step)
    return Trajectory(steps=tuple(steps), final_state=state, policies=None)


class _NullTimer:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _maybe_phase(profile, name: str):
    return _NullTimer() if profile is None else profile.phase(name)


def ses_revenue_source(
    oracle: RevenueOracle,
    alpha: float = 0.5,
    history_windows: int = 26,
):
    """Flat per-crop revenue forecast from smoothed pre-start price history.

    Fits one exponential-smoothing level per crop on the windows immediately
    before the start date; the forecast revenue is constant over the horizon.
    """
    if history_windows < 1:
        raise OfflineError(f"history_windows must be >= 1, got {history_windows}")
    catalog = oracle.catalog
    levels = {}
    for crop in catalog.crops:
        history = [price_at(oracle, crop.id, u) for u in range(-history_windows, 0)]
        levels[crop.id] = float(ses_forecast(history, alpha, 1)[0]) * crop.yield_kg

    def forecast_revenue(crop_id: str, t: int) -> float:
        return levels[crop_id]

    return forecast_revenue
