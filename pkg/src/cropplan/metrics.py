"""Run evaluation: regret, revenue, cardinality reports, phase timings."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

from .catalog import CropCatalog
from .fwl import Trajectory


class MetricsError(ValueError):
    """Raised when trajectories being compared are not comparable."""


@dataclass(frozen=True)
class RegretSeries:
    """Cumulative reward gap against the oracle, one entry per epoch."""

    per_t: tuple[tuple[int, float], ...]

    @property
    def final(self) -> float:
        return self.per_t[-1][1]


def cumulative_revenue(traj: Trajectory) -> float:
    """Total harvest proceeds; penalties are excluded by construction."""
    return sum(step.realized_revenue for step in traj.steps)


def cumulative_reward(traj: Trajectory) -> float:
    """Total realized reward including violation penalties."""
    return sum(step.realized_reward for step in traj.steps)


def dynamic_regret(subject: Trajectory, oracle: Trajectory) -> RegretSeries:
    """Cumulative true-reward gap oracle-minus-subject per epoch.

    Both runs must share the horizon and the initial state (and, by
    contract, the same true prices); penalties count.
    """
    if subject.horizon != oracle.horizon:
        raise MetricsError(
            f"horizon mismatch: subject {subject.horizon} vs oracle {oracle.horizon}"
        )
    if subject.steps[0].state_before != oracle.steps[0].state_before:
        raise MetricsError("trajectories start from different states")
    series = []
    gap = 0.0
    for sub, ora in zip(subject.steps, oracle.steps):
        gap += ora.realized_reward - sub.realized_reward
        series.append((sub.t, gap))
    return RegretSeries(per_t=tuple(series))


def state_space_stats(catalog: CropCatalog, T: int | None = None) -> dict:
    """Cardinality report: closed-form and enumerated counts, entry totals.

    The closed-form count is 2 * n_crops * max(max_maturity) * max(lifespan);
    transition-entry totals are n * n_actions * n for each reported n. The
    enumerated count respects per-crop bounds and dead-state expiries, so it
    differs from the closed form in general.
    """
    from .mdp import enumerate_states  # local import keeps module load light

    space = enumerate_states(catalog)
    n_actions = 2 + len(catalog.crops)
    n = space.closed_form_count
    report = {
        "closed_form_online": n,
        "enumerated_online": len(space),
        "n_actions": n_actions,
        "transition_entries_online": n * n_actions * n,
    }
    if T is not None:
        expanded = n * T
        report["expanded"] = expanded
        report["transition_entries_expanded"] = expanded * n_actions * expanded
    return report


@dataclass
class RuntimeProfile:
    """Accumulated wall-clock seconds per named phase."""

    phases: dict = field(default_factory=dict)

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        try:
            yield self
        finally:
            self.phases[name] = self.phases.get(name, 0.0) + (time.perf_counter() - start)

    def seconds(self, name: str) -> float:
        return self.phases.get(name, 0.0)

    @property
    def total(self) -> float:
        return sum(self.phases.values())


def runtime_profile() -> RuntimeProfile:
    """Fresh empty profile; pass to run functions to collect phase timings."""
    return RuntimeProfile()
