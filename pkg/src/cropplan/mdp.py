"""The seasonal farm decision process.

One greenhouse plot holds exactly one (possibly dead) crop. Each timestep
the grower either waits, harvests, or replants; transitions are
deterministic but time-varying because seasonality depends on the calendar
date of the timestep. Rule violations (same-family replanting, harvesting
anything not mature, planting a crop that cannot reach maturity in season)
mark the successor state and earn a large negative reward.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import CropCatalog, harvestable_within_season, in_season
from .market import RevenueOracle, revenue as oracle_revenue

NO_ACT = "no_act"
HARVEST = "harvest"
PLANT = "plant"


class MDPError(ValueError):
    """Raised for actions or states inconsistent with the catalog."""


@dataclass(frozen=True, slots=True)
class State:
    """One greenhouse plot: crop, maturity and expiry counters, violation flag.

    maturity 0 means the crop is dead; a live crop is harvestable exactly
    when maturity equals the crop's max_maturity.
    """

    crop: str
    maturity: int
    expiry: int
    flag: bool

    @property
    def dead(self) -> bool:
        return self.maturity == 0


@dataclass(frozen=True, slots=True)
class Action:
    """Wait, harvest, or plant a named crop."""

    kind: str
    crop: str | None = None

    def __post_init__(self):
        if self.kind not in (NO_ACT, HARVEST, PLANT):
            raise MDPError(f"unknown action kind {self.kind!r}")
        if (self.kind == PLANT) != (self.crop is not None):
            raise MDPError("crop must be given for plant actions and only for them")

    @property
    def label(self) -> str:
        return f"plant({self.crop})" if self.kind == PLANT else self.kind


def no_act() -> Action:
    return Action(NO_ACT)


def harvest() -> Action:
    return Action(HARVEST)


def plant(crop_id: str) -> Action:
    return Action(PLANT, crop_id)


def action_space(catalog: CropCatalog) -> tuple[Action, ...]:
    """All actions in tie-break order: no_act, harvest, then plant per catalog."""
    return (no_act(), harvest()) + tuple(plant(c.id) for c in catalog.crops)


@dataclass(frozen=True)
class StateSpace:
    """Deterministic enumeration of every valid state, with its index map.

    ``closed_form_count`` is the coarse bound 2 * n_crops * max(max_maturity)
    * max(lifespan); the enumeration itself respects per-crop bounds and
    includes the dead states, so the two counts generally differ.
    """

    states: tuple[State, ...]
    index: dict = field(repr=False, compare=False)
    closed_form_count: int

    def __len__(self) -> int:
        return len(self.states)


def enumerate_states(catalog: CropCatalog) -> StateSpace:
    """List every valid state: crop order, then maturity, expiry, flag.

    Live states have maturity 1..max_maturity and expiry 1..lifespan; dead
    states (maturity 0) keep expiry 0..lifespan so seasonal deaths at any
    point of the lifecycle stay representable.
    """
    states = []
    for spec in catalog.crops:
        for maturity in range(0, spec.max_maturity + 1):
            expiries = range(0, spec.lifespan + 1) if maturity == 0 else range(1, spec.lifespan + 1)
            for expiry in expiries:
                for flag in (False, True):
                    states.append(State(spec.id, maturity, expiry, flag))
    closed_form = 2 * len(catalog.crops) * catalog.max_max_maturity * catalog.max_lifespan
    frozen = tuple(states)
    return StateSpace(states=frozen, index={s: i for i, s in enumerate(frozen)}, closed_form_count=closed_form)


def transition(catalog: CropCatalog, state: State, action: Action, t: int) -> State:
    """Deterministic successor of ``state`` under ``action`` taken at timestep ``t``.

    The input flag never carries over. After the action resolves, a crop
    whose expiry hit zero or that is out of season at t+1 dies (maturity 0).
    """
    spec = catalog.crop(state.crop)
    if action.kind == PLANT:
        new_spec = catalog.crop(action.crop)
        flag = new_spec.family == spec.family or not harvestable_within_season(
            catalog, action.crop, t + 1
        )
        crop, maturity, expiry = action.crop, 1, new_spec.lifespan
    elif action.kind == HARVEST and state.maturity == spec.max_maturity:
        if spec.repeat_harvest:
            maturity = spec.max_maturity - spec.harvest_frequency
        else:
            # crop may linger only if it can no longer re-reach maturity
            maturity = 1 if 1 + (state.expiry - 1) < spec.max_maturity else 0
        crop, expiry, flag = state.crop, state.expiry - 1, False
    else:
        # no_act, or harvest on an immature/dead crop (same motion, flagged)
        flag = action.kind == HARVEST
        maturity = min(state.maturity + 1, spec.max_maturity) if state.maturity > 0 else 0
        crop, expiry = state.crop, max(state.expiry - 1, 0)
    if expiry <= 0 or not in_season(catalog, crop, t + 1):
        maturity = 0
    return State(crop, maturity, max(expiry, 0), flag)


def _revenue_fn(revenue_source):
    if isinstance(revenue_source, RevenueOracle):
        return lambda crop_id, t: oracle_revenue(revenue_source, crop_id, t)
    if callable(revenue_source):
        return revenue_source
    raise MDPError(f"unsupported revenue source {type(revenue_source).__name__}")


def reward(
    catalog: CropCatalog,
    state: State,
    action: Action,
    t: int,
    revenue_source,
    violation_penalty: float,
) -> float:
    """Penalty on violation, harvest proceeds on a mature harvest, else 0."""
    succ = transition(catalog, state, action, t)
    if succ.flag:
        return violation_penalty
    if action.kind == HARVEST and state.maturity == catalog.crop(state.crop).max_maturity:
        return _revenue_fn(revenue_source)(state.crop, t)
    return 0.0


@dataclass(frozen=True)
class RewardMatrix:
    """Dense state x action rewards for one timestep."""

    values: np.ndarray
    timestep_tag: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise MDPError("reward matrix entries must be finite")


def build_stage(
    catalog: CropCatalog,
    space: StateSpace,
    actions: tuple[Action, ...],
    t: int,
    revenue_source,
    violation_penalty: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Successor indices and rewards for every (state, action) at timestep ``t``.

    One transition evaluation per pair; harvest revenue is computed once per
    crop and reused across states.
    """
    rev = _revenue_fn(revenue_source)
    rev_cache = {spec.id: None for spec in catalog.crops}
    n_states, n_actions = len(space.states), len(actions)
    next_idx = np.empty((n_states, n_actions), dtype=np.int64)
    rewards = np.zeros((n_states, n_actions), dtype=float)
    index = space.index
    for i, s in enumerate(space.states):
        mature = s.maturity == catalog.crop(s.crop).max_maturity
        for j, a in enumerate(actions):
            succ = transition(catalog, s, a, t)
            next_idx[i, j] = index[succ]
            if succ.flag:
                rewards[i, j] = violation_penalty
            elif a.kind == HARVEST and mature:
                if rev_cache[s.crop] is None:
                    rev_cache[s.crop] = rev(s.crop, t)
                rewards[i, j] = rev_cache[s.crop]
    return next_idx, rewards


def build_reward_matrix(
    catalog: CropCatalog,
    space: StateSpace,
    t: int,
    revenue_source,
    violation_penalty: float,
    actions: tuple[Action, ...] | None = None,
) -> RewardMatrix:
    """Reward matrix at timestep ``t`` in the canonical action order."""
    acts = action_space(catalog) if actions is None else actions
    _, rewards = build_stage(catalog, space, acts, t, revenue_source, violation_penalty)
    return RewardMatrix(values=rewards, timestep_tag=t)


@dataclass(frozen=True)
class FarmMDP:
    """Catalog plus its enumerated state and action spaces, bundled."""

    catalog: CropCatalog
    space: StateSpace
    actions: tuple[Action, ...]

    @classmethod
    def from_catalog(cls, catalog: CropCatalog) -> "FarmMDP":
        return cls(catalog=catalog, space=enumerate_states(catalog), actions=action_space(catalog))

    def stage(self, t: int, revenue_source, violation_penalty: float):
        return build_stage(
            self.catalog, self.space, self.actions, t, revenue_source, violation_penalty
        )
