"""Greenhouse crop rotation planning.

Online re-planning with smoothed reward estimates, offline full-horizon
baselines, and the shared seasonal farm MDP underneath both.
"""

__version__ = "0.1.0"

from .catalog import (
    CatalogError,
    CropCatalog,
    CropSpec,
    harvestable_within_season,
    in_season,
    load_catalog,
)
from .market import MarketError, PriceSeries, load_prices, price_at, revenue, ses_forecast, synth_prices
from .mdp import Action, FarmMDP, State, build_reward_matrix, enumerate_states, reward, transition
from .solver import SolveResult, export_lp, extract_policy, value_iteration
from .fwl import fwl_run, smooth_update
from .offline import offline_plan, time_expand
from .metrics import cumulative_revenue, dynamic_regret, runtime_profile, state_space_stats

__all__ = [
    "CatalogError",
    "CropCatalog",
    "CropSpec",
    "harvestable_within_season",
    "in_season",
    "load_catalog",
    "MarketError",
    "PriceSeries",
    "load_prices",
    "price_at",
    "revenue",
    "ses_forecast",
    "synth_prices",
    "Action",
    "FarmMDP",
    "State",
    "build_reward_matrix",
    "enumerate_states",
    "reward",
    "transition",
    "SolveResult",
    "export_lp",
    "extract_policy",
    "value_iteration",
    "fwl_run",
    "smooth_update",
    "offline_plan",
    "time_expand",
    "cumulative_revenue",
    "dynamic_regret",
    "runtime_profile",
    "state_space_stats",
]
