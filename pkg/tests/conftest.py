"""Shared fixtures: small hand-checkable catalogs and price helpers."""

from __future__ import annotations

import datetime as dt

import pytest

from cropplan.catalog import CropCatalog, CropSpec
from cropplan.market import CropPriceModel, RevenueOracle, synth_prices

START = dt.date(2022, 1, 1)
YEAR_ROUND = ((1, 365),)


def make_catalog(crops, step_days=14, start_date=START) -> CropCatalog:
    return CropCatalog(crops=tuple(crops), start_date=start_date, step_days=step_days)


@pytest.fixture
def desk_catalog() -> CropCatalog:
    """Two year-round crops; closed-form count 2*2*3*4 = 48.

    alpha: repeat-harvest, matures in 2 steps, lives 3.
    bravo: single-harvest, matures in 3 steps, lives 4.
    """
    return make_catalog(
        [
            CropSpec(
                id="alpha",
                family="f1",
                max_maturity=2,
                lifespan=3,
                yield_kg=10.0,
                season_windows=YEAR_ROUND,
                repeat_harvest=True,
                harvest_frequency=1,
            ),
            CropSpec(
                id="bravo",
                family="f2",
                max_maturity=3,
                lifespan=4,
                yield_kg=5.0,
                season_windows=YEAR_ROUND,
            ),
        ]
    )


@pytest.fixture
def seasonal_catalog() -> CropCatalog:
    """Like the desk pair but alpha's season ends June 29 (day 180)."""
    return make_catalog(
        [
            CropSpec(
                id="alpha",
                family="f1",
                max_maturity=2,
                lifespan=3,
                yield_kg=10.0,
                season_windows=((1, 180),),
                repeat_harvest=True,
                harvest_frequency=1,
            ),
            CropSpec(
                id="bravo",
                family="f2",
                max_maturity=3,
                lifespan=4,
                yield_kg=5.0,
                season_windows=YEAR_ROUND,
            ),
        ]
    )


@pytest.fixture
def solo_catalog() -> CropCatalog:
    """One year-round repeat-harvest crop; replanting it is always a violation."""
    return make_catalog(
        [
            CropSpec(
                id="solo",
                family="fz",
                max_maturity=2,
                lifespan=5,
                yield_kg=20.0,
                season_windows=YEAR_ROUND,
                repeat_harvest=True,
                harvest_frequency=1,
            ),
        ]
    )


def constant_oracle(catalog: CropCatalog, prices: dict, lo_t: int = -40, hi_t: int = 80) -> RevenueOracle:
    """Oracle over a constant daily price per crop, covering windows lo_t..hi_t."""
    spec = {crop_id: CropPriceModel(base=p) for crop_id, p in prices.items()}
    series = synth_prices(
        0, spec, catalog.timestep_date(lo_t), catalog.timestep_date(hi_t)
    )
    return RevenueOracle(series=series, catalog=catalog)


@pytest.fixture
def desk_oracle(desk_catalog) -> RevenueOracle:
    return constant_oracle(desk_catalog, {"alpha": 12.0, "bravo": 30.0})


@pytest.fixture
def seasonal_oracle(seasonal_catalog) -> RevenueOracle:
    return constant_oracle(seasonal_catalog, {"alpha": 12.0, "bravo": 30.0})


@pytest.fixture
def solo_oracle(solo_catalog) -> RevenueOracle:
    return constant_oracle(solo_catalog, {"solo": 7.5})
