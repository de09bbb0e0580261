"""Price ingestion, windowed aggregation, forecasting, and synthesis."""

import datetime as dt
import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cropplan.catalog import CropSpec
from cropplan.market import (
    CropPriceModel,
    MarketError,
    RevenueOracle,
    load_price_spec,
    load_prices,
    price_at,
    revenue,
    ses_forecast,
    synth_prices,
    write_prices,
)

from conftest import YEAR_ROUND, make_catalog


def series_from_rows(tmp_path, rows, name="p.csv"):
    path = tmp_path / name
    lines = ["date,crop_id,price_per_kg,quantity_kg"] + [",".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return load_prices(path)


class TestLoadPrices:
    def test_three_distinct_rows(self, tmp_path):
        series = series_from_rows(
            tmp_path,
            [
                ("2022-01-01", "a", "10", "5"),
                ("2022-01-02", "a", "11", "5"),
                ("2022-01-01", "b", "7", "2"),
            ],
        )
        assert series.n_observations == 3
        assert series.coverage == (dt.date(2022, 1, 1), dt.date(2022, 1, 2))

    def test_duplicate_rows_average(self, tmp_path):
        series = series_from_rows(
            tmp_path,
            [("2022-01-01", "a", "10", "1"), ("2022-01-01", "a", "20", "1")],
        )
        days, prices = series.observations("a")
        assert len(days) == 1
        assert prices[0] == 15.0

    def test_empty_file_gives_empty_series(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        series = load_prices(path)
        assert series.n_observations == 0
        assert series.coverage is None

    def test_header_only_gives_empty_series(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("date,crop_id,price_per_kg,quantity_kg\n")
        series = load_prices(path)
        assert series.n_observations == 0
        assert series.coverage is None

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("date,crop_id,price\n2022-01-01,a,3\n")
        with pytest.raises(MarketError, match="missing columns"):
            load_prices(path)

    def test_bad_date_rejected(self, tmp_path):
        with pytest.raises(MarketError, match="bad date"):
            series_from_rows(tmp_path, [("01/02/2022", "a", "10", "1")])

    def test_negative_price_rejected(self, tmp_path):
        with pytest.raises(MarketError, match="price_per_kg"):
            series_from_rows(tmp_path, [("2022-01-01", "a", "-1", "1")])

    def test_row_permutation_invariance(self, tmp_path):
        rows = [
            (f"2022-01-{d:02d}", crop, str(p), "1")
            for d, crop, p in [
                (3, "a", 12),
                (1, "a", 10),
                (2, "b", 9),
                (1, "b", 8),
                (2, "a", 11),
            ]
        ]
        shuffled = rows[:]
        random.Random(7).shuffle(shuffled)
        s1 = series_from_rows(tmp_path, rows, "one.csv")
        s2 = series_from_rows(tmp_path, shuffled, "two.csv")
        assert s1.crop_ids == s2.crop_ids
        for crop in s1.crop_ids:
            np.testing.assert_array_equal(s1.data[crop][0], s2.data[crop][0])
            np.testing.assert_array_equal(s1.data[crop][1], s2.data[crop][1])

    def test_write_read_round_trip(self, tmp_path, solo_oracle):
        path = tmp_path / "rt.csv"
        write_prices(solo_oracle.series, path)
        back = load_prices(path)
        days, prices = back.observations("solo")
        orig_days, orig_prices = solo_oracle.series.observations("solo")
        np.testing.assert_array_equal(days, orig_days)
        np.testing.assert_array_equal(prices, orig_prices)


def four_day_catalog():
    crop = CropSpec(
        id="a", family="f", max_maturity=2, lifespan=3, yield_kg=100.0,
        season_windows=YEAR_ROUND,
    )
    return make_catalog([crop], step_days=4)


class TestPriceAt:
    def oracle(self, tmp_path, rows):
        series = series_from_rows(tmp_path, rows)
        return RevenueOracle(series=series, catalog=four_day_catalog())

    def test_constant_window(self, tmp_path):
        rows = [(f"2022-01-{d:02d}", "a", "12", "1") for d in (1, 2, 3, 4)]
        assert price_at(self.oracle(tmp_path, rows), "a", 0) == 12.0

    def test_gap_carries_last_observation_forward(self, tmp_path):
        # window days priced 10, 10, missing, 14 -> (10+10+10+14)/4 = 11
        rows = [
            ("2022-01-01", "a", "10", "1"),
            ("2022-01-02", "a", "10", "1"),
            ("2022-01-04", "a", "14", "1"),
        ]
        assert price_at(self.oracle(tmp_path, rows), "a", 0) == 11.0

    def test_window_before_first_observation_uses_crop_mean(self, tmp_path):
        rows = [("2022-03-01", "a", "9", "1")]
        assert price_at(self.oracle(tmp_path, rows), "a", 0) == 9.0

    def test_negative_timestep_addresses_pre_start_window(self, tmp_path):
        rows = [("2021-12-29", "a", "6", "1"), ("2022-01-01", "a", "8", "1")]
        # window -1 covers Dec 28..31: mean fill, 6, 6, 6
        oracle = self.oracle(tmp_path, rows)
        assert price_at(oracle, "a", -1) == pytest.approx((7 + 6 + 6 + 6) / 4)

    def test_unknown_crop_reports_no_price_data(self, tmp_path):
        oracle = self.oracle(tmp_path, [("2022-01-01", "a", "1", "1")])
        with pytest.raises(MarketError, match="no price data"):
            price_at(oracle, "zz", 0)

    def test_unknown_fill_policy_rejected(self, tmp_path):
        series = series_from_rows(tmp_path, [("2022-01-01", "a", "1", "1")])
        with pytest.raises(MarketError, match="fill_policy"):
            RevenueOracle(series=series, catalog=four_day_catalog(), fill_policy="zeros")


class TestRevenue:
    def test_yield_times_price(self, tmp_path):
        rows = [(f"2022-01-{d:02d}", "a", "10", "1") for d in (1, 2, 3, 4)]
        series = series_from_rows(tmp_path, rows)
        oracle = RevenueOracle(series=series, catalog=four_day_catalog())
        assert revenue(oracle, "a", 0) == 1000.0

    def test_linear_in_yield(self, tmp_path):
        rows = [("2022-01-01", "a", "13", "1"), ("2022-01-03", "a", "17", "1")]
        series = series_from_rows(tmp_path, rows)
        cat1 = four_day_catalog()
        crop = cat1.crops[0]
        import dataclasses

        cat2 = make_catalog([dataclasses.replace(crop, yield_kg=200.0)], step_days=4)
        r1 = revenue(RevenueOracle(series=series, catalog=cat1), "a", 0)
        r2 = revenue(RevenueOracle(series=series, catalog=cat2), "a", 0)
        assert r2 == pytest.approx(2 * r1)

    def test_windowed_mean_recomputed_by_hand(self):
        # independent recomputation: average the generated daily prices
        # directly and multiply by the yield
        spec = {"a": CropPriceModel(base=20.0, amplitude=0.3, noise_sd=2.0)}
        catalog = four_day_catalog()
        series = synth_prices(11, spec, dt.date(2021, 12, 1), dt.date(2022, 3, 1))
        oracle = RevenueOracle(series=series, catalog=catalog)
        days, prices = series.observations("a")
        window_start = dt.date(2022, 1, 17).toordinal()  # timestep 4 at 4-day steps
        mask = (days >= window_start) & (days < window_start + 4)
        expected = prices[mask].mean() * 100.0
        assert revenue(oracle, "a", 4) == pytest.approx(expected, rel=1e-12)


class TestSesForecast:
    def test_constant_history_is_fixed_point(self):
        np.testing.assert_array_equal(ses_forecast([10, 10, 10], 0.3, 4), [10, 10, 10, 10])

    def test_two_step_hand_update(self):
        np.testing.assert_array_equal(ses_forecast([0, 10], 0.5, 3), [5, 5, 5])

    def test_alpha_one_is_naive_forecast(self):
        np.testing.assert_array_equal(ses_forecast([3, 9, 4], 1.0, 2), [4, 4])

    def test_empty_history_rejected(self):
        with pytest.raises(MarketError, match="empty history"):
            ses_forecast([], 0.5, 1)

    def test_alpha_domain(self):
        with pytest.raises(MarketError, match="alpha"):
            ses_forecast([1.0], 0.0, 1)
        with pytest.raises(MarketError, match="alpha"):
            ses_forecast([1.0], 1.5, 1)

    @given(
        history=st.lists(st.floats(0, 1e6), min_size=1, max_size=30),
        alpha=st.floats(0.01, 1.0),
    )
    def test_forecast_within_history_range(self, history, alpha):
        level = ses_forecast(history, alpha, 2)
        assert min(history) - 1e-6 <= level[0] <= max(history) + 1e-6
        assert level[0] == level[1]


class TestSynthPrices:
    SPEC = {"a": CropPriceModel(base=10.0, amplitude=0.5, noise_sd=0.0)}

    def test_deterministic_for_fixed_seed(self):
        spec = {"a": CropPriceModel(base=10.0, amplitude=0.2, noise_sd=3.0)}
        s1 = synth_prices(42, spec, dt.date(2022, 1, 1), dt.date(2022, 2, 1))
        s2 = synth_prices(42, spec, dt.date(2022, 1, 1), dt.date(2022, 2, 1))
        np.testing.assert_array_equal(s1.data["a"][1], s2.data["a"][1])

    def test_zero_amplitude_zero_noise_is_constant(self):
        spec = {"a": CropPriceModel(base=10.0)}
        series = synth_prices(0, spec, dt.date(2022, 1, 1), dt.date(2022, 1, 20))
        assert np.all(series.data["a"][1] == 10.0)

    def test_seasonal_peak_matches_closed_form(self):
        series = synth_prices(0, self.SPEC, dt.date(2022, 4, 1), dt.date(2022, 4, 1))
        # April 1 is day 91; sin(2*pi*91/365) is within 1e-4 of 1
        expected = 10.0 * (1 + 0.5 * math.sin(2 * math.pi * 91 / 365))
        assert series.data["a"][1][0] == pytest.approx(expected)
        assert expected == pytest.approx(15.0, abs=1e-2)

    def test_clamped_at_zero(self):
        spec = {"a": CropPriceModel(base=1.0, amplitude=-50.0, noise_sd=0.0)}
        series = synth_prices(0, spec, dt.date(2022, 2, 1), dt.date(2022, 6, 1))
        assert np.all(series.data["a"][1] >= 0.0)
        assert np.any(series.data["a"][1] == 0.0)

    def test_bad_range_rejected(self):
        with pytest.raises(MarketError, match="before start"):
            synth_prices(0, self.SPEC, dt.date(2022, 2, 1), dt.date(2022, 1, 1))

    def test_model_validation(self):
        with pytest.raises(MarketError, match="base"):
            CropPriceModel(base=0.0)
        with pytest.raises(MarketError, match="noise_sd"):
            CropPriceModel(base=1.0, noise_sd=-1.0)


class TestPriceSpecFile:
    def test_load(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text('{"a": {"base": 5, "amplitude": 0.1, "noise_sd": 1}, "b": {"base": 2}}')
        spec = load_price_spec(path)
        assert spec["a"] == CropPriceModel(base=5.0, amplitude=0.1, noise_sd=1.0)
        assert spec["b"] == CropPriceModel(base=2.0)

    def test_missing_base_rejected(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text('{"a": {"amplitude": 0.1}}')
        with pytest.raises(MarketError, match="missing field"):
            load_price_spec(path)

    def test_non_mapping_rejected(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text("[1, 2]")
        with pytest.raises(MarketError, match="mapping"):
            load_price_spec(path)
