"""Wholesale price data: ingestion, windowed aggregation, forecasting, synthesis.

Daily observations are mapped onto the planning timestep grid by averaging
over each step's window of days; gaps are filled by carrying the last
observed price forward, falling back to the crop's overall mean.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .catalog import DAYS_PER_YEAR, CropCatalog, day_of_year

FILL_POLICIES = ("carry_forward_then_mean",)


class MarketError(ValueError):
    """Raised for unreadable price files or queries the data cannot answer."""


@dataclass(frozen=True)
class PriceSeries:
    """Per-crop daily price observations, sorted by date.

    ``data`` maps crop_id to a pair of parallel arrays: proleptic-Gregorian
    ordinals (ascending, unique) and prices. ``coverage`` is the (first, last)
    observation date across all crops, or None for an empty series.
    """

    data: dict[str, tuple[np.ndarray, np.ndarray]]
    coverage: tuple[dt.date, dt.date] | None

    @property
    def crop_ids(self) -> list[str]:
        return sorted(self.data)

    @property
    def n_observations(self) -> int:
        return sum(len(dates) for dates, _ in self.data.values())

    def has_crop(self, crop_id: str) -> bool:
        return crop_id in self.data and len(self.data[crop_id][0]) > 0

    def observations(self, crop_id: str) -> tuple[np.ndarray, np.ndarray]:
        if not self.has_crop(crop_id):
            raise MarketError(f"no price data for crop {crop_id!r}")
        return self.data[crop_id]


def _build_series(obs: dict[str, dict[int, list[float]]]) -> PriceSeries:
    """Collapse duplicate (crop, date) lists to means and sort."""
    data = {}
    lo = hi = None
    for crop_id, by_day in obs.items():
        if not by_day:
            continue
        days = np.array(sorted(by_day), dtype=np.int64)
        prices = np.array([float(np.mean(by_day[d])) for d in days], dtype=float)
        data[crop_id] = (days, prices)
        if lo is None or days[0] < lo:
            lo = int(days[0])
        if hi is None or days[-1] > hi:
            hi = int(days[-1])
    coverage = None
    if lo is not None:
        coverage = (dt.date.fromordinal(lo), dt.date.fromordinal(hi))
    return PriceSeries(data=data, coverage=coverage)


PRICE_COLUMNS = ("date", "crop_id", "price_per_kg", "quantity_kg")


def load_prices(path: str | Path) -> PriceSeries:
    """Load a price CSV; duplicate (crop, date) rows are averaged.

    Required header: date, crop_id, price_per_kg, quantity_kg. The quantity
    column is validated but not used by the model.
    """
    path = Path(path)
    obs: dict[str, dict[int, list[float]]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return _build_series(obs)  # zero-byte file: empty series
        missing = [c for c in PRICE_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise MarketError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            try:
                date = dt.date.fromisoformat(row["date"].strip())
            except ValueError as exc:
                raise MarketError(f"{path}:{lineno}: bad date {row['date']!r}: {exc}") from exc
            try:
                price = float(row["price_per_kg"])
                float(row["quantity_kg"])
            except ValueError as exc:
                raise MarketError(f"{path}:{lineno}: bad number: {exc}") from exc
            if not math.isfinite(price) or price < 0:
                raise MarketError(
                    f"{path}:{lineno}: price_per_kg must be finite and >= 0, got {price}"
                )
            crop_id = row["crop_id"].strip()
            if not crop_id:
                raise MarketError(f"{path}:{lineno}: empty crop_id")
            obs.setdefault(crop_id, {}).setdefault(date.toordinal(), []).append(price)
    return _build_series(obs)


def write_prices(series: PriceSeries, path: str | Path) -> None:
    """Write a series to CSV in the format ``load_prices`` reads."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PRICE_COLUMNS)
        for crop_id in series.crop_ids:
            days, prices = series.data[crop_id]
            for d, p in zip(days.tolist(), prices.tolist()):
                writer.writerow([dt.date.fromordinal(d).isoformat(), crop_id, repr(p), "0"])


@dataclass(frozen=True)
class RevenueOracle:
    """Answers price and revenue queries on the timestep grid.

    Windowed mean prices with gap filling; immutable after construction.
    """

    series: PriceSeries
    catalog: CropCatalog
    fill_policy: str = "carry_forward_then_mean"
    _crop_means: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.fill_policy not in FILL_POLICIES:
            raise MarketError(f"unknown fill_policy {self.fill_policy!r}")
        means = {}
        for crop_id, (_, prices) in self.series.data.items():
            if len(prices) > 0:
                means[crop_id] = float(np.mean(prices))
        object.__setattr__(self, "_crop_means", means)


def price_at(oracle: RevenueOracle, crop_id: str, t: int) -> float:
    """Mean filled daily price over the window of timestep ``t``.

    Each missing day takes the last observed price at or before it; days
    before the first observation take the crop's mean over full coverage.
    Negative ``t`` addresses pre-start windows (used to seed forecasts).
    """
    days, prices = oracle.series.observations(crop_id)  # raises "no price data"
    cat = oracle.catalog
    start = cat.timestep_date(t).toordinal()
    window = np.arange(start, start + cat.step_days, dtype=np.int64)
    idx = np.searchsorted(days, window, side="right") - 1
    filled = np.where(idx >= 0, prices[np.clip(idx, 0, None)], oracle._crop_means[crop_id])
    return float(np.mean(filled))


def revenue(oracle: RevenueOracle, crop_id: str, t: int) -> float:
    """Proceeds of harvesting ``crop_id`` during timestep ``t``: yield x price."""
    return oracle.catalog.crop(crop_id).yield_kg * price_at(oracle, crop_id, t)


def ses_forecast(history, alpha: float, horizon: int) -> np.ndarray:
    """Single exponential smoothing: flat forecast at the final level.

    The level starts at the first observation and updates as
    l <- alpha*x + (1-alpha)*l over the history.
    """
    hist = np.asarray(history, dtype=float)
    if hist.size == 0:
        raise MarketError("ses_forecast: empty history")
    if not 0 < alpha <= 1:
        raise MarketError(f"ses_forecast: alpha must be in (0, 1], got {alpha}")
    if horizon < 1:
        raise MarketError(f"ses_forecast: horizon must be >= 1, got {horizon}")
    level = float(hist[0])
    for x in hist[1:]:
        level = alpha * float(x) + (1 - alpha) * level
    return np.full(horizon, level)


@dataclass(frozen=True)
class CropPriceModel:
    """Seasonal sinusoid around a base price with additive Gaussian noise."""

    base: float
    amplitude: float = 0.0
    noise_sd: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.base) and self.base > 0):
            raise MarketError(f"base must be positive and finite, got {self.base}")
        if not math.isfinite(self.amplitude):
            raise MarketError("amplitude must be finite")
        if not (math.isfinite(self.noise_sd) and self.noise_sd >= 0):
            raise MarketError(f"noise_sd must be >= 0, got {self.noise_sd}")


def load_price_spec(path: str | Path) -> dict[str, CropPriceModel]:
    """Load a JSON mapping crop_id -> {base, amplitude, noise_sd}."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict) or not raw:
        raise MarketError(f"{path}: expected a non-empty mapping of crop specs")
    spec = {}
    for crop_id, rec in raw.items():
        if not isinstance(rec, dict):
            raise MarketError(f"{path}: crop {crop_id!r}: expected a mapping")
        try:
            spec[crop_id] = CropPriceModel(
                base=float(rec["base"]),
                amplitude=float(rec.get("amplitude", 0.0)),
                noise_sd=float(rec.get("noise_sd", 0.0)),
            )
        except KeyError as exc:
            raise MarketError(f"{path}: crop {crop_id!r}: missing field {exc}") from None
    return spec


def synth_prices(
    seed: int,
    spec: dict[str, CropPriceModel],
    start: dt.date,
    end: dt.date,
) -> PriceSeries:
    """Generate a dense daily series over [start, end], one price per crop-day.

    price(day) = base * (1 + amplitude * sin(2*pi*doy/365)) + noise,
    clamped at 0; deterministic for a fixed seed and spec.
    """
    if end < start:
        raise MarketError(f"synth_prices: end {end} before start {start}")
    rng = np.random.default_rng(seed)
    ordinals = np.arange(start.toordinal(), end.toordinal() + 1, dtype=np.int64)
    doy = np.array([day_of_year(dt.date.fromordinal(int(o))) for o in ordinals], dtype=float)
    seasonal = np.sin(2.0 * np.pi * doy / DAYS_PER_YEAR)
    data = {}
    for crop_id in sorted(spec):  # fixed draw order, independent of dict order
        model = spec[crop_id]
        prices = model.base * (1.0 + model.amplitude * seasonal)
        if model.noise_sd > 0:
            prices = prices + rng.normal(0.0, model.noise_sd, size=len(ordinals))
        prices = np.clip(prices, 0.0, None)
        data[crop_id] = (ordinals.copy(), prices)
    coverage = (start, end) if data else None
    return PriceSeries(data=data, coverage=coverage)
