"""Crop catalog: the agronomic parameters that define the planning problem.

The catalog file stores durations in days; they are converted to timesteps
at load time (ceiling division by ``step_days``) so a single file serves
experiments with different step sizes.
"""

from __future__ import annotations

import calendar
import datetime as dt
import functools
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

DAYS_PER_YEAR = 365


class CatalogError(ValueError):
    """Raised for unparseable catalog files or invariant violations."""


@dataclass(frozen=True)
class CropSpec:
    """Parameters of a single crop, durations in timesteps."""

    id: str
    family: str
    max_maturity: int
    lifespan: int
    yield_kg: float
    season_windows: tuple[tuple[int, int], ...]
    repeat_harvest: bool = False
    harvest_frequency: int | None = None

    def validate(self) -> None:
        if not self.id:
            raise CatalogError("crop id must be non-empty")
        if self.max_maturity < 1:
            raise CatalogError(f"crop {self.id!r}: max_maturity must be >= 1")
        if self.lifespan < 1:
            raise CatalogError(f"crop {self.id!r}: lifespan must be >= 1")
        if self.max_maturity > self.lifespan:
            raise CatalogError(
                f"crop {self.id!r}: max_maturity <= lifespan violated "
                f"({self.max_maturity} > {self.lifespan})"
            )
        if self.yield_kg <= 0 or not math.isfinite(self.yield_kg):
            raise CatalogError(f"crop {self.id!r}: yield_kg must be positive and finite")
        if self.repeat_harvest:
            if self.harvest_frequency is None:
                raise CatalogError(
                    f"crop {self.id!r}: repeat_harvest requires harvest_frequency"
                )
            if not 1 <= self.harvest_frequency < self.max_maturity:
                raise CatalogError(
                    f"crop {self.id!r}: 1 <= harvest_frequency < max_maturity violated "
                    f"(harvest_frequency={self.harvest_frequency}, "
                    f"max_maturity={self.max_maturity})"
                )
        elif self.harvest_frequency is not None:
            raise CatalogError(
                f"crop {self.id!r}: harvest_frequency given without repeat_harvest"
            )
        if not self.season_windows:
            raise CatalogError(f"crop {self.id!r}: season_windows must be non-empty")
        for lo, hi in self.season_windows:
            if not (1 <= lo <= DAYS_PER_YEAR and 1 <= hi <= DAYS_PER_YEAR):
                raise CatalogError(
                    f"crop {self.id!r}: season window ({lo}, {hi}) outside 1..{DAYS_PER_YEAR}"
                )


@dataclass(frozen=True)
class CropCatalog:
    """Immutable, ordered crop list plus the timestep-to-calendar mapping."""

    crops: tuple[CropSpec, ...]
    start_date: dt.date
    step_days: int
    _by_id: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.step_days < 1:
            raise CatalogError("step_days must be >= 1")
        ids = [c.id for c in self.crops]
        if len(set(ids)) != len(ids):
            raise CatalogError("crop ids must be unique")
        for c in self.crops:
            c.validate()
        object.__setattr__(self, "_by_id", {c.id: c for c in self.crops})

    def crop(self, crop_id: str) -> CropSpec:
        try:
            return self._by_id[crop_id]
        except KeyError:
            raise CatalogError(f"unknown crop {crop_id!r}") from None

    @property
    def crop_ids(self) -> list[str]:
        return [c.id for c in self.crops]

    def timestep_date(self, t: int) -> dt.date:
        """Calendar date at the start of timestep ``t`` (t may be negative)."""
        return self.start_date + dt.timedelta(days=t * self.step_days)

    @property
    def max_max_maturity(self) -> int:
        return max(c.max_maturity for c in self.crops)

    @property
    def max_lifespan(self) -> int:
        return max(c.lifespan for c in self.crops)


def day_of_year(date: dt.date) -> int:
    """Day of year in 1..365; February 29 maps to 59 (treated as Feb 28)."""
    doy = date.timetuple().tm_yday
    if calendar.isleap(date.year) and doy >= 60:
        return doy - 1
    return doy


def _window_contains(window: tuple[int, int], doy: int) -> bool:
    lo, hi = window
    if lo <= hi:
        return lo <= doy <= hi
    return doy >= lo or doy <= hi  # wrap-around, e.g. Nov..Feb


@functools.lru_cache(maxsize=None)
def in_season(catalog: CropCatalog, crop_id: str, t: int) -> bool:
    """True iff the date of timestep ``t`` falls inside any season window."""
    crop = catalog.crop(crop_id)
    doy = day_of_year(catalog.timestep_date(t))
    return any(_window_contains(w, doy) for w in crop.season_windows)


@functools.lru_cache(maxsize=None)
def harvestable_within_season(catalog: CropCatalog, crop_id: str, t_plant: int) -> bool:
    """True iff the crop stays in season from planting through first maturity."""
    crop = catalog.crop(crop_id)
    return all(in_season(catalog, crop_id, t) for t in range(t_plant, t_plant + crop.max_maturity + 1))


def _steps(days: int, step_days: int) -> int:
    return -(-int(days) // step_days)  # ceiling division


def _require(record: dict, key: str, context: str):
    if key not in record:
        raise CatalogError(f"{context}: missing field {key!r}")
    return record[key]


def load_catalog(path: str | Path, step_days: int | None = None) -> CropCatalog:
    """Load a catalog file, converting day-denominated durations to timesteps.

    ``step_days`` overrides the file's value, so one source file can back
    runs at several step sizes.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise CatalogError(f"{path}: parse error: {exc}") from exc
    if not isinstance(raw, dict):
        raise CatalogError(f"{path}: top level must be a mapping")

    start_raw = _require(raw, "start_date", str(path))
    if isinstance(start_raw, dt.date):
        start_date = start_raw
    else:
        try:
            start_date = dt.date.fromisoformat(str(start_raw))
        except ValueError as exc:
            raise CatalogError(f"{path}: bad start_date {start_raw!r}: {exc}") from exc

    file_step = _require(raw, "step_days", str(path))
    if not isinstance(file_step, int) or file_step < 1:
        raise CatalogError(f"{path}: step_days must be a positive integer")
    step = step_days if step_days is not None else file_step

    crops_raw = _require(raw, "crops", str(path))
    if not isinstance(crops_raw, list) or not crops_raw:
        raise CatalogError(f"{path}: crops must be a non-empty list")

    crops = []
    for i, rec in enumerate(crops_raw):
        ctx = f"{path}: crop #{i}"
        if not isinstance(rec, dict):
            raise CatalogError(f"{ctx}: must be a mapping")
        crop_id = str(_require(rec, "id", ctx))
        ctx = f"{path}: crop {crop_id!r}"
        repeat = bool(rec.get("repeat_harvest", False))
        hf_days = rec.get("harvest_frequency_days")
        windows = _require(rec, "season_windows", ctx)
        try:
            season = tuple((int(lo), int(hi)) for lo, hi in windows)
        except (TypeError, ValueError) as exc:
            raise CatalogError(f"{ctx}: bad season_windows: {exc}") from exc
        try:
            spec = CropSpec(
                id=crop_id,
                family=str(_require(rec, "family", ctx)),
                max_maturity=_steps(_require(rec, "maturity_days", ctx), step),
                lifespan=_steps(_require(rec, "lifespan_days", ctx), step),
                yield_kg=float(_require(rec, "yield_kg", ctx)),
                season_windows=season,
                repeat_harvest=repeat,
                harvest_frequency=_steps(hf_days, step) if hf_days is not None else None,
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, CatalogError):
                raise
            raise CatalogError(f"{ctx}: {exc}") from exc
        spec.validate()
        crops.append(spec)

    return CropCatalog(crops=tuple(crops), start_date=start_date, step_days=step)


def write_catalog(catalog: CropCatalog, path: str | Path) -> None:
    """Write a catalog file that loads back to an equal catalog.

    Durations are emitted as whole step multiples, so the ceiling division
    in ``load_catalog`` recovers the same timestep counts.
    """
    doc = {
        "start_date": catalog.start_date.isoformat(),
        "step_days": catalog.step_days,
        "crops": [],
    }
    for c in catalog.crops:
        rec = {
            "id": c.id,
            "family": c.family,
            "maturity_days": c.max_maturity * catalog.step_days,
            "lifespan_days": c.lifespan * catalog.step_days,
            "yield_kg": c.yield_kg,
            "repeat_harvest": c.repeat_harvest,
            "season_windows": [[lo, hi] for lo, hi in c.season_windows],
        }
        if c.repeat_harvest:
            rec["harvest_frequency_days"] = c.harvest_frequency * catalog.step_days
        doc["crops"].append(rec)
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))


def fixture_catalog_path() -> Path:
    """Path of the packaged eight-crop reference catalog (synthetic values)."""
    return Path(__file__).parent / "data" / "catalog8.yaml"


def fixture_price_spec_path() -> Path:
    """Path of the packaged synthetic price generator spec."""
    return Path(__file__).parent / "data" / "price_spec.json"
