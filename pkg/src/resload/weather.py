"""Weather CSV ingestion and minute-resolution resampling."""

from __future__ import annotations

import csv
import datetime as dt
import os
from dataclasses import dataclass

import numpy as np

from .labels import MINUTES_PER_DAY, IngestError

WEATHER_COLUMNS = ("timestamp", "temperature_c", "irradiance_wm2")
_EPOCH = dt.datetime(1970, 1, 1)


class WeatherCoverageError(ValueError):
    pass


def _minutes(ts: dt.datetime) -> float:
    return (ts - _EPOCH).total_seconds() / 60.0


@dataclass(frozen=True, eq=False)
class WeatherSeries:
    """Samples at arbitrary (regular or irregular) times, interpolated on demand.

    Minutes between samples are linearly interpolated. Minutes past the last
    sample, up to one sample spacing, hold the last value. Any sample gap
    longer than ``max_gap_minutes`` inside a requested window is an error.
    """

    times: np.ndarray          # minutes since 1970-01-01, increasing
    temperature: np.ndarray    # degC
    irradiance: np.ndarray     # W/m^2
    max_gap_minutes: float = 180.0

    def __post_init__(self):
        if len(self.times) == 0:
            raise ValueError("weather series is empty")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("weather timestamps must be strictly increasing")

    @property
    def spacing(self) -> float:
        return float(np.median(np.diff(self.times))) if len(self.times) > 1 else 1.0

    def window(self, start_date: dt.date, days: int) -> tuple[np.ndarray, np.ndarray]:
        """(temperature, irradiance) at each minute of [start_date, start_date + days)."""
        t0 = _minutes(dt.datetime.combine(start_date, dt.time()))
        grid = t0 + np.arange(days * MINUTES_PER_DAY, dtype=float)
        first, last = self.times[0], self.times[-1]
        if grid[0] < first or grid[-1] > last + self.spacing:
            raise WeatherCoverageError(
                f"weather covers {_fmt(first)} .. {_fmt(last)}, "
                f"simulation needs {_fmt(grid[0])} .. {_fmt(grid[-1])}")
        lo = max(np.searchsorted(self.times, grid[0], side="right") - 1, 0)
        hi = np.searchsorted(self.times, grid[-1], side="left")
        gaps = np.diff(self.times[lo:hi + 1])
        if gaps.size and gaps.max() > self.max_gap_minutes:
            k = lo + int(np.argmax(gaps))
            raise WeatherCoverageError(
                f"weather gap of {gaps.max():.0f} min after {_fmt(self.times[k])}")
        temp = np.interp(grid, self.times, self.temperature)
        irr = np.interp(grid, self.times, self.irradiance)
        return temp, np.maximum(irr, 0.0)


def _fmt(minutes: float) -> str:
    return (_EPOCH + dt.timedelta(minutes=float(minutes))).isoformat(timespec="minutes")


def _parse_timestamp(raw: str) -> dt.datetime:
    raw = raw.strip()
    if raw.endswith("Z"):
        raw = raw[:-1]
    ts = dt.datetime.fromisoformat(raw)
    return ts.replace(tzinfo=None, second=0, microsecond=0)


def load_weather(source, max_gap_minutes: float = 180.0) -> WeatherSeries:
    """Read ``timestamp,temperature_c,irradiance_wm2`` rows (any order)."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return _read(fh, str(source), max_gap_minutes)
    return _read(source, getattr(source, "name", None), max_gap_minutes)


def _read(stream, name, max_gap_minutes) -> WeatherSeries:
    reader = csv.DictReader(stream)
    missing = [c for c in WEATHER_COLUMNS if c not in (reader.fieldnames or ())]
    if missing:
        raise IngestError("missing column", source=name, row=0, field=missing[0])
    times, temp, irr = [], [], []
    for rownum, row in enumerate(reader, start=1):
        for col in WEATHER_COLUMNS:
            raw = row[col]
            try:
                value = _parse_timestamp(raw) if col == "timestamp" else float(raw)
            except (TypeError, ValueError):
                raise IngestError(f"cannot parse {raw!r}", source=name, row=rownum,
                                  field=col) from None
            if col == "timestamp":
                times.append(_minutes(value))
            elif col == "temperature_c":
                temp.append(value)
            else:
                if value < 0:
                    raise IngestError("irradiance must be non-negative", source=name,
                                      row=rownum, field=col)
                irr.append(value)
    order = np.argsort(times, kind="stable")
    t = np.asarray(times)[order]
    if np.any(np.diff(t) == 0):
        raise IngestError("duplicate timestamp", source=name, field="timestamp")
    return WeatherSeries(t, np.asarray(temp)[order], np.asarray(irr)[order], max_gap_minutes)


def write_weather(stream, timestamps, temperature, irradiance) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(WEATHER_COLUMNS)
    for ts, t, i in zip(timestamps, temperature, irradiance):
        writer.writerow([ts.isoformat(timespec="minutes"), f"{t:.2f}", f"{i:.1f}"])
