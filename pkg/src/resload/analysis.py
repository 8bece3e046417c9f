"""Population reductions: aggregate load, mean daily profiles, bracket differences."""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import os
from collections import defaultdict
from typing import Iterable, Mapping, Sequence

import numpy as np

from .census import INCOME_BRACKETS
from .household import CHANNELS, PROFILE_COLUMNS, Household, LoadProfile, format_values
from .labels import MINUTES_PER_DAY


def _content_key(profile: LoadProfile) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    for c in CHANNELS:
        h.update(np.ascontiguousarray(profile[c], dtype=float).tobytes())
    return h.digest()


def aggregate(profiles: Sequence[LoadProfile]) -> LoadProfile:
    """Element-wise channel sums.

    Profiles are added in an order fixed by their content, so any permutation
    of the input gives a bit-identical result.
    """
    profiles = list(profiles)
    if not profiles:
        raise ValueError("nothing to aggregate")
    first = profiles[0]
    for p in profiles[1:]:
        if p.minutes != first.minutes or p.start_date != first.start_date:
            raise ValueError("profiles must share start date and length")
    sums = {c: np.zeros(first.minutes) for c in CHANNELS}
    for p in sorted(profiles, key=_content_key):
        for c in CHANNELS:
            sums[c] += p[c]
    return LoadProfile.from_channels(first.start_date, **sums)


def _day_block(profile: LoadProfile, start: dt.date | None, end: dt.date | None) -> np.ndarray:
    days = profile.total.reshape(profile.days, MINUTES_PER_DAY)
    lo = 0 if start is None else max(0, (start - profile.start_date).days)
    hi = profile.days if end is None else min(profile.days, (end - profile.start_date).days)
    return days[lo:hi]


def household_daily_mean(profile: LoadProfile, start: dt.date | None = None,
                         end: dt.date | None = None) -> np.ndarray:
    """Mean over days of total load at each minute of the day; ``end`` is exclusive."""
    block = _day_block(profile, start, end)
    if len(block) == 0:
        raise ValueError("date range selects no days")
    return block.mean(axis=0)


def mean_daily_profile(profiles: Sequence[LoadProfile], start: dt.date | None = None,
                       end: dt.date | None = None) -> np.ndarray:
    """Mean over every household and every (selected) day, per minute of day."""
    profiles = list(profiles)
    if not profiles:
        raise ValueError("mean of an empty profile list")
    acc = np.zeros(MINUTES_PER_DAY)
    n_days = 0
    for p in profiles:
        block = _day_block(p, start, end)
        acc += block.sum(axis=0)
        n_days += len(block)
    if n_days == 0:
        raise ValueError("date range selects no days")
    return acc / n_days


def _as_daily(item) -> np.ndarray:
    if isinstance(item, LoadProfile):
        return household_daily_mean(item)
    arr = np.asarray(item, dtype=float)
    if arr.shape != (MINUTES_PER_DAY,):
        raise ValueError("daily profiles must have 1440 values")
    return arr


def bracket_diff(groups: Mapping[str, Sequence]) -> dict[str, np.ndarray]:
    """Fractional difference of each group's mean day from the all-household mean.

    Group members may be :class:`LoadProfile` objects or 1440-value daily
    means. The overall mean weights every household equally.
    """
    means, counts = {}, {}
    for bracket, items in groups.items():
        daily = [_as_daily(x) for x in items]
        if not daily:
            raise ValueError(f"group {bracket!r} is empty")
        means[bracket] = np.mean(daily, axis=0)
        counts[bracket] = len(daily)
    if not means:
        raise ValueError("no groups given")
    n = sum(counts.values())
    overall = sum(counts[b] * means[b] for b in means) / n
    if np.any(overall <= 0):
        m = int(np.flatnonzero(overall <= 0)[0])
        raise ValueError(f"overall mean load is zero at minute {m}")
    return {b: (means[b] - overall) / overall for b in means}


def group_by_bracket(pairs: Iterable[tuple[Household, object]]) -> dict[str, list]:
    """Bracket -> profiles, brackets in canonical order."""
    groups = defaultdict(list)
    for h, prof in pairs:
        groups[h.income_bracket].append(prof)
    order = {b: i for i, b in enumerate(INCOME_BRACKETS)}
    return {b: groups[b] for b in sorted(groups, key=lambda b: order.get(b, len(order)))}


def filter_household_size(pairs: Iterable[tuple[Household, object]], size: int) -> list:
    if size < 1:
        raise ValueError("size must be at least 1")
    return [(h, p) for h, p in pairs if h.size == size]


# -- CSV outputs ----------------------------------------------------------------

def write_aggregate_csv(profile: LoadProfile, target) -> None:
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            return write_aggregate_csv(profile, fh)
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(PROFILE_COLUMNS)
    cols = [format_values(profile[c]) for c in CHANNELS + ("total",)]
    writer.writerows(zip(map(str, range(profile.minutes)), *cols))


def write_bracket_diff_csv(diffs: Mapping[str, np.ndarray], target) -> None:
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            return write_bracket_diff_csv(diffs, fh)
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(("minute_of_day", "bracket", "fraction", "percent"))
    for bracket, values in diffs.items():
        frac = format_values(values)
        pct = format_values(values * 100.0)
        for m in range(MINUTES_PER_DAY):
            writer.writerow((m, bracket, frac[m], pct[m]))


def summary_rows(region: str, households: Sequence[Household], energies_kwh: Sequence[float],
                 days: int) -> list[tuple]:
    """Per-bracket (and "all") household counts, sizes and annualised energy.

    Energy over the simulated horizon is scaled by 365/days.
    """
    rows = []
    by_bracket = defaultdict(list)
    for h, e in zip(households, energies_kwh):
        by_bracket[h.income_bracket].append((h.size, e))
    ordered = [b for b in INCOME_BRACKETS if b in by_bracket]
    everything = [(h.size, e) for h, e in zip(households, energies_kwh)]
    for bracket, items in [(b, by_bracket[b]) for b in ordered] + [("all", everything)]:
        if not items:
            continue
        sizes = np.array([s for s, _ in items], dtype=float)
        energy = np.array([e for _, e in items]) * 365.0 / days
        rows.append((region, bracket, len(items), float(sizes.mean()), float(energy.mean())))
    return rows


def write_summary_csv(rows: Sequence[tuple], target) -> None:
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            return write_summary_csv(rows, fh)
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(("region", "bracket", "households", "mean_household_size", "annual_kwh_mean"))
    for region, bracket, n, size, kwh in rows:
        writer.writerow((region, bracket, n, repr(size), repr(kwh)))
