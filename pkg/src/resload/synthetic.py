"""Synthetic stand-ins for time-use logs, census households and weather.

The bundled fixtures under ``resload/data`` were produced by ``main()``::

    python -m resload.synthetic --out src/resload/data --seed 2019
"""

from __future__ import annotations

import argparse
import datetime as dt
import math
import os

import numpy as np

from .activity import ActivityLogRecord, write_activity_logs
from .census import INCOME_BRACKETS, CensusHouseholdRecord, write_census
from .labels import DEFAULT_SCHEMA, DAY_TYPES, SLOTS_PER_DAY, ActivityState as S, PersonLabel
from .weather import write_weather

_SHIFT_START = {"office": 8.5, "service": 11.0, "manual": 6.5, "other": 9.0, "none": 9.0}


def _slot(hour: float) -> int:
    return int(min(max(round(hour * 6), 0), SLOTS_PER_DAY))


def synthetic_day(label: PersonLabel, day_type: str, rng) -> list[int]:
    """One plausible respondent-day built from a jittered household routine."""
    employed = label.employment_status == "employed"
    weekend = day_type == "weekend"
    young, old = label.age_bin == "15-24", label.age_bin == "65+"
    parent = label.parental_status == "parent"

    wake = rng.normal(8.0 if weekend or not employed else 6.5, 0.7) + (0.7 if young else 0.0)
    wake -= 0.5 if old else 0.0
    bed = rng.normal(23.3 if young else 22.6, 0.6) + (0.5 if weekend else 0.0)
    day = [int(S.SLEEPING)] * SLOTS_PER_DAY
    w, b = _slot(wake), _slot(bed)
    for k in range(w, b):
        day[k] = int(S.LEISURE if rng.random() < 0.8 else S.OTHER)

    def fill(start, n, state):
        for k in range(max(start, w), min(start + n, b)):
            day[k] = int(state)

    fill(w, int(rng.integers(2, 5)), S.GROOMING)
    if rng.random() < (0.75 if parent else 0.55):
        fill(w + 3, int(rng.integers(1, 3)), S.COOKING)

    works = employed and rng.random() < (0.2 if weekend else 0.9)
    if works:
        leave = max(_slot(_SHIFT_START[label.occupation_category] + rng.normal(0, 0.5)), w + 4)
        fill(leave, _slot(rng.normal(9.0, 0.7)), S.AWAY)
    elif rng.random() < (0.45 if old else 0.65):
        fill(_slot(rng.uniform(9.5, 15.0)), int(rng.integers(6, 24)), S.AWAY)
    if not works and rng.random() < 0.6:
        fill(_slot(rng.normal(12.3, 0.4)), int(rng.integers(1, 3)), S.COOKING)

    dinner = _slot(rng.normal(18.2, 0.5))
    if day[dinner] != S.AWAY and rng.random() < (0.85 if parent else 0.6):
        n = int(rng.integers(3, 7))
        fill(dinner, n, S.COOKING)
        if rng.random() < 0.55:
            fill(dinner + n + int(rng.integers(2, 5)), int(rng.integers(1, 3)), S.DISHWASHING)
    for state, p_wd, p_we, lo, hi in ((S.LAUNDRY, 0.12, 0.35, 1, 4),
                                      (S.CLEANING, 0.15, 0.35, 2, 6)):
        if rng.random() < (p_we if weekend else p_wd) * (1.4 if parent else 1.0):
            start = _slot(rng.uniform(wake + 1, max(wake + 1.5, bed - 2)))
            if day[min(start, SLOTS_PER_DAY - 1)] != S.AWAY:
                fill(start, int(rng.integers(lo, hi + 1)), state)
    fill(b - 2, int(rng.random() < 0.5) + 1, S.GROOMING)
    return day


def _random_label(rng, schema=DEFAULT_SCHEMA, adult: bool = True) -> PersonLabel:
    age = rng.choice(schema.age_bins[1:3] if adult else schema.age_bins, p=None)
    if age == "65+":
        employed = rng.random() < 0.2
    elif age == "15-24":
        employed = rng.random() < 0.45
    else:
        employed = rng.random() < 0.78
    occ = rng.choice(["office", "service", "manual", "other"]) if employed else "none"
    parent = "parent" if (age in ("25-44", "45-64") and rng.random() < 0.45) else "non-parent"
    return PersonLabel(str(age), "employed" if employed else "not-employed", str(occ), parent)


def synthetic_activity_logs(n_records: int, rng) -> list[ActivityLogRecord]:
    rng = np.random.default_rng(rng)
    records = []
    for k in range(n_records):
        label = _random_label(rng, adult=False)
        day_type = DAY_TYPES[int(rng.random() < 2 / 7)]
        records.append(ActivityLogRecord(f"R{k:05d}", label, day_type,
                                         tuple(synthetic_day(label, day_type, rng))))
    return records


# mean household size grows with income
_SIZE_WEIGHTS = {
    "<25K": (0.55, 0.28, 0.10, 0.05, 0.02),
    "25-50K": (0.35, 0.35, 0.15, 0.10, 0.05),
    "50-75K": (0.22, 0.38, 0.18, 0.15, 0.07),
    "75-100K": (0.15, 0.35, 0.20, 0.20, 0.10),
    "100K+": (0.10, 0.30, 0.22, 0.24, 0.14),
}


def synthetic_census(n_per_region: int, regions, rng) -> list[CensusHouseholdRecord]:
    rng = np.random.default_rng(rng)
    out = []
    for region in regions:
        for k in range(n_per_region):
            bracket = INCOME_BRACKETS[int(rng.integers(0, len(INCOME_BRACKETS)))]
            size = 1 + int(rng.choice(5, p=_SIZE_WEIGHTS[bracket]))
            head = _random_label(rng)
            if bracket in ("75-100K", "100K+") and head.employment_status == "not-employed" \
                    and head.age_bin != "65+" and rng.random() < 0.7:
                head = PersonLabel(head.age_bin, "employed", "office", head.parental_status)
            members = [head]
            has_kids = size >= 3
            if size >= 2:
                members.append(_random_label(rng))
            while len(members) < size:
                members.append(PersonLabel("15-24", "employed" if rng.random() < 0.3
                                           else "not-employed", "other" if rng.random() < 0.3
                                           else "none", "non-parent"))
            if has_kids:
                members = [PersonLabel(m.age_bin, m.employment_status, m.occupation_category,
                                       "parent") if i < 2 else m for i, m in enumerate(members)]
            out.append(CensusHouseholdRecord(f"{region}{k:05d}", region, bracket, tuple(members)))
    return out


def synthetic_weather(year: int = 2019, seed=0):
    """Hourly Austin-like temperature and global irradiance for one calendar year."""
    rng = np.random.default_rng(seed)
    start = dt.datetime(year, 1, 1)
    n = (dt.datetime(year + 1, 1, 1) - start).days * 24 + 1
    stamps = [start + dt.timedelta(hours=k) for k in range(n)]
    doy = np.array([s.timetuple().tm_yday + s.hour / 24 for s in stamps])
    hour = np.array([s.hour for s in stamps], dtype=float)
    seasonal = 20.5 - 8.5 * np.cos(2 * math.pi * (doy - 15) / 365)
    diurnal = 5.5 * np.cos(2 * math.pi * (hour - 15) / 24)
    weather_noise = np.cumsum(rng.normal(0, 0.35, n))
    weather_noise -= np.convolve(weather_noise, np.ones(73) / 73, mode="same")
    temp = seasonal + diurnal + weather_noise
    decl = 23.44 * np.sin(2 * math.pi * (doy - 81) / 365)
    lat = 30.3
    ha = 15.0 * (hour - 13.0)
    sin_alt = (np.sin(np.radians(lat)) * np.sin(np.radians(decl))
               + np.cos(np.radians(lat)) * np.cos(np.radians(decl)) * np.cos(np.radians(ha)))
    clearness = np.clip(0.75 + np.repeat(rng.normal(0, 0.15, n // 24 + 1), 24)[:n], 0.2, 0.85)
    irr = np.clip(1361.0 * clearness * sin_alt, 0.0, None)
    return stamps, temp, irr


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="write synthetic input fixtures")
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=2019)
    ap.add_argument("--logs", type=int, default=3000)
    ap.add_argument("--households", type=int, default=400)
    args = ap.parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    root = np.random.SeedSequence(args.seed)
    s_logs, s_census, s_weather = root.spawn(3)
    with open(os.path.join(args.out, "activity_logs.csv"), "w", newline="", encoding="utf-8") as fh:
        write_activity_logs(synthetic_activity_logs(args.logs, s_logs), fh)
    with open(os.path.join(args.out, "census.csv"), "w", newline="", encoding="utf-8") as fh:
        write_census(synthetic_census(args.households, ("TX", "CA"), s_census), fh)
    stamps, temp, irr = synthetic_weather(2019, s_weather)
    with open(os.path.join(args.out, "weather_2019.csv"), "w", newline="", encoding="utf-8") as fh:
        write_weather(fh, stamps, temp, irr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
