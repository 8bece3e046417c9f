"""One household: activity chains for each member driving every appliance model."""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .activity import OccupancySequence, TransitionMatrixSet, sample_activity_sequence
from .appliances import (
    ApplianceParams,
    activity_load_series,
    cold_series,
    hot_water_draw_series,
    hvac_series,
    lighting_series,
    water_heater_series,
)
from .labels import MINUTES_PER_DAY, MINUTES_PER_SLOT, ActivityState, PersonLabel, day_type_of
from .weather import WeatherSeries

CHANNELS = ("hvac", "water_heater", "lighting", "cold", "activity")
PROFILE_COLUMNS = ("minute_index",) + tuple(f"{c}_w" for c in CHANNELS) + ("total_w",)

# spawn_key roots for the per-household seed tree
MEMBER_STREAMS = 0
APPLIANCE_STREAMS = 1
LIGHTING, COLD, HOT_WATER, EVENTS = range(4)


@dataclass(frozen=True)
class Household:
    household_id: str
    members: tuple[PersonLabel, ...]
    income_bracket: str
    region: str
    params: ApplianceParams = field(default_factory=ApplianceParams, compare=False)
    record_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError(f"household {self.household_id!r} has no members")

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class LoadProfile:
    """Minute wattage per end use, starting at midnight of ``start_date``."""

    start_date: dt.date
    channels: Mapping[str, np.ndarray]

    def __post_init__(self):
        missing = [c for c in CHANNELS + ("total",) if c not in self.channels]
        if missing:
            raise ValueError(f"missing channels: {missing}")
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) != 1:
            raise ValueError("channels differ in length")
        if lengths.pop() % MINUTES_PER_DAY:
            raise ValueError("profile length must be whole days")
        for v in self.channels.values():
            v.setflags(write=False)

    @classmethod
    def from_channels(cls, start_date: dt.date, **series) -> "LoadProfile":
        chans = {c: np.asarray(series[c], dtype=float) for c in CHANNELS}
        total = chans[CHANNELS[0]].copy()
        for c in CHANNELS[1:]:
            total += chans[c]
        chans["total"] = total
        return cls(start_date, chans)

    @property
    def minutes(self) -> int:
        return len(self.channels["total"])

    @property
    def days(self) -> int:
        return self.minutes // MINUTES_PER_DAY

    @property
    def total(self) -> np.ndarray:
        return self.channels["total"]

    def __getitem__(self, channel: str) -> np.ndarray:
        return self.channels[channel]


def stable_id_hash(household_id: str) -> int:
    return int.from_bytes(hashlib.blake2b(household_id.encode("utf-8"), digest_size=8).digest(),
                          "little")


def household_entropy(seed: int, household_id: str) -> int:
    """Scenario seed XOR a platform-independent 64-bit hash of the id."""
    return (int(seed) ^ stable_id_hash(household_id)) & 0xFFFF_FFFF_FFFF_FFFF


def household_streams(seed: int, household_id: str, n_members: int):
    """(member generators, [lighting, cold, hot-water, events] generators).

    Streams are addressed by spawn key, so a member's chain does not depend on
    how many other members or households exist.
    """
    entropy = household_entropy(seed, household_id)
    members = [np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(MEMBER_STREAMS, k)))
               for k in range(n_members)]
    appliances = [np.random.default_rng(np.random.SeedSequence(entropy,
                                                               spawn_key=(APPLIANCE_STREAMS, j)))
                  for j in (LIGHTING, COLD, HOT_WATER, EVENTS)]
    return members, appliances


def calendar_for(start_date: dt.date, days: int) -> list[str]:
    return [day_type_of(start_date + dt.timedelta(days=d)) for d in range(days)]


def occupancy_drivers(sequences: Sequence[OccupancySequence]):
    """Per-slot (all members away, active-occupant count)."""
    slots = np.vstack([s.slots for s in sequences])
    all_away = (slots == ActivityState.AWAY).all(axis=0)
    active = ((slots != ActivityState.AWAY) & (slots != ActivityState.SLEEPING)).sum(axis=0)
    return all_away, active


def simulate_household(h: Household, matrices: TransitionMatrixSet, weather: WeatherSeries,
                       start_date: dt.date, days: int, seed: int,
                       sequences: Sequence[OccupancySequence] | None = None) -> LoadProfile:
    """Minute-resolution end-use profile for ``days`` days from ``start_date``.

    ``sequences`` may supply pre-sampled activity chains (one per member);
    otherwise each member's chain is sampled from its own stream.
    """
    if days < 1:
        raise ValueError("days must be at least 1")
    p = h.params
    t_amb, irr = weather.window(start_date, days)
    calendar = calendar_for(start_date, days)
    member_rngs, (light_rng, cold_rng, _hw_rng, _ev_rng) = household_streams(
        seed, h.household_id, h.size)
    if sequences is None:
        sequences = [sample_activity_sequence(matrices, label, calendar, rng, k)
                     for k, (label, rng) in enumerate(zip(h.members, member_rngs))]
    elif len(sequences) != h.size or any(s.days != days for s in sequences):
        raise ValueError("need one sequence of the simulated length per member")

    all_away_slot, active_slot = occupancy_drivers(sequences)
    all_away = np.repeat(all_away_slot, MINUTES_PER_SLOT)
    table = p.lighting.effective_occupancy_table
    lut = np.array([table[k] for k in range(max(table) + 1)])
    o_eff = np.repeat(lut[np.minimum(active_slot, len(lut) - 1)], MINUTES_PER_SLOT)

    hvac_w, _, _ = hvac_series(p.hvac, t_amb, all_away)
    draw = hot_water_draw_series(sequences, p.hot_water_events)
    wh_w, _, _ = water_heater_series(p.water_heater, t_amb, draw)
    lighting = p.lighting.with_use_factors(light_rng)
    light_w = lighting_series(lighting, irr, o_eff, light_rng)
    cold_w = cold_series(p.cold, days * MINUTES_PER_DAY, cold_rng)
    act_w = activity_load_series(sequences, p.activity_loads)
    return LoadProfile.from_channels(start_date, hvac=hvac_w, water_heater=wh_w,
                                     lighting=light_w, cold=cold_w, activity=act_w)


def annual_energy(profile: LoadProfile) -> float:
    """Energy over the profile horizon in kWh (minute watts / 60 / 1000)."""
    return float(np.sum(profile.total)) / 60.0 / 1000.0


def format_values(values: np.ndarray) -> list[str]:
    """Shortest round-trip text; integral values print without a decimal point."""
    arr = np.asarray(values, dtype=float)
    if np.all(np.isfinite(arr)) and np.all(arr == np.trunc(arr)) and np.all(np.abs(arr) < 2**53):
        return arr.astype(np.int64).astype(str).tolist()
    return [repr(float(x)) for x in arr]


def write_profile_csv(profile: LoadProfile, target) -> None:
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            return write_profile_csv(profile, fh)
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(PROFILE_COLUMNS)
    cols = [format_values(profile[c]) for c in CHANNELS + ("total",)]
    writer.writerows(zip(map(str, range(profile.minutes)), *cols))


def read_profile_csv(source, start_date: dt.date) -> LoadProfile:
    data = np.loadtxt(source, delimiter=",", skiprows=1, ndmin=2)
    return LoadProfile(start_date, {c: data[:, k + 1].copy()
                                    for k, c in enumerate(CHANNELS + ("total",))})
