"""Appliance models advanced one step at a time.

Each ``*_update`` / ``*_step`` function is pure: it takes a state and returns
the next state with the electric load for the step. The ``*_series``
functions run the same models over a whole horizon via compiled kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .labels import MINUTES_PER_SLOT, SLOTS_PER_DAY, ActivityState

HOURS_PER_YEAR = 8760.0


# -- HVAC ---------------------------------------------------------------------

class HvacMode(IntEnum):
    OFF = kernels.MODE_OFF
    HEATING = kernels.MODE_HEATING
    COOLING = kernels.MODE_COOLING


@dataclass(frozen=True)
class HvacParams:
    C_h: float = 40_000.0        # J/degC
    R_h: float = 0.18            # degC/W
    Q_h_heat: float = 450.0      # W
    Q_h_cool: float = -150.0     # W
    setpoint_home: float = 21.0  # degC
    setback_offset: float = 5.0  # degC
    deadband: float = 2.0        # degC, full width
    heater_rating: float = 6000.0  # W electric
    ac_rating: float = 4500.0      # W electric

    def __post_init__(self):
        if self.C_h <= 0 or self.R_h <= 0:
            raise ValueError("C_h and R_h must be positive")
        if self.Q_h_heat <= 0:
            raise ValueError("Q_h_heat must be positive")
        if self.Q_h_cool >= 0:
            raise ValueError("Q_h_cool must be negative")
        if self.deadband <= 0:
            raise ValueError("deadband must be positive")
        if self.heater_rating < 0 or self.ac_rating < 0:
            raise ValueError("ratings must be non-negative")
        if self.setback_offset < 0:
            raise ValueError("setback_offset must be non-negative")

    def setpoints(self, all_away: bool) -> tuple[float, float]:
        """(heating setpoint, cooling setpoint) for the current occupancy."""
        off = self.setback_offset if all_away else 0.0
        return self.setpoint_home - off, self.setpoint_home + off

    def bounds(self, all_away: bool) -> tuple[float, float]:
        """Switch-on thresholds: heating below the lower, cooling above the upper."""
        heat, cool = self.setpoints(all_away)
        return heat - self.deadband / 2, cool + self.deadband / 2


@dataclass(frozen=True)
class HvacState:
    T_int: float
    mode: HvacMode = HvacMode.OFF

    def __post_init__(self):
        if not math.isfinite(self.T_int):
            raise ValueError("T_int must be finite")


def hvac_update(state: HvacState, p: HvacParams, T_a: float, all_away: bool,
                dt: float = 60.0) -> tuple[HvacState, float]:
    """Thermostat decision followed by one exact step of the RC zone model.

    Heating switches on below ``setpoint - deadband/2`` and off once the zone
    reaches the heating setpoint; cooling mirrors this above the band. A unit
    that switches off always spends at least one step off.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    heat_sp, cool_sp = p.setpoints(all_away)
    mode = HvacMode(kernels.hvac_mode_next(int(state.mode), state.T_int, heat_sp, cool_sp,
                                           p.deadband / 2))
    if mode is HvacMode.HEATING:
        q, load = p.Q_h_heat, p.heater_rating
    elif mode is HvacMode.COOLING:
        q, load = p.Q_h_cool, p.ac_rating
    else:
        q, load = 0.0, 0.0
    eq = T_a + q * p.R_h
    t_new = eq - (eq - state.T_int) * math.exp(-dt / (p.R_h * p.C_h))
    return HvacState(t_new, mode), float(load)


def hvac_series(p: HvacParams, t_amb: np.ndarray, all_away: np.ndarray, dt: float = 60.0,
                initial: HvacState | None = None):
    """Run the HVAC model over aligned ambient/away series.

    Returns (load W, interior temperature after each step, mode per step).
    """
    init = initial or HvacState(p.setpoint_home)
    return kernels.hvac_run(init.T_int, int(init.mode), p.C_h, p.R_h, p.Q_h_heat, p.Q_h_cool,
                            p.setpoint_home, p.setback_offset, p.deadband / 2,
                            p.heater_rating, p.ac_rating,
                            np.ascontiguousarray(t_amb, dtype=float),
                            np.ascontiguousarray(all_away, dtype=np.bool_), float(dt))


# -- water heater -------------------------------------------------------------

@dataclass(frozen=True)
class WaterHeaterParams:
    V: float = 190.0          # L (treated as kg)
    SA: float = 2.0           # m^2
    R_w: float = 1.2          # m^2 degC / W
    C_p: float = 4186.0       # J/(kg degC)
    Q_w: float = 3000.0       # W, element heat input == electric draw
    setpoint: float = 55.0    # degC
    deadband: float = 4.0     # degC, full width
    T_inc: float = 10.0       # degC

    def __post_init__(self):
        for name in ("V", "SA", "R_w", "C_p", "Q_w", "deadband"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.setpoint <= self.T_inc:
            raise ValueError("setpoint must exceed incoming water temperature")

    @property
    def G(self) -> float:
        return self.SA / self.R_w

    @property
    def C_w(self) -> float:
        return self.C_p * self.V

    @property
    def bounds(self) -> tuple[float, float]:
        return self.setpoint - self.deadband / 2, self.setpoint + self.deadband / 2


@dataclass(frozen=True)
class WaterHeaterState:
    T_h: float
    element_on: bool = False

    def __post_init__(self):
        if not math.isfinite(self.T_h):
            raise ValueError("T_h must be finite")


def water_heater_update(state: WaterHeaterState, p: WaterHeaterParams, T_a: float,
                        W_D: float, dt: float = 60.0) -> tuple[WaterHeaterState, float]:
    """One exact step of the single-node tank model with an on/off element.

    ``W_D`` is the hot-water draw in L/s (equal to kg/s).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if W_D < 0:
        raise ValueError("W_D must be non-negative")
    lower, upper = p.bounds
    on = state.T_h < upper if state.element_on else state.T_h < lower
    q = p.Q_w if on else 0.0
    G = p.G
    B = W_D * p.C_p
    r_eff = 1.0 / (G + B)
    decay = math.exp(-dt / (r_eff * p.C_w))
    t_new = state.T_h * decay + (G * T_a + B * p.T_inc + q) * r_eff * (1.0 - decay)
    return WaterHeaterState(t_new, on), float(q)


def water_heater_series(p: WaterHeaterParams, t_amb: np.ndarray, draw: np.ndarray,
                        dt: float = 60.0, initial: WaterHeaterState | None = None):
    """Returns (load W, tank temperature after each step, element state per step)."""
    init = initial or WaterHeaterState(p.setpoint)
    lower, upper = p.bounds
    return kernels.water_heater_run(init.T_h, bool(init.element_on), p.G, p.C_p, p.C_w, p.Q_w,
                                    p.T_inc, lower, upper,
                                    np.ascontiguousarray(t_amb, dtype=float),
                                    np.ascontiguousarray(draw, dtype=float), float(dt))


@dataclass(frozen=True)
class HotWaterEvent:
    activity: ActivityState
    flow_rate: float   # L/min
    duration: int      # minutes

    def __post_init__(self):
        if self.flow_rate < 0:
            raise ValueError("flow_rate must be non-negative")
        if self.duration <= 0:
            raise ValueError("duration must be positive")


DEFAULT_HOT_WATER_EVENTS = {
    ActivityState.GROOMING: HotWaterEvent(ActivityState.GROOMING, 8.0, 8),
    ActivityState.COOKING: HotWaterEvent(ActivityState.COOKING, 0.1, 2),
    ActivityState.DISHWASHING: HotWaterEvent(ActivityState.DISHWASHING, 4.0, 3),
    ActivityState.CLEANING: HotWaterEvent(ActivityState.CLEANING, 1.2, 5),
    ActivityState.LAUNDRY: HotWaterEvent(ActivityState.LAUNDRY, 2.5, 4),
}


def _slot_matrix(sequences) -> np.ndarray:
    rows = [np.asarray(getattr(s, "slots", s)) for s in sequences]
    if len({len(r) for r in rows}) > 1:
        raise ValueError("all sequences must have the same length")
    return np.vstack(rows).astype(np.int8) if rows else np.zeros((0, SLOTS_PER_DAY), np.int8)


def entry_mask(slots: np.ndarray, state: int) -> np.ndarray:
    """True where a person enters ``state``; the first slot counts as an entry."""
    inside = slots == state
    entered = inside.copy()
    entered[:, 1:] &= ~inside[:, :-1]
    return entered


def hot_water_draw_series(sequences, events: Mapping[ActivityState, HotWaterEvent]
                          = DEFAULT_HOT_WATER_EVENTS, rng=None) -> np.ndarray:
    """Minute series of hot-water draw (L/s) from activity entries.

    Every person entering an activity with a draw profile starts one event at
    the first minute of that slot; overlapping events add. Event timing is
    fully determined by the activity chains, so ``rng`` is not consumed.
    """
    slots = _slot_matrix(sequences)
    n_min = slots.shape[1] * MINUTES_PER_SLOT
    flow = np.zeros(n_min)
    for activity, ev in sorted(events.items()):
        _, starts = np.nonzero(entry_mask(slots, int(activity)))
        if starts.size == 0 or ev.flow_rate == 0:
            continue
        starts = starts * MINUTES_PER_SLOT
        diff = np.zeros(n_min + 1, dtype=np.int64)
        np.add.at(diff, starts, 1)
        np.add.at(diff, np.minimum(starts + ev.duration, n_min), -1)
        active = np.cumsum(diff[:-1])
        flow += active * ev.flow_rate
    return flow / 60.0


# -- lighting -----------------------------------------------------------------

DEFAULT_EFFECTIVE_OCCUPANCY = {0: 0.0, 1: 1.0, 2: 1.52, 3: 1.69, 4: 1.78, 5: 1.85}


def geometric_duration_bands(n_bands: int = 9, longest: int = 462) -> tuple:
    """Equal-weight integer bands whose edges grow geometrically from 1 minute."""
    edges = [round(longest ** (k / n_bands)) for k in range(n_bands + 1)]
    bands = []
    for k in range(n_bands):
        lo = edges[k]
        hi = longest if k == n_bands - 1 else max(lo, edges[k + 1] - 1)
        bands.append((lo, hi, 1.0 / n_bands))
    return tuple(bands)


DEFAULT_DURATION_BANDS = geometric_duration_bands()


@dataclass(frozen=True)
class LightingParams:
    """Household lighting.

    ``relative_use_factors`` of None means "draw once per household from
    U[0, 1)"; call :meth:`with_use_factors` before stepping.
    """

    bulb_wattages: tuple[float, ...] = (60.0,) * 30
    relative_use_factors: tuple[float, ...] | None = None
    irradiance_threshold: float = 60.0
    calibration_scalar: float = 0.008
    effective_occupancy_table: Mapping[int, float] = field(
        default_factory=lambda: dict(DEFAULT_EFFECTIVE_OCCUPANCY))
    duration_bands: tuple = DEFAULT_DURATION_BANDS
    _duration_cdf: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "bulb_wattages", tuple(float(w) for w in self.bulb_wattages))
        object.__setattr__(self, "effective_occupancy_table",
                           {int(k): float(v) for k, v in self.effective_occupancy_table.items()})
        object.__setattr__(self, "duration_bands",
                           tuple((int(a), int(b), float(w)) for a, b, w in self.duration_bands))
        if any(w < 0 for w in self.bulb_wattages):
            raise ValueError("bulb wattage must be non-negative")
        if self.relative_use_factors is not None:
            rf = tuple(float(r) for r in self.relative_use_factors)
            if len(rf) != len(self.bulb_wattages):
                raise ValueError("one relative use factor per bulb required")
            if any(r < 0 for r in rf):
                raise ValueError("relative use factors must be non-negative")
            object.__setattr__(self, "relative_use_factors", rf)
        if self.calibration_scalar <= 0:
            raise ValueError("calibration_scalar must be positive")
        table = self.effective_occupancy_table
        keys = sorted(table)
        if keys != list(range(len(keys))) or table[0] != 0.0:
            raise ValueError("effective occupancy table needs keys 0..K with value 0 at 0")
        if any(table[k + 1] < table[k] for k in keys[:-1]):
            raise ValueError("effective occupancy table must be non-decreasing")
        if not self.duration_bands:
            raise ValueError("at least one duration band required")
        if abs(sum(w for _, _, w in self.duration_bands) - 1.0) > 1e-9:
            raise ValueError("duration band weights must sum to 1")
        values, probs = [], []
        for lo, hi, w in self.duration_bands:
            if not 1 <= lo <= hi:
                raise ValueError(f"bad duration band ({lo}, {hi})")
            n = hi - lo + 1
            values.extend(range(lo, hi + 1))
            probs.extend([w / n] * n)
        cdf = np.cumsum(probs)
        cdf /= cdf[-1]
        cdf[-1] = 1.0
        object.__setattr__(self, "_duration_cdf", (np.asarray(values, dtype=np.int64), cdf))

    @property
    def n_bulbs(self) -> int:
        return len(self.bulb_wattages)

    @property
    def bulbs(self) -> list[tuple[float, float]]:
        if self.relative_use_factors is None:
            raise ValueError("relative use factors not drawn yet")
        return list(zip(self.relative_use_factors, self.bulb_wattages))

    def with_use_factors(self, rng) -> "LightingParams":
        if self.relative_use_factors is not None:
            return self
        rng = np.random.default_rng(rng)
        return replace(self, relative_use_factors=tuple(rng.random(self.n_bulbs).tolist()))

    def turn_on_probability(self, irradiance: float, o_eff: float) -> np.ndarray:
        rf = np.asarray(self.relative_use_factors)
        dark = 1.0 if irradiance < self.irradiance_threshold else 0.0
        return np.clip(dark * o_eff * rf * self.calibration_scalar, 0.0, 1.0)

    def duration_from_uniform(self, u: float) -> int:
        values, cdf = self._duration_cdf
        return int(values[np.searchsorted(cdf, u, side="right")])


def effective_occupancy(active_count: int, table: Mapping[int, float] = DEFAULT_EFFECTIVE_OCCUPANCY) -> float:
    if active_count < 0:
        raise ValueError("active_count must be non-negative")
    return float(table[min(int(active_count), max(table))])


def lighting_step(remaining: np.ndarray, p: LightingParams, I: float, O_eff: float,
                  rng) -> tuple[np.ndarray, float]:
    """Advance every bulb by one minute.

    ``remaining`` holds minutes left per bulb (0 = off). Draws two uniforms
    per bulb each call (switch-on, duration), matching :func:`lighting_series`.
    """
    if I < 0 or O_eff < 0:
        raise ValueError("irradiance and effective occupancy must be non-negative")
    remaining = np.array(remaining, dtype=np.int64)
    u_on = rng.random(p.n_bulbs)
    u_dur = rng.random(p.n_bulbs)
    if O_eff == 0:
        return np.zeros_like(remaining), 0.0
    prob = p.turn_on_probability(I, O_eff)
    load = 0.0
    for b in range(p.n_bulbs):
        if remaining[b] > 0:
            remaining[b] -= 1
        elif u_on[b] < prob[b]:
            remaining[b] = p.duration_from_uniform(u_dur[b])
        if remaining[b] > 0:
            load += p.bulb_wattages[b]
    return remaining, load


def lighting_series(p: LightingParams, irradiance: np.ndarray, o_eff: np.ndarray, rng,
                    chunk_minutes: int = 10_080) -> np.ndarray:
    """Minute lighting load; uniforms are drawn chunk by chunk to bound memory."""
    rf = np.asarray(p.relative_use_factors, dtype=float)
    watts = np.asarray(p.bulb_wattages, dtype=float)
    values, cdf = p._duration_cdf
    remaining = np.zeros(p.n_bulbs, dtype=np.int64)
    n = len(irradiance)
    out = np.empty(n)
    irradiance = np.ascontiguousarray(irradiance, dtype=float)
    o_eff = np.ascontiguousarray(o_eff, dtype=float)
    for start in range(0, n, chunk_minutes):
        stop = min(start + chunk_minutes, n)
        u = rng.random((stop - start, 2, p.n_bulbs))
        out[start:stop] = kernels.lighting_run(remaining, rf, watts, p.calibration_scalar,
                                               p.irradiance_threshold, irradiance[start:stop],
                                               o_eff[start:stop], u, cdf, values)
    return out


# -- cold appliances ----------------------------------------------------------

@dataclass(frozen=True)
class ColdApplianceParams:
    name: str
    rating: float                 # W
    target_annual_energy: float   # kWh/yr
    interval: int = 10            # minutes

    def __post_init__(self):
        if self.rating <= 0:
            raise ValueError("rating must be positive")
        if self.interval != 10:
            raise ValueError("cold appliances are sampled in 10-minute intervals")
        if self.target_annual_energy < 0:
            raise ValueError("target_annual_energy must be non-negative")
        if self.target_annual_energy > self.rating * HOURS_PER_YEAR / 1000 + 1e-9:
            raise ValueError(f"{self.name}: target {self.target_annual_energy} kWh/yr exceeds "
                             f"always-on energy {self.rating * HOURS_PER_YEAR / 1000} kWh/yr")


DEFAULT_COLD_APPLIANCES = (
    ColdApplianceParams("refrigerator", 200.0, 600.0),
    ColdApplianceParams("freezer", 50.0, 300.0),
)


def cold_duty_probability(p: ColdApplianceParams) -> float:
    """Per-interval running probability that meets the annual energy target."""
    always_on = p.rating * HOURS_PER_YEAR / 1000.0
    if p.target_annual_energy > always_on + 1e-9:
        raise ValueError("target exceeds always-on energy")
    return min(1.0, p.target_annual_energy / always_on)


def cold_series(appliances: Sequence[ColdApplianceParams], minutes: int, rng) -> np.ndarray:
    """Minute load of all cold appliances; one Bernoulli draw per 10-minute interval."""
    n_int = -(-minutes // 10)
    out = np.zeros(n_int * 10)
    if not appliances:
        return out[:minutes]
    u = rng.random((n_int, len(appliances)))
    q = np.array([cold_duty_probability(a) for a in appliances])
    ratings = np.array([a.rating for a in appliances])
    interval_load = ((u < q) * ratings).sum(axis=1)
    return np.repeat(interval_load, 10)[:minutes]


# -- activity-keyed loads -----------------------------------------------------

@dataclass(frozen=True)
class ActivityLoadMap:
    """Steady per-activity wattage plus scheduled profiles that outlive the activity."""

    steady: Mapping[ActivityState, float] = field(default_factory=lambda: {
        ActivityState.GROOMING: 100.0,
        ActivityState.COOKING: 3500.0,
        ActivityState.CLEANING: 1500.0,
        ActivityState.LEISURE: 120.0,
    })
    events: Mapping[ActivityState, tuple[tuple[float, int], ...]] = field(default_factory=lambda: {
        ActivityState.LAUNDRY: ((425.0, 30), (3400.0, 60)),
        ActivityState.DISHWASHING: ((1800.0, 90),),
    })

    def __post_init__(self):
        steady = {ActivityState(k): float(v) for k, v in self.steady.items()}
        events = {ActivityState(k): tuple((float(w), int(d)) for w, d in v)
                  for k, v in self.events.items()}
        for s in (ActivityState.AWAY, ActivityState.SLEEPING, ActivityState.OTHER):
            if steady.get(s, 0.0) != 0.0:
                raise ValueError(f"{s.name} must draw 0 W")
        if any(w < 0 for w in steady.values()):
            raise ValueError("steady loads must be non-negative")
        for k, prof in events.items():
            if not prof or any(d <= 0 or w < 0 for w, d in prof):
                raise ValueError(f"{k.name}: event phases need positive durations")
        object.__setattr__(self, "steady", steady)
        object.__setattr__(self, "events", events)

    def profile(self, activity: ActivityState) -> np.ndarray:
        """Minute-by-minute wattage of one scheduled run."""
        return np.concatenate([np.full(d, w) for w, d in self.events[activity]])


def activity_electric_load(states: Sequence[int], previous_states: Sequence[int] | None,
                           pending_events: tuple, load_map: ActivityLoadMap
                           ) -> tuple[float, tuple]:
    """Household activity load for one minute.

    ``pending_events`` is a tuple of (activity, minutes elapsed) for runs in
    progress as of the previous minute; pass ``()`` and ``previous_states=None``
    at the start. A run started while the same appliance is busy is ignored.
    """
    queue = []
    for activity, elapsed in pending_events:
        elapsed += 1
        if elapsed < len(load_map.profile(activity)):
            queue.append((activity, elapsed))
    busy = {a for a, _ in queue}
    for k, s in enumerate(states):
        s = ActivityState(int(s))
        entered = previous_states is None or int(previous_states[k]) != s
        if entered and s in load_map.events and s not in busy:
            queue.append((s, 0))
            busy.add(s)
    watts = sum(load_map.steady.get(ActivityState(int(a)), 0.0) for a in set(map(int, states)))
    watts += sum(load_map.profile(a)[e] for a, e in queue)
    return float(watts), tuple(queue)


def activity_load_series(sequences, load_map: ActivityLoadMap) -> np.ndarray:
    """Vectorised :func:`activity_electric_load` over whole activity chains."""
    slots = _slot_matrix(sequences)
    n_slots = slots.shape[1]
    n_min = n_slots * MINUTES_PER_SLOT
    steady_slot = np.zeros(n_slots)
    for activity, watts in sorted(load_map.steady.items()):
        if watts:
            steady_slot += (slots == int(activity)).any(axis=0) * watts
    out = np.repeat(steady_slot, MINUTES_PER_SLOT)
    for activity in sorted(load_map.events):
        prof = load_map.profile(activity)
        entries = np.flatnonzero(entry_mask(slots, int(activity)).any(axis=0)) * MINUTES_PER_SLOT
        free_at = 0
        for start in entries:
            if start < free_at:
                continue
            stop = min(start + len(prof), n_min)
            out[start:stop] += prof[:stop - start]
            free_at = start + len(prof)
    return out


@dataclass(frozen=True)
class ApplianceParams:
    """The fixed-household parameter bundle shared by every simulated home."""

    hvac: HvacParams = HvacParams()
    water_heater: WaterHeaterParams = WaterHeaterParams()
    lighting: LightingParams = LightingParams()
    cold: tuple[ColdApplianceParams, ...] = DEFAULT_COLD_APPLIANCES
    activity_loads: ActivityLoadMap = ActivityLoadMap()
    hot_water_events: Mapping[ActivityState, HotWaterEvent] = field(
        default_factory=lambda: dict(DEFAULT_HOT_WATER_EVENTS))
