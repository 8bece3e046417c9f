import math

import numpy as np
import pytest

from resload.activity import OccupancySequence, sample_activity_sequence
from resload.appliances import (
    DEFAULT_DURATION_BANDS,
    DEFAULT_HOT_WATER_EVENTS,
    ActivityLoadMap,
    ColdApplianceParams,
    HotWaterEvent,
    HvacMode,
    HvacParams,
    HvacState,
    LightingParams,
    WaterHeaterParams,
    WaterHeaterState,
    activity_electric_load,
    activity_load_series,
    cold_duty_probability,
    cold_series,
    effective_occupancy,
    entry_mask,
    geometric_duration_bands,
    hot_water_draw_series,
    hvac_series,
    hvac_update,
    lighting_series,
    lighting_step,
    water_heater_series,
    water_heater_update,
)
from resload.labels import SLOTS_PER_DAY, ActivityState as S, PersonLabel


def seq(*slots, days=1):
    """A sequence that is Sleeping except for {slot: state} pairs."""
    out = np.full(SLOTS_PER_DAY * days, int(S.SLEEPING), dtype=np.int8)
    for k, state in slots:
        out[k] = int(state)
    return OccupancySequence(0, out)


def rk4(f, y, h, n):
    for _ in range(n):
        k1 = f(y)
        k2 = f(y + h * k1 / 2)
        k3 = f(y + h * k2 / 2)
        k4 = f(y + h * k3)
        y += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    return y


# -- HVAC --------------------------------------------------------------------

def test_hvac_fixed_point():
    p = HvacParams()
    T_a = 3.0
    eq = T_a + p.Q_h_heat * p.R_h
    # a unit already heating and far below its setpoint keeps heating
    state = HvacState(eq, HvacMode.HEATING)
    p_hot = HvacParams(setpoint_home=200.0)
    for dt in (1.0, 60.0, 3600.0):
        nxt, load = hvac_update(state, p_hot, T_a, False, dt)
        assert nxt.T_int == pytest.approx(eq, abs=1e-12)
        assert nxt.mode is HvacMode.HEATING and load == p.heater_rating


def test_hvac_free_running_example():
    nxt, load = hvac_update(HvacState(21.0), HvacParams(), 30.0, False, 60.0)
    # 30 - 9 exp(-60/7200), independently evaluated
    assert nxt.T_int == pytest.approx(21.07468836625012, abs=1e-12)
    assert nxt.T_int == pytest.approx(30 - 9 * math.exp(-60 / 7200), abs=1e-12)
    assert nxt.mode is HvacMode.OFF and load == 0.0


def test_hvac_long_step_reaches_ambient():
    nxt, _ = hvac_update(HvacState(21.0), HvacParams(), 21.5, False, 1e7)
    assert nxt.T_int == pytest.approx(21.5, abs=1e-9)


def test_hvac_holds_off_inside_band():
    p = HvacParams()
    for t in (20.2, 21.0, 21.9):
        nxt, load = hvac_update(HvacState(t), p, 21.0, False)
        assert nxt.mode is HvacMode.OFF and load == 0.0


def test_hvac_switch_thresholds_and_setback():
    p = HvacParams()
    assert p.bounds(False) == (20.0, 22.0)
    assert p.setpoints(True) == (16.0, 26.0)
    assert p.bounds(True) == (15.0, 27.0)
    assert hvac_update(HvacState(19.9), p, 0.0, False)[0].mode is HvacMode.HEATING
    assert hvac_update(HvacState(19.9), p, 0.0, True)[0].mode is HvacMode.OFF
    assert hvac_update(HvacState(22.1), p, 35.0, False)[0].mode is HvacMode.COOLING
    assert hvac_update(HvacState(20.5, HvacMode.HEATING), p, 0.0, False)[0].mode is HvacMode.HEATING
    assert hvac_update(HvacState(21.0, HvacMode.HEATING), p, 0.0, False)[0].mode is HvacMode.OFF
    assert hvac_update(HvacState(21.0, HvacMode.COOLING), p, 35.0, False)[0].mode is HvacMode.OFF


def test_hvac_param_validation():
    with pytest.raises(ValueError):
        HvacParams(Q_h_cool=10.0)
    with pytest.raises(ValueError):
        HvacParams(R_h=0.0)
    with pytest.raises(ValueError):
        hvac_update(HvacState(21.0), HvacParams(), 10.0, False, dt=0)


def ambient_day(rng, minutes=1440):
    hours = np.arange(minutes) / 60.0
    base = rng.uniform(-15.0, 37.0)
    diurnal = rng.uniform(0.0, 8.0) * np.cos(2 * np.pi * (hours - 15) / 24)
    walk = np.cumsum(rng.normal(0.0, 0.04, minutes))
    return np.clip(base + diurnal + walk, -20.0, 42.0)


def away_flags(rng, minutes):
    slots = -(-minutes // 10)
    flags = np.empty(slots, dtype=bool)
    state = bool(rng.random() < 0.5)
    for k in range(slots):
        if rng.random() < 0.03:
            state = not state
        flags[k] = state
    return np.repeat(flags, 10)[:minutes]


def hvac_oracle_max_error(p, t_amb, away):
    """Max |exact - RK4(1 s)| when the oracle replays the implementation's modes."""
    _, temps, modes = hvac_series(p, t_amb, away)
    q_of = {0: 0.0, 1: p.Q_h_heat, 2: p.Q_h_cool}
    t = p.setpoint_home
    worst = 0.0
    for m in range(len(t_amb)):
        q, ta = q_of[int(modes[m])], t_amb[m]
        t = rk4(lambda y: ((ta - y) / p.R_h + q) / p.C_h, t, 1.0, 60)
        worst = max(worst, abs(t - temps[m]))
    return worst


def test_hvac_matches_one_second_integration():
    rng = np.random.default_rng(11)
    p = HvacParams()
    t_amb = ambient_day(rng)
    assert hvac_oracle_max_error(p, t_amb, away_flags(rng, 1440)) < 0.01


def test_hvac_kernel_matches_step_function():
    rng = np.random.default_rng(5)
    p = HvacParams()
    t_amb = np.concatenate([ambient_day(rng), ambient_day(rng)])
    away = away_flags(rng, t_amb.size)
    load, temps, modes = hvac_series(p, t_amb, away)
    state = HvacState(p.setpoint_home)
    for m in range(t_amb.size):
        state, w = hvac_update(state, p, t_amb[m], bool(away[m]))
        assert int(state.mode) == modes[m] and w == load[m]
        assert state.T_int == pytest.approx(temps[m], abs=1e-12)
    assert set(np.unique(modes)) >= {0}


# -- water heater ------------------------------------------------------------

def test_water_heater_equilibrium():
    # element off (inside the band), no draw, tank at ambient
    p = WaterHeaterParams(setpoint=60.0)
    nxt, q = water_heater_update(WaterHeaterState(58.5, False), p, 58.5, 0.0, 60.0)
    assert q == 0.0
    assert nxt.T_h == pytest.approx(58.5, abs=1e-12)


def test_water_heater_small_step_continuity():
    p = WaterHeaterParams()
    for dt in (1e-3, 1e-6, 1e-9):
        nxt, _ = water_heater_update(WaterHeaterState(54.0), p, 21.0, 0.2, dt)
        assert abs(nxt.T_h - 54.0) <= 0.1 * dt


def test_water_heater_example():
    p = WaterHeaterParams()
    nxt, q = water_heater_update(WaterHeaterState(55.0, True), p, 21.0, 8.0 / 60.0, 60.0)
    assert q == 3000.0 and nxt.element_on
    # independent closed-form value, cross-checked against RK4 at 1 s
    assert nxt.T_h == pytest.approx(53.36213432442354, abs=1e-10)
    G, B, C = 2 / 1.2, 8 / 60 * 4186, 4186 * 190
    ode = rk4(lambda T: (G * (21 - T) + B * (10 - T) + 3000) / C, 55.0, 1.0, 60)
    assert abs(nxt.T_h - ode) < 0.01


def test_water_heater_element_hysteresis():
    p = WaterHeaterParams()
    lower, upper = p.bounds
    assert (lower, upper) == (53.0, 57.0)
    assert water_heater_update(WaterHeaterState(52.9), p, 21, 0)[0].element_on
    assert not water_heater_update(WaterHeaterState(53.5), p, 21, 0)[0].element_on
    assert water_heater_update(WaterHeaterState(56.9, True), p, 21, 0)[0].element_on
    assert not water_heater_update(WaterHeaterState(57.0, True), p, 21, 0)[0].element_on
    with pytest.raises(ValueError):
        water_heater_update(WaterHeaterState(50.0), p, 21, -1.0)


def test_water_heater_matches_one_second_integration():
    rng = np.random.default_rng(3)
    p = WaterHeaterParams()
    t_amb = np.full(1440, 21.0) + rng.normal(0, 1, 1440)
    draw = np.zeros(1440)
    for start in rng.integers(0, 1430, 12):
        draw[start:start + int(rng.integers(2, 9))] += rng.choice([8.0, 4.0, 1.2]) / 60.0
    _, temps, states = water_heater_series(p, t_amb, draw)
    assert states.any() and not states.all()
    t, worst = p.setpoint, 0.0
    for m in range(1440):
        q, ta, b = (p.Q_w if states[m] else 0.0), t_amb[m], draw[m] * p.C_p
        t = rk4(lambda y: (p.G * (ta - y) + b * (p.T_inc - y) + q) / p.C_w, t, 1.0, 60)
        worst = max(worst, abs(t - temps[m]))
    assert worst < 0.01


def test_water_heater_kernel_matches_step_function():
    rng = np.random.default_rng(8)
    p = WaterHeaterParams()
    t_amb = rng.uniform(15, 25, 2000)
    draw = np.where(rng.random(2000) < 0.1, rng.uniform(0, 0.2, 2000), 0.0)
    load, temps, states = water_heater_series(p, t_amb, draw)
    state = WaterHeaterState(p.setpoint)
    for m in range(2000):
        state, q = water_heater_update(state, p, t_amb[m], draw[m])
        assert state.element_on == states[m] and q == load[m]
        assert state.T_h == pytest.approx(temps[m], abs=1e-12)


# -- hot-water draws ---------------------------------------------------------

def test_no_draw_when_away_or_asleep():
    s = OccupancySequence(0, np.array([0, 1] * 72, dtype=np.int8))
    assert (hot_water_draw_series([s, seq()]) == 0).all()


def test_single_shower_event():
    w = hot_water_draw_series([seq((42, S.GROOMING))])
    m = 42 * 10
    expected = np.zeros(1440)
    expected[m:m + 8] = 8.0 / 60.0
    np.testing.assert_array_equal(w, expected)


def test_simultaneous_dishwashing_superpose():
    a = seq((100, S.DISHWASHING), (101, S.DISHWASHING))
    b = seq((100, S.DISHWASHING))
    w = hot_water_draw_series([a, b])
    assert w[1000:1003].tolist() == [8.0 / 60.0] * 3
    assert (w[1003:] == 0).all() and (w[:1000] == 0).all()


def test_draws_truncate_at_horizon_and_first_slot_counts():
    s = seq((0, S.LAUNDRY), (143, S.GROOMING))
    w = hot_water_draw_series([s])
    assert w[:4].tolist() == [2.5 / 60] * 4 and w[4] == 0
    assert (w[1430:1438] == 8.0 / 60).all() and w.size == 1440


def test_custom_event_table():
    events = {S.COOKING: HotWaterEvent(S.COOKING, 6.0, 10)}
    w = hot_water_draw_series([seq((5, S.COOKING), (6, S.COOKING), (7, S.COOKING))], events)
    assert w.sum() == pytest.approx(6.0 / 60 * 10)
    assert set(DEFAULT_HOT_WATER_EVENTS) == {S.GROOMING, S.COOKING, S.DISHWASHING,
                                           S.CLEANING, S.LAUNDRY}


def test_entry_mask():
    slots = np.array([[3, 3, 1, 3], [1, 3, 3, 3]])
    np.testing.assert_array_equal(entry_mask(slots, 3),
                                  [[True, False, False, True], [False, True, False, False]])


# -- lighting ----------------------------------------------------------------

def test_effective_occupancy_table():
    assert effective_occupancy(0) == 0.0
    assert effective_occupancy(1) == 1.0
    assert effective_occupancy(6) == effective_occupancy(5) == 1.85
    with pytest.raises(ValueError):
        effective_occupancy(-1)


def test_turn_on_probability_example():
    p = LightingParams(bulb_wattages=(60.0,), relative_use_factors=(1.0,))
    assert p.turn_on_probability(0.0, 1.52)[0] == pytest.approx(0.01216, abs=1e-15)
    assert p.turn_on_probability(60.0, 1.52)[0] == 0.0   # daylight
    assert p.turn_on_probability(0.0, 1e6)[0] == 1.0     # clamped


def test_probabilities_bounded_and_monotone():
    rng = np.random.default_rng(0)
    p = LightingParams().with_use_factors(rng)
    prev = np.zeros(p.n_bulbs)
    for o in np.linspace(0, 500, 60):
        prob = p.turn_on_probability(10.0, o)
        assert ((prob >= 0) & (prob <= 1)).all()
        assert (prob >= prev).all()
        prev = prob


def test_daylight_keeps_lights_off():
    p = LightingParams().with_use_factors(0)
    remaining = np.zeros(p.n_bulbs, dtype=np.int64)
    rng = np.random.default_rng(0)
    for _ in range(50):
        remaining, load = lighting_step(remaining, p, 400.0, 1.85, rng)
        assert load == 0.0
    assert lighting_series(p, np.full(500, 60.0), np.full(500, 1.5), rng).sum() == 0


def test_zero_occupancy_switches_everything_off():
    p = LightingParams().with_use_factors(1)
    remaining = np.full(p.n_bulbs, 30, dtype=np.int64)
    remaining, load = lighting_step(remaining, p, 0.0, 0.0, np.random.default_rng(0))
    assert load == 0.0 and (remaining == 0).all()


def test_duration_bands():
    bands = geometric_duration_bands()
    assert bands == DEFAULT_DURATION_BANDS
    assert [(a, b) for a, b, _ in bands] == [(1, 1), (2, 3), (4, 7), (8, 14), (15, 29),
                                             (30, 59), (60, 117), (118, 233), (234, 462)]
    assert sum(w for *_, w in bands) == pytest.approx(1.0)
    p = LightingParams()
    assert p.duration_from_uniform(0.0) == 1
    assert p.duration_from_uniform(0.999999999) == 462
    u = np.random.default_rng(4).random(90_000)
    d = np.array([p.duration_from_uniform(x) for x in u])
    for lo, hi, w in bands:
        assert ((d >= lo) & (d <= hi)).mean() == pytest.approx(w, abs=0.006)


def test_lighting_param_validation():
    with pytest.raises(ValueError):
        LightingParams(duration_bands=((1, 3, 0.5),))
    with pytest.raises(ValueError):
        LightingParams(effective_occupancy_table={0: 0.0, 1: 2.0, 2: 1.0})
    with pytest.raises(ValueError):
        LightingParams(bulb_wattages=(60.0, 60.0), relative_use_factors=(1.0,))
    with pytest.raises(ValueError):
        LightingParams().bulbs


def test_use_factors_drawn_once():
    p = LightingParams()
    a = p.with_use_factors(np.random.default_rng(1))
    b = p.with_use_factors(np.random.default_rng(1))
    assert a.relative_use_factors == b.relative_use_factors
    assert all(0 <= r < 1 for r in a.relative_use_factors)
    assert a.with_use_factors(2) is a
    assert len(a.bulbs) == 30


def test_lighting_kernel_matches_step_function():
    rng = np.random.default_rng(9)
    p = LightingParams(calibration_scalar=0.05).with_use_factors(rng)
    n = 1500
    irr = np.where(np.arange(n) % 700 < 400, 0.0, 300.0)
    occ = np.repeat(rng.choice([0.0, 1.0, 1.52, 1.85], n // 10), 10)
    series = lighting_series(p, irr, occ, np.random.default_rng(42), chunk_minutes=333)
    step_rng = np.random.default_rng(42)
    remaining = np.zeros(p.n_bulbs, dtype=np.int64)
    for m in range(n):
        remaining, load = lighting_step(remaining, p, irr[m], occ[m], step_rng)
        assert load == series[m]
    assert series.max() > 0


def test_lighting_on_fraction_matches_renewal_oracle():
    # on for D minutes, one forced off minute, then Geometric(p) waiting
    p = LightingParams(relative_use_factors=(1.0,) * 30)
    n = 200_000
    load = lighting_series(p, np.zeros(n), np.ones(n), np.random.default_rng(12))
    prob = p.calibration_scalar
    mean_d = sum(w * (lo + hi) / 2 for lo, hi, w in p.duration_bands)
    expected = mean_d / (mean_d + 1 + (1 - prob) / prob)
    assert load.mean() / (60.0 * 30) == pytest.approx(expected, rel=0.05)


# -- cold appliances ---------------------------------------------------------

def test_cold_duty_probability_examples():
    assert cold_duty_probability(ColdApplianceParams("f", 200.0, 200 * 8.76)) == 1.0
    assert cold_duty_probability(ColdApplianceParams("f", 200.0, 0.0)) == 0.0
    assert cold_duty_probability(ColdApplianceParams("f", 200.0, 876.0)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        ColdApplianceParams("f", 200.0, 2000.0)


def test_cold_series_shape_and_intervals():
    a = ColdApplianceParams("f", 200.0, 876.0)
    w = cold_series([a], 1445, np.random.default_rng(0))
    assert w.size == 1445
    blocks = w[:1440].reshape(-1, 10)
    assert (blocks == blocks[:, :1]).all()
    assert set(np.unique(w)) <= {0.0, 200.0}
    assert cold_series([], 100, np.random.default_rng(0)).sum() == 0


def test_cold_annual_energy_converges():
    a = ColdApplianceParams("refrigerator", 200.0, 600.0)
    rng = np.random.default_rng(7)
    years = [cold_series([a], 525_600, rng).sum() / 60_000 for _ in range(20)]
    assert np.mean(years) == pytest.approx(600.0, rel=0.02)


# -- activity loads ----------------------------------------------------------

def test_cooking_adds_steady_load():
    w = activity_load_series([seq((50, S.COOKING))], ActivityLoadMap())
    assert w[500:510].tolist() == [3500.0] * 10
    assert w[490] == 0.0 and w[510] == 0.0


def test_shared_leisure_counts_once():
    w = activity_load_series([seq((50, S.LEISURE)), seq((50, S.LEISURE))], ActivityLoadMap())
    assert w[500] == 120.0


def test_laundry_schedule_outlives_activity():
    w = activity_load_series([seq((50, S.LAUNDRY), (51, S.LEISURE), (52, S.LEISURE))],
                             ActivityLoadMap())
    m = 500
    assert (w[m:m + 10] == 425.0).all()
    assert (w[m + 10:m + 30] == 425.0 + 120.0).all()
    assert (w[m + 30:m + 90] == 3400.0).all()
    assert (w[m + 90:] == 0.0).all()


def test_busy_appliance_ignores_new_entry():
    # second dishwashing entry at +40 min while the 90-minute run is active
    s = seq((10, S.DISHWASHING), (14, S.DISHWASHING))
    w = activity_load_series([s], ActivityLoadMap())
    assert w.sum() == 1800.0 * 90
    s2 = seq((10, S.DISHWASHING), (19, S.DISHWASHING))   # starts exactly when free
    assert activity_load_series([s2], ActivityLoadMap()).sum() == 1800.0 * 180


def test_activity_map_validation():
    with pytest.raises(ValueError):
        ActivityLoadMap(steady={S.AWAY: 10.0})
    with pytest.raises(ValueError):
        ActivityLoadMap(events={S.LAUNDRY: ((100.0, 0),)})
    assert ActivityLoadMap().profile(S.LAUNDRY).size == 90


def test_activity_step_matches_series(bundled_matrices):
    rng = np.random.default_rng(21)
    labels = [PersonLabel("25-44", "employed", "office", "parent"),
              PersonLabel("25-44", "not-employed", "none", "parent"),
              PersonLabel("15-24", "not-employed", "none", "non-parent")]
    cal = ["weekday", "weekend"]
    seqs = [sample_activity_sequence(bundled_matrices, lab, cal, rng, k)
            for k, lab in enumerate(labels)]
    lm = ActivityLoadMap()
    series = activity_load_series(seqs, lm)
    slots = np.vstack([s.slots for s in seqs])
    queue, prev = (), None
    for m in range(series.size):
        states = slots[:, m // 10]
        w, queue = activity_electric_load(states, prev, queue, lm)
        prev = states
        assert w == series[m], m
    assert series.max() >= 3500.0
