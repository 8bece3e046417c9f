"""Compiled inner loops for year-long, minute-step simulation.

Each kernel mirrors a pure step function in :mod:`resload.activity` or
:mod:`resload.appliances` and consumes pre-drawn uniforms so results do not
depend on numba's own RNG. The test suite checks kernel/step equivalence.
"""

import math

import numpy as np
from numba import njit

MODE_OFF = 0
MODE_HEATING = 1
MODE_COOLING = 2


@njit(cache=True)
def _pick(cum, u):
    # cum is a cumulative row ending at exactly 1.0; u in [0, 1)
    n = cum.shape[0]
    for j in range(n):
        if u < cum[j]:
            return j
    return n - 1


@njit(cache=True)
def sample_chain(cum_trans, cum_init, day_idx, u):
    """Sample a multi-day 10-minute activity chain.

    cum_trans: (2, 24, 9, 9) cumulative transition rows
    cum_init: (2, 9) cumulative midnight distribution
    day_idx: (days,) 0 weekday / 1 weekend
    u: (days * 144,) uniforms
    """
    n = u.shape[0]
    out = np.empty(n, dtype=np.int8)
    state = _pick(cum_init[day_idx[0]], u[0])
    out[0] = state
    for k in range(1, n):
        hour = ((k - 1) % 144) // 6
        d = day_idx[k // 144]
        state = _pick(cum_trans[d, hour, state], u[k])
        out[k] = state
    return out


@njit(cache=True)
def hvac_mode_next(mode, t_int, heat_sp, cool_sp, half_band):
    if mode == MODE_HEATING:
        return MODE_OFF if t_int >= heat_sp else MODE_HEATING
    if mode == MODE_COOLING:
        return MODE_OFF if t_int <= cool_sp else MODE_COOLING
    if t_int < heat_sp - half_band:
        return MODE_HEATING
    if t_int > cool_sp + half_band:
        return MODE_COOLING
    return MODE_OFF


@njit(cache=True)
def hvac_run(t0, mode0, c_h, r_h, q_heat, q_cool, setpoint, setback, half_band,
             heater_rating, ac_rating, t_amb, all_away, dt):
    n = t_amb.shape[0]
    load = np.empty(n)
    temps = np.empty(n)
    modes = np.empty(n, dtype=np.int8)
    decay = math.exp(-dt / (r_h * c_h))
    t = t0
    mode = mode0
    for m in range(n):
        if all_away[m]:
            heat_sp = setpoint - setback
            cool_sp = setpoint + setback
        else:
            heat_sp = setpoint
            cool_sp = setpoint
        mode = hvac_mode_next(mode, t, heat_sp, cool_sp, half_band)
        if mode == MODE_HEATING:
            q = q_heat
            load[m] = heater_rating
        elif mode == MODE_COOLING:
            q = q_cool
            load[m] = ac_rating
        else:
            q = 0.0
            load[m] = 0.0
        eq = t_amb[m] + q * r_h
        t = eq - (eq - t) * decay
        temps[m] = t
        modes[m] = mode
    return load, temps, modes


@njit(cache=True)
def water_heater_run(t0, on0, g, c_p, c_w, q_w, t_inc, lower, upper,
                     t_amb, draw, dt):
    n = t_amb.shape[0]
    load = np.empty(n)
    temps = np.empty(n)
    states = np.empty(n, dtype=np.bool_)
    t = t0
    on = on0
    for m in range(n):
        if on:
            on = t < upper
        else:
            on = t < lower
        q = q_w if on else 0.0
        b = draw[m] * c_p
        r_eff = 1.0 / (g + b)
        decay = math.exp(-dt / (r_eff * c_w))
        t = t * decay + (g * t_amb[m] + b * t_inc + q) * r_eff * (1.0 - decay)
        load[m] = q
        temps[m] = t
        states[m] = on
    return load, temps, states


@njit(cache=True)
def lighting_run(remaining, rf, watts, cs, i_max, irradiance, o_eff, u,
                 dur_cum, dur_values):
    """Advance every bulb minute by minute; ``remaining`` is updated in place.

    u: (minutes, 2, bulbs) with [:, 0] switch-on draws and [:, 1] duration draws.
    """
    n = irradiance.shape[0]
    nb = remaining.shape[0]
    load = np.zeros(n)
    for m in range(n):
        occ = o_eff[m]
        if occ <= 0.0:
            for b in range(nb):
                remaining[b] = 0
            continue
        base = occ * cs if irradiance[m] < i_max else 0.0
        total = 0.0
        for b in range(nb):
            if remaining[b] > 0:
                remaining[b] -= 1
            else:
                p = base * rf[b]
                if p > 1.0:
                    p = 1.0
                if u[m, 0, b] < p:
                    remaining[b] = dur_values[_pick(dur_cum, u[m, 1, b])]
            if remaining[b] > 0:
                total += watts[b]
        load[m] = total
    return load
