"""Scenario configuration.

A scenario is one YAML mapping. Every key is optional; omitted keys take the
shipped defaults, which :func:`default_config_dict` lists in full::

    seed: 42                      # unsigned 64-bit
    region: TX
    n_households: 10
    start_date: 2019-01-01
    days: 7
    inputs:                       # paths relative to the config file
      activity_logs: activity_logs.csv
      matrices: null              # pre-calibrated archive; wins over activity_logs
      census: census.csv
      weather: weather_2019.csv
      max_weather_gap_minutes: 180
    output:
      household_profiles: true    # one minute CSV per household
    analysis:
      household_size: 2           # size for the fixed-size bracket comparison
    label_schema: {age_bins: [...], ...}
    params:
      hvac: {C_h: 40000, ...}
      water_heater: {...}
      lighting: {...}
      cold: [{name: refrigerator, rating: 200, target_annual_energy: 600}, ...]
      activity_loads: {steady: {cooking: 3500, ...}, events: {laundry: [[425, 30], ...]}}
      hot_water: {grooming: {flow_rate: 8.0, duration: 8}, ...}

Nested mappings merge key by key over the defaults; lists replace wholesale.
Unknown keys are rejected.
"""

from __future__ import annotations

import copy
import dataclasses
import datetime as dt
import os
from dataclasses import dataclass, field

import yaml

from .appliances import (
    ActivityLoadMap,
    ApplianceParams,
    ColdApplianceParams,
    HotWaterEvent,
    HvacParams,
    LightingParams,
    WaterHeaterParams,
)
from .labels import DEFAULT_SCHEMA, ActivityState, LabelSchema


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    activity_logs: str | None = None
    matrices: str | None = None
    census: str | None = None
    weather: str | None = None
    max_weather_gap_minutes: float = 180.0
    region: str = "TX"
    n_households: int = 10
    start_date: dt.date = dt.date(2019, 1, 1)
    days: int = 365
    seed: int = 42
    household_profiles: bool = True
    household_size: int = 2
    label_schema: LabelSchema = DEFAULT_SCHEMA
    params: ApplianceParams = field(default_factory=ApplianceParams)

    def validate(self) -> "ScenarioConfig":
        if self.n_households < 1:
            raise ConfigError(f"n_households must be >= 1 (got {self.n_households})")
        if self.days < 1:
            raise ConfigError(f"days must be >= 1 (got {self.days})")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer (got {self.seed})")
        if self.household_size < 1:
            raise ConfigError(f"analysis.household_size must be >= 1 (got {self.household_size})")
        return self

    def require(self, *names: str) -> None:
        for name in names:
            path = getattr(self, name)
            if path is None:
                raise ConfigError(f"inputs.{name} is required for this command")
            if not os.path.exists(path):
                raise ConfigError(f"inputs.{name}: file not found: {path}")


def _state_key(s: ActivityState) -> str:
    return s.name.lower()


def _parse_state(key) -> ActivityState:
    if isinstance(key, int):
        return ActivityState(key)
    try:
        return ActivityState[str(key).upper()]
    except KeyError:
        raise ConfigError(f"unknown activity state {key!r}") from None


def _fields(cls) -> list[str]:
    return [f.name for f in dataclasses.fields(cls) if f.init and not f.name.startswith("_")]


def params_to_dict(p: ApplianceParams) -> dict:
    light = p.lighting
    return {
        "hvac": {k: getattr(p.hvac, k) for k in _fields(HvacParams)},
        "water_heater": {k: getattr(p.water_heater, k) for k in _fields(WaterHeaterParams)},
        "lighting": {
            "bulb_wattages": list(light.bulb_wattages),
            "relative_use_factors": (None if light.relative_use_factors is None
                                     else list(light.relative_use_factors)),
            "irradiance_threshold": light.irradiance_threshold,
            "calibration_scalar": light.calibration_scalar,
            "effective_occupancy_table": dict(light.effective_occupancy_table),
            "duration_bands": [list(b) for b in light.duration_bands],
        },
        "cold": [{"name": c.name, "rating": c.rating,
                  "target_annual_energy": c.target_annual_energy} for c in p.cold],
        "activity_loads": {
            "steady": {_state_key(s): w for s, w in sorted(p.activity_loads.steady.items())},
            "events": {_state_key(s): [list(ph) for ph in prof]
                       for s, prof in sorted(p.activity_loads.events.items())},
        },
        "hot_water": {_state_key(s): {"flow_rate": e.flow_rate, "duration": e.duration}
                      for s, e in sorted(p.hot_water_events.items())},
    }


def _build(cls, d, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping")
    unknown = set(d) - set(_fields(cls))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def params_from_dict(d: dict) -> ApplianceParams:
    unknown = set(d) - {"hvac", "water_heater", "lighting", "cold", "activity_loads", "hot_water"}
    if unknown:
        raise ConfigError(f"params: unknown keys {sorted(unknown)}")
    light = dict(d["lighting"])
    if light.get("duration_bands") is not None:
        light["duration_bands"] = tuple(tuple(b) for b in light["duration_bands"])
    if light.get("bulb_wattages") is not None:
        light["bulb_wattages"] = tuple(light["bulb_wattages"])
    if light.get("relative_use_factors") is not None:
        light["relative_use_factors"] = tuple(light["relative_use_factors"])
    cold = tuple(_build(ColdApplianceParams, c, f"params.cold[{k}]")
                 for k, c in enumerate(d["cold"]))
    al = d["activity_loads"]
    if set(al) - {"steady", "events"}:
        raise ConfigError("params.activity_loads: only 'steady' and 'events' are allowed")
    try:
        loads = ActivityLoadMap(
            steady={_parse_state(k): float(v) for k, v in al["steady"].items()},
            events={_parse_state(k): tuple(tuple(ph) for ph in v)
                    for k, v in al["events"].items() if v})
        hot_water = {}
        for k, v in d["hot_water"].items():
            if v is None:
                continue
            s = _parse_state(k)
            hot_water[s] = HotWaterEvent(s, float(v["flow_rate"]), int(v["duration"]))
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"params: {exc}") from None
    return ApplianceParams(
        hvac=_build(HvacParams, d["hvac"], "params.hvac"),
        water_heater=_build(WaterHeaterParams, d["water_heater"], "params.water_heater"),
        lighting=_build(LightingParams, light, "params.lighting"),
        cold=cold, activity_loads=loads, hot_water_events=hot_water)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return {
        "seed": cfg.seed,
        "region": cfg.region,
        "n_households": cfg.n_households,
        "start_date": cfg.start_date.isoformat(),
        "days": cfg.days,
        "inputs": {"activity_logs": cfg.activity_logs, "matrices": cfg.matrices,
                   "census": cfg.census, "weather": cfg.weather,
                   "max_weather_gap_minutes": cfg.max_weather_gap_minutes},
        "output": {"household_profiles": cfg.household_profiles},
        "analysis": {"household_size": cfg.household_size},
        "label_schema": cfg.label_schema.to_dict(),
        "params": params_to_dict(cfg.params),
    }


def default_config_dict() -> dict:
    return config_to_dict(ScenarioConfig())


_OPEN_MAPS = {("params", "activity_loads", "steady"), ("params", "activity_loads", "events"),
              ("params", "hot_water"), ("params", "lighting", "effective_occupancy_table")}


def _merge(base: dict, override: dict, path=()) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        here = path + (key,)
        if path not in _OPEN_MAPS and key not in base:
            raise ConfigError(f"unknown config key {'.'.join(map(str, here))}")
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value, here)
        else:
            out[key] = value
    return out


def config_from_dict(d: dict, base_dir: str = ".") -> ScenarioConfig:
    merged = _merge(default_config_dict(), d or {})
    inputs = merged["inputs"]

    def resolve(path):
        if path is None:
            return None
        return os.path.abspath(os.path.join(base_dir, os.path.expanduser(str(path))))

    start = merged["start_date"]
    try:
        start = start if isinstance(start, dt.date) else dt.date.fromisoformat(str(start))
        occupancy = merged["params"]["lighting"]["effective_occupancy_table"]
        merged["params"]["lighting"]["effective_occupancy_table"] = {
            int(k): float(v) for k, v in occupancy.items()}
        cfg = ScenarioConfig(
            activity_logs=resolve(inputs["activity_logs"]),
            matrices=resolve(inputs["matrices"]),
            census=resolve(inputs["census"]),
            weather=resolve(inputs["weather"]),
            max_weather_gap_minutes=float(inputs["max_weather_gap_minutes"]),
            region=str(merged["region"]),
            n_households=int(merged["n_households"]),
            start_date=start,
            days=int(merged["days"]),
            seed=int(merged["seed"]),
            household_profiles=bool(merged["output"]["household_profiles"]),
            household_size=int(merged["analysis"]["household_size"]),
            label_schema=LabelSchema.from_dict(merged["label_schema"]),
            params=params_from_dict(merged["params"]),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path: str | None, **overrides) -> ScenarioConfig:
    """Read a scenario file; ``overrides`` replace top-level keys (e.g. seed)."""
    if path is None:
        raw, base = {}, "."
    else:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        base = os.path.dirname(os.path.abspath(path))
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(raw, base)


def dump_config(cfg: ScenarioConfig, target) -> None:
    """Write the fully resolved configuration (re-loadable by :func:`load_config`)."""
    text = yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None,
                          width=100)
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        target.write(text)
