"""Command-line front end: ``resload {calibrate,simulate,analyze,pipeline}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from importlib import resources

import numpy as np

from . import analysis
from .activity import (
    build_transition_matrices,
    calibration_report,
    ingest_activity_logs,
    load_matrices,
    save_matrices,
)
from .census import ingest_census, populate_households
from .config import ConfigError, ScenarioConfig, dump_config, load_config
from .household import Household, format_values
from .labels import MINUTES_PER_DAY, IngestError
from .runner import run_population
from .weather import WeatherCoverageError, load_weather

log = logging.getLogger("resload")

MATRICES_FILE = "matrices.csv"
HOUSEHOLDS_FILE = "households.csv"
DAILY_FILE = "household_daily.csv"
EFFECTIVE_CONFIG = "effective_config.yaml"


def bundled_scenario() -> str:
    return str(resources.files("resload") / "data" / "scenario.yaml")


def _write_effective(cfg: ScenarioConfig, out: str) -> None:
    dump_config(cfg, os.path.join(out, EFFECTIVE_CONFIG))


def cmd_calibrate(cfg: ScenarioConfig, out: str, workers: int) -> None:
    cfg.require("activity_logs")
    records = ingest_activity_logs(cfg.activity_logs, cfg.label_schema)
    matrices = build_transition_matrices(records, cfg.label_schema)
    save_matrices(matrices, os.path.join(out, MATRICES_FILE))
    report = calibration_report(matrices, records)
    with open(os.path.join(out, "calibration_report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("calibrated %d respondent-days", len(records))


def _matrices_for(cfg: ScenarioConfig, out: str):
    if cfg.matrices is not None:
        cfg.require("matrices")
        return load_matrices(cfg.matrices)
    cfg.require("activity_logs")
    return build_transition_matrices(ingest_activity_logs(cfg.activity_logs, cfg.label_schema),
                                     cfg.label_schema)


def cmd_simulate(cfg: ScenarioConfig, out: str, workers: int, matrices=None) -> None:
    cfg.require("census", "weather")
    if matrices is None:
        matrices = _matrices_for(cfg, out)
    weather = load_weather(cfg.weather, cfg.max_weather_gap_minutes)
    weather.window(cfg.start_date, cfg.days)  # fail before spawning workers
    records = ingest_census(cfg.census, cfg.label_schema)
    households = populate_households(records, cfg.region, cfg.n_households, cfg.params,
                                     seed=np.random.SeedSequence(cfg.seed, spawn_key=(0xC0,)))
    profile_dir = os.path.join(out, "profiles") if cfg.household_profiles else None
    result = run_population(households, matrices, weather, cfg.start_date, cfg.days, cfg.seed,
                            workers=workers, profile_dir=profile_dir)
    analysis.write_aggregate_csv(result.aggregate, os.path.join(out, "aggregate_total.csv"))
    with open(os.path.join(out, HOUSEHOLDS_FILE), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("household_id", "record_id", "region", "income_bracket", "size", "days",
                    "energy_kwh", "members"))
        for h, e in zip(result.households, result.energies_kwh):
            members = ";".join("/".join(m.as_tuple()) for m in h.members)
            w.writerow((h.household_id, h.record_id, h.region, h.income_bracket, h.size,
                        cfg.days, repr(float(e)), members))
    with open(os.path.join(out, DAILY_FILE), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("household_id", "minute_of_day", "mean_total_w"))
        for h, row in zip(result.households, result.daily_means):
            w.writerows(zip([h.household_id] * MINUTES_PER_DAY, range(MINUTES_PER_DAY),
                            format_values(row)))
    log.info("simulated %d households x %d days", len(households), cfg.days)


def _read_simulation(out: str, schema):
    path = os.path.join(out, HOUSEHOLDS_FILE)
    if not os.path.exists(path):
        raise ConfigError(f"{path} not found; run 'simulate' first")
    households, energies, days = [], [], set()
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            members = tuple(schema.make_label(*m.split("/"), source=path)
                            for m in row["members"].split(";"))
            households.append(Household(row["household_id"], members, row["income_bracket"],
                                        row["region"], record_id=row["record_id"] or None))
            energies.append(float(row["energy_kwh"]))
            days.add(int(row["days"]))
    index = {h.household_id: k for k, h in enumerate(households)}
    daily = np.zeros((len(households), MINUTES_PER_DAY))
    with open(os.path.join(out, DAILY_FILE), newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            daily[index[row["household_id"]], int(row["minute_of_day"])] = float(row["mean_total_w"])
    if len(days) != 1:
        raise ConfigError("households.csv mixes simulation horizons")
    return households, energies, daily, days.pop()


def cmd_analyze(cfg: ScenarioConfig, out: str, workers: int) -> None:
    households, energies, daily, days = _read_simulation(out, cfg.label_schema)
    pairs = list(zip(households, daily))
    diffs = analysis.bracket_diff(analysis.group_by_bracket(pairs))
    analysis.write_bracket_diff_csv(diffs, os.path.join(out, "bracket_diff.csv"))
    sized = analysis.filter_household_size(pairs, cfg.household_size)
    name = f"bracket_diff_size{cfg.household_size}.csv"
    if sized:
        analysis.write_bracket_diff_csv(analysis.bracket_diff(analysis.group_by_bracket(sized)),
                                        os.path.join(out, name))
    else:
        log.warning("no households of size %d; %s not written", cfg.household_size, name)
    rows = analysis.summary_rows(cfg.region, households, energies, days)
    analysis.write_summary_csv(rows, os.path.join(out, "summary.csv"))


def cmd_pipeline(cfg: ScenarioConfig, out: str, workers: int) -> None:
    cmd_calibrate(cfg, out, workers)
    matrices = load_matrices(os.path.join(out, MATRICES_FILE))
    cmd_simulate(cfg, out, workers, matrices=matrices)
    cmd_analyze(cfg, out, workers)


COMMANDS = {"calibrate": cmd_calibrate, "simulate": cmd_simulate,
            "analyze": cmd_analyze, "pipeline": cmd_pipeline}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="resload", description=__doc__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="scenario YAML (default: bundled synthetic scenario)")
    ap.add_argument("--seed", type=int, help="override the scenario seed (u64)")
    ap.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    ap.add_argument("--out", default="resload_out", help="output directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.workers < 1:
            raise ConfigError(f"--workers must be >= 1 (got {args.workers})")
        cfg = load_config(args.config or bundled_scenario(), seed=args.seed).validate()
        os.makedirs(args.out, exist_ok=True)
        _write_effective(cfg, args.out)
        COMMANDS[args.command](cfg, args.out, args.workers)
    except (ConfigError, IngestError, WeatherCoverageError, ValueError, OSError) as exc:
        print(f"resload {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
