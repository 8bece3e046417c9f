import datetime as dt
from importlib import resources

import numpy as np
import pytest

from resload.activity import ActivityLogRecord, build_transition_matrices, ingest_activity_logs
from resload.labels import SLOTS_PER_DAY, ActivityState, PersonLabel
from resload.weather import WeatherSeries, load_weather, _minutes

DATA = resources.files("resload") / "data"

LABEL = PersonLabel("25-44", "employed", "office", "parent")

# filled by test_acceptance, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def bundled_logs():
    return ingest_activity_logs(str(DATA / "activity_logs.csv"))


@pytest.fixture(scope="session")
def bundled_matrices(bundled_logs):
    return build_transition_matrices(bundled_logs)


@pytest.fixture(scope="session")
def bundled_weather():
    return load_weather(str(DATA / "weather_2019.csv"))


def constant_day(state, label=LABEL, day_type="weekday", rid="R0"):
    return ActivityLogRecord(rid, label, day_type, (int(state),) * SLOTS_PER_DAY)


def degenerate_matrices(state, label=LABEL):
    """A matrix set whose only observation is one person held in ``state`` all day."""
    recs = [constant_day(state, label, dt_, f"R{k}") for k, dt_ in enumerate(("weekday", "weekend"))]
    return build_transition_matrices(recs)


def flat_weather(start: dt.date, days: int, temperature: float, irradiance: float) -> WeatherSeries:
    t0 = _minutes(dt.datetime.combine(start, dt.time()))
    times = t0 + np.arange(days * 24 + 1) * 60.0
    return WeatherSeries(times, np.full(times.size, float(temperature)),
                         np.full(times.size, float(irradiance)))


@pytest.fixture
def away_matrices():
    return degenerate_matrices(ActivityState.AWAY)

