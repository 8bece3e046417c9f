"""Fan household simulations out to worker processes and reduce the stream.

Results are consumed strictly in household order, so every reduction (and
every file written) is identical for any worker count or schedule.
"""

from __future__ import annotations

import datetime as dt
import logging
import os
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .activity import TransitionMatrixSet
from .analysis import household_daily_mean
from .household import CHANNELS, Household, LoadProfile, annual_energy, simulate_household, write_profile_csv
from .labels import MINUTES_PER_DAY
from .weather import WeatherSeries

log = logging.getLogger(__name__)

_CTX: dict = {}


def _init_worker(matrices, weather, start_date, days, seed, profile_dir):
    _CTX.update(matrices=matrices, weather=weather, start_date=start_date, days=days,
                seed=seed, profile_dir=profile_dir)


def _run_one(h: Household) -> LoadProfile:
    c = _CTX
    profile = simulate_household(h, c["matrices"], c["weather"], c["start_date"], c["days"],
                                 c["seed"])
    if c["profile_dir"] is not None:
        write_profile_csv(profile, os.path.join(c["profile_dir"], f"{h.household_id}.csv"))
    return profile


def simulate_population(households: Sequence[Household], matrices: TransitionMatrixSet,
                        weather: WeatherSeries, start_date: dt.date, days: int, seed: int,
                        workers: int = 1, profile_dir: str | None = None
                        ) -> Iterator[tuple[Household, LoadProfile]]:
    """Yield (household, profile) in input order.

    At most ``2 * workers`` results are in flight, which bounds memory for
    year-long runs. With ``profile_dir`` each worker also writes its
    household's minute CSV.
    """
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if profile_dir is not None:
        os.makedirs(profile_dir, exist_ok=True)
    initargs = (matrices, weather, start_date, days, seed, profile_dir)
    if workers == 1:
        _init_worker(*initargs)
        for h in households:
            yield h, _run_one(h)
        return
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=initargs) as pool:
        pending: deque = deque()
        it = iter(households)
        for h in it:
            pending.append((h, pool.submit(_run_one, h)))
            if len(pending) >= 2 * workers:
                break
        while pending:
            h, fut = pending.popleft()
            nxt = next(it, None)
            if nxt is not None:
                pending.append((nxt, pool.submit(_run_one, nxt)))
            yield h, fut.result()


@dataclass
class PopulationResult:
    households: list[Household]
    aggregate: LoadProfile
    daily_means: np.ndarray     # (households, 1440)
    energies_kwh: np.ndarray    # energy over the simulated horizon
    days: int


def run_population(households: Sequence[Household], matrices: TransitionMatrixSet,
                   weather: WeatherSeries, start_date: dt.date, days: int, seed: int,
                   workers: int = 1, profile_dir: str | None = None) -> PopulationResult:
    """Simulate and reduce without holding more than a few profiles at once."""
    households = list(households)
    if not households:
        raise ValueError("no households to simulate")
    minutes = days * MINUTES_PER_DAY
    sums = {c: np.zeros(minutes) for c in CHANNELS}
    daily = np.empty((len(households), MINUTES_PER_DAY))
    energy = np.empty(len(households))
    stream = simulate_population(households, matrices, weather, start_date, days, seed,
                                 workers, profile_dir)
    for k, (h, profile) in enumerate(stream):
        for c in CHANNELS:
            sums[c] += profile[c]
        daily[k] = household_daily_mean(profile)
        energy[k] = annual_energy(profile)
        if (k + 1) % 50 == 0:
            log.info("simulated %d/%d households", k + 1, len(households))
    agg = LoadProfile.from_channels(start_date, **sums)
    return PopulationResult(households, agg, daily, energy, days)
