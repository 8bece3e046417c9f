"""Activity logs, hourly transition matrices and activity-chain sampling.

Transition probabilities are empirical frequencies of 10-minute slot-to-slot
moves, counted per (person label, day type, source-slot hour, source state).
Cells without observations fall back to progressively pooled labels.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .labels import (
    DAY_TYPES,
    DEFAULT_SCHEMA,
    LABEL_FIELDS,
    N_STATES,
    SLOTS_PER_DAY,
    ActivityState,
    IngestError,
    LabelSchema,
    PersonLabel,
)

SLOT_COLUMNS = tuple(f"s{k:03d}" for k in range(SLOTS_PER_DAY))
LOG_COLUMNS = ("respondent_id",) + LABEL_FIELDS + ("day_type",) + SLOT_COLUMNS

MATRIX_SCHEMA_VERSION = "resload-matrices/1"

# Pooling order for sparse cells: each level sums over the listed label axes.
FALLBACK_LEVELS = (
    (),
    (3,),
    (2, 3),
    (1, 2, 3),
    (0, 1, 2, 3),
)


@dataclass(frozen=True)
class ActivityLogRecord:
    respondent_id: str
    label: PersonLabel
    day_type: str
    slots: tuple[int, ...]

    def __post_init__(self):
        if len(self.slots) != SLOTS_PER_DAY:
            raise ValueError(f"slot count {len(self.slots)} != {SLOTS_PER_DAY}")
        if self.day_type not in DAY_TYPES:
            raise ValueError(f"unknown day_type {self.day_type!r}")
        if any(not 0 <= s < N_STATES for s in self.slots):
            raise ValueError("slot state outside 0-8")


@dataclass(frozen=True)
class OccupancySequence:
    person_index: int
    slots: np.ndarray

    def __post_init__(self):
        if len(self.slots) % SLOTS_PER_DAY:
            raise ValueError("sequence length must be a multiple of 144")

    @property
    def days(self) -> int:
        return len(self.slots) // SLOTS_PER_DAY

    @property
    def occupancy(self) -> np.ndarray:
        return self.slots != ActivityState.AWAY


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), str(source)
    return source, getattr(source, "name", None)


def ingest_activity_logs(source, schema: LabelSchema = DEFAULT_SCHEMA) -> list[ActivityLogRecord]:
    """Read an activity-log CSV (path or text stream) into records.

    Raises :class:`IngestError` naming the row and field of the first defect.
    """
    stream, name = _open_text(source)
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("empty file, header required", source=name, row=0) from None
        header = [h.strip() for h in header]
        positions = {h: i for i, h in enumerate(header)}
        for col in LOG_COLUMNS[:6]:
            if col not in positions:
                raise IngestError("missing column", source=name, row=0, field=col)
        slot_cols = [h for h in header if h.startswith("s") and h[1:].isdigit()]
        if len(slot_cols) != SLOTS_PER_DAY:
            raise IngestError(f"slot count: header declares {len(slot_cols)} slot columns, "
                              f"expected {SLOTS_PER_DAY}", source=name, row=0)
        for col in SLOT_COLUMNS:
            if col not in positions:
                raise IngestError("missing column", source=name, row=0, field=col)
        slot_pos = [positions[c] for c in SLOT_COLUMNS]
        records = []
        for rownum, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                n_slots = len(row) - (len(header) - SLOTS_PER_DAY)
                raise IngestError(f"slot count {n_slots} != {SLOTS_PER_DAY}",
                                  source=name, row=rownum)
            get = lambda col: row[positions[col]].strip()  # noqa: E731
            label = schema.make_label(*(get(f) for f in LABEL_FIELDS), source=name, row=rownum)
            day_type = get("day_type")
            if day_type not in DAY_TYPES:
                raise IngestError(f"unknown day_type {day_type!r}", source=name,
                                  row=rownum, field="day_type")
            slots = []
            for col, pos in zip(SLOT_COLUMNS, slot_pos):
                raw = row[pos].strip()
                try:
                    value = int(raw)
                except ValueError:
                    raise IngestError(f"state code {raw!r} is not an integer",
                                      source=name, row=rownum, field=col) from None
                if not 0 <= value < N_STATES:
                    raise IngestError(f"state code {value} outside 0-8",
                                      source=name, row=rownum, field=col)
                slots.append(value)
            records.append(ActivityLogRecord(get("respondent_id"), label, day_type, tuple(slots)))
        return records
    finally:
        if stream is not source:
            stream.close()


def write_activity_logs(records: Iterable[ActivityLogRecord], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(LOG_COLUMNS)
    for r in records:
        writer.writerow([r.respondent_id, *r.label.as_tuple(), r.day_type, *r.slots])


@dataclass(frozen=True, eq=False)
class TransitionMatrixSet:
    """Observation counts behind every hourly transition matrix.

    ``counts`` has shape (*schema.shape, 2, 24, 9, 9) indexed by
    (age, employment, occupation, parental, day type, hour, from, to);
    ``initial_counts`` has shape (*schema.shape, 2, 9) for slot-0 states.
    Probabilities are always derived from counts, so the two never disagree.
    """

    schema: LabelSchema
    counts: np.ndarray
    initial_counts: np.ndarray

    def __post_init__(self):
        expected = self.schema.shape + (2, 24, N_STATES, N_STATES)
        if self.counts.shape != expected:
            raise ValueError(f"counts shape {self.counts.shape} != {expected}")
        if self.initial_counts.shape != self.schema.shape + (2, N_STATES):
            raise ValueError("initial_counts shape mismatch")
        if (self.counts < 0).any() or (self.initial_counts < 0).any():
            raise ValueError("counts must be non-negative")
        for arr in (self.counts, self.initial_counts):
            arr.setflags(write=False)

    @cached_property
    def _pooled(self):
        return [self.counts.sum(axis=axes, keepdims=True) if axes else self.counts
                for axes in FALLBACK_LEVELS]

    @cached_property
    def _pooled_initial(self):
        return [self.initial_counts.sum(axis=axes, keepdims=True) if axes else self.initial_counts
                for axes in FALLBACK_LEVELS]

    @staticmethod
    def _level_index(idx, axes):
        return tuple(0 if k in axes else i for k, i in enumerate(idx))

    def cell_counts(self, label: PersonLabel, day_type: str, hour: int) -> np.ndarray:
        idx = self.schema.index(label)
        return self.counts[idx + (DAY_TYPES.index(day_type), hour)]

    def probabilities(self, label: PersonLabel, day_type: str, hour: int) -> np.ndarray:
        """The un-pooled 9x9 matrix; rows without observations are all zero."""
        c = self.cell_counts(label, day_type, hour).astype(float)
        tot = c.sum(axis=1, keepdims=True)
        return np.divide(c, tot, out=np.zeros_like(c), where=tot > 0)

    def fallback_level(self, label: PersonLabel, day_type: str, hour: int, state: int) -> int:
        """Index into FALLBACK_LEVELS of the row actually used; 5 means self-transition."""
        idx = self.schema.index(label)
        d = DAY_TYPES.index(day_type)
        for level, (axes, pooled) in enumerate(zip(FALLBACK_LEVELS, self._pooled)):
            if pooled[self._level_index(idx, axes) + (d, hour, state)].sum() > 0:
                return level
        return len(FALLBACK_LEVELS)

    def resolved_counts(self, label: PersonLabel) -> np.ndarray:
        """(2, 24, 9, 9) counts with the fallback hierarchy applied per row.

        Rows unobserved at every level get a single self-transition count.
        """
        return self._resolved(self.schema.index(label))

    def _resolved(self, idx):
        cache = self.__dict__.setdefault("_resolved_cache", {})
        if idx in cache:
            return cache[idx]
        out = np.zeros((2, 24, N_STATES, N_STATES), dtype=np.int64)
        done = np.zeros((2, 24, N_STATES), dtype=bool)
        for axes, pooled in zip(FALLBACK_LEVELS, self._pooled):
            block = pooled[self._level_index(idx, axes)]
            take = ~done & (block.sum(axis=-1) > 0)
            out[take] = block[take]
            done |= take
        diag = np.arange(N_STATES)
        for d in range(2):
            for h in range(24):
                missing = ~done[d, h]
                out[d, h, diag[missing], diag[missing]] = 1
        out.setflags(write=False)
        cache[idx] = out
        return out

    def resolved_initial_counts(self, label: PersonLabel) -> np.ndarray:
        idx = self.schema.index(label)
        out = np.zeros((2, N_STATES), dtype=np.int64)
        for d in range(2):
            for axes, pooled in zip(FALLBACK_LEVELS, self._pooled_initial):
                row = pooled[self._level_index(idx, axes) + (d,)]
                if row.sum() > 0:
                    out[d] = row
                    break
            else:
                out[d, ActivityState.SLEEPING] = 1
        return out

    def initial_state_dist(self, label: PersonLabel, day_type: str) -> np.ndarray:
        row = self.resolved_initial_counts(label)[DAY_TYPES.index(day_type)]
        return row / row.sum()

    def cumulative_tables(self, label: PersonLabel) -> tuple[np.ndarray, np.ndarray]:
        """Cumulative rows for the sampler; every row ends at exactly 1.0."""
        trans = self.resolved_counts(label)
        init = self.resolved_initial_counts(label)
        cum_t = np.cumsum(trans, axis=-1) / trans.sum(axis=-1, keepdims=True)
        cum_i = np.cumsum(init, axis=-1) / init.sum(axis=-1, keepdims=True)
        return cum_t, cum_i

    def observed_labels(self) -> list[PersonLabel]:
        per_label = self.initial_counts.sum(axis=(-2, -1))
        return [lab for lab in self.schema.all_labels()
                if per_label[self.schema.index(lab)] > 0]


def _records_to_arrays(records: Sequence[ActivityLogRecord], schema: LabelSchema):
    lab = np.array([schema.index(r.label) for r in records], dtype=np.int64).reshape(-1, 4)
    day = np.array([DAY_TYPES.index(r.day_type) for r in records], dtype=np.int64)
    slots = np.array([r.slots for r in records], dtype=np.int64).reshape(-1, SLOTS_PER_DAY)
    return lab, day, slots


def build_transition_matrices(records: Sequence[ActivityLogRecord],
                              schema: LabelSchema = DEFAULT_SCHEMA) -> TransitionMatrixSet:
    """Count slot-to-slot transitions; the hour is that of the source slot."""
    if not records:
        raise ValueError("cannot calibrate from an empty record collection")
    lab, day, slots = _records_to_arrays(records, schema)
    n = len(records)
    cell_shape = schema.shape + (2,)
    cell = np.ravel_multi_index((*lab.T, day), cell_shape)

    hours = np.arange(SLOTS_PER_DAY - 1) // 6
    src = slots[:, :-1]
    dst = slots[:, 1:]
    flat = ((cell[:, None] * 24 + hours[None, :]) * N_STATES + src) * N_STATES + dst
    size = int(np.prod(cell_shape)) * 24 * N_STATES * N_STATES
    counts = np.bincount(flat.ravel(), minlength=size).reshape(cell_shape + (24, N_STATES, N_STATES))

    init_flat = cell * N_STATES + slots[:, 0]
    init = np.bincount(init_flat, minlength=int(np.prod(cell_shape)) * N_STATES)
    assert counts.sum() == n * (SLOTS_PER_DAY - 1)
    return TransitionMatrixSet(schema, counts.astype(np.int64),
                               init.reshape(cell_shape + (N_STATES,)).astype(np.int64))


def lookup_transition_row(matrices: TransitionMatrixSet, label: PersonLabel, day_type: str,
                          hour: int, state: int) -> np.ndarray:
    """Probability row for one source state, after the sparse-cell fallback."""
    if not 0 <= hour < 24:
        raise ValueError(f"hour {hour} outside 0-23")
    row = matrices.resolved_counts(label)[DAY_TYPES.index(day_type), hour, int(state)]
    return row / row.sum()


def sample_activity_sequence(matrices: TransitionMatrixSet, label: PersonLabel,
                             calendar: Sequence[str], rng=None,
                             person_index: int = 0) -> OccupancySequence:
    """Sample a 10-minute activity chain over ``calendar`` (a list of day types).

    Midnight of day 1 is drawn from the initial distribution; the 23:50 state
    of each day transitions into the next day using that day's matrices.
    """
    if len(calendar) == 0:
        raise ValueError("calendar must contain at least one day")
    rng = np.random.default_rng(rng)
    day_idx = np.array([DAY_TYPES.index(d) for d in calendar], dtype=np.int64)
    cum_t, cum_i = matrices.cumulative_tables(label)
    u = rng.random(len(calendar) * SLOTS_PER_DAY)
    slots = kernels.sample_chain(cum_t, cum_i, day_idx, u)
    return OccupancySequence(person_index, slots)


# -- matrix archive ---------------------------------------------------------

ARCHIVE_COLUMNS = (("kind",) + LABEL_FIELDS + ("day_type", "hour", "from_state")
                   + tuple(f"to_{j}" for j in range(N_STATES)))


def save_matrices(matrices: TransitionMatrixSet, target) -> None:
    """Write the counts as a CSV bundle; only rows with observations appear."""
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            return save_matrices(matrices, fh)
    schema = matrices.schema
    target.write(f"# schema_version={MATRIX_SCHEMA_VERSION}\n")
    for name, cats in zip(LABEL_FIELDS, schema.categories):
        target.write(f"# {name}={'|'.join(cats)}\n")
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(ARCHIVE_COLUMNS)
    for label in schema.all_labels():
        idx = schema.index(label)
        for d, day_type in enumerate(DAY_TYPES):
            init = matrices.initial_counts[idx + (d,)]
            if init.sum():
                writer.writerow(["initial", *label.as_tuple(), day_type, "", "", *init.tolist()])
            block = matrices.counts[idx + (d,)]
            for h, i in zip(*np.nonzero(block.sum(axis=-1))):
                writer.writerow(["transition", *label.as_tuple(), day_type, int(h), int(i),
                                 *block[h, i].tolist()])


def load_matrices(source) -> TransitionMatrixSet:
    stream, name = _open_text(source)
    try:
        text = stream.read()
    finally:
        if stream is not source:
            stream.close()
    lines = text.splitlines()
    meta = {}
    body_start = 0
    for body_start, line in enumerate(lines):
        if not line.startswith("#"):
            break
        key, _, value = line[1:].strip().partition("=")
        meta[key] = value
    if meta.get("schema_version") != MATRIX_SCHEMA_VERSION:
        raise IngestError(f"unsupported matrix archive version {meta.get('schema_version')!r}",
                          source=name, row=0)
    schema = LabelSchema.from_dict({f: meta[f].split("|") for f in LABEL_FIELDS if f in meta})
    counts = np.zeros(schema.shape + (2, 24, N_STATES, N_STATES), dtype=np.int64)
    init = np.zeros(schema.shape + (2, N_STATES), dtype=np.int64)
    reader = csv.reader(io.StringIO("\n".join(lines[body_start:])))
    header = next(reader)
    if tuple(header) != ARCHIVE_COLUMNS:
        raise IngestError("unexpected archive header", source=name, row=0)
    for rownum, row in enumerate(reader, start=1):
        kind = row[0]
        label = schema.make_label(*row[1:5], source=name, row=rownum)
        idx = schema.index(label) + (DAY_TYPES.index(row[5]),)
        values = [int(v) for v in row[8:]]
        if kind == "initial":
            init[idx] = values
        elif kind == "transition":
            counts[idx + (int(row[6]), int(row[7]))] = values
        else:
            raise IngestError(f"unknown row kind {kind!r}", source=name, row=rownum, field="kind")
    return TransitionMatrixSet(schema, counts, init)


def calibration_report(matrices: TransitionMatrixSet, records: Sequence[ActivityLogRecord]) -> dict:
    """Coverage summary: respondents per cell and how many rows need pooling."""
    per_cell: dict[str, int] = {}
    for r in records:
        key = "/".join(r.label.as_tuple() + (r.day_type,))
        per_cell[key] = per_cell.get(key, 0) + 1
    observed_rows = int((matrices.counts.sum(axis=-1) > 0).sum())
    total_rows = int(np.prod(matrices.counts.shape[:-1]))
    levels = [0] * (len(FALLBACK_LEVELS) + 1)
    for label in matrices.observed_labels():
        for day_type in DAY_TYPES:
            for h in range(24):
                for i in range(N_STATES):
                    levels[matrices.fallback_level(label, day_type, h, i)] += 1
    return {
        "schema_version": MATRIX_SCHEMA_VERSION,
        "records": len(records),
        "transitions": int(matrices.counts.sum()),
        "observed_rows": observed_rows,
        "total_rows": total_rows,
        "respondent_days_per_cell": dict(sorted(per_cell.items())),
        "fallback_levels_for_observed_labels": {
            name: n for name, n in zip(
                ["exact", "pool_parental", "pool_occupation", "pool_employment",
                 "global", "self_transition"], levels)
        },
    }
