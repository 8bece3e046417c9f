"""Shared categorical types: activity states, person labels, day types."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from enum import IntEnum


class ActivityState(IntEnum):
    AWAY = 0
    SLEEPING = 1
    GROOMING = 2
    COOKING = 3
    DISHWASHING = 4
    CLEANING = 5
    LAUNDRY = 6
    LEISURE = 7
    OTHER = 8


N_STATES = len(ActivityState)
SLOTS_PER_DAY = 144
MINUTES_PER_SLOT = 10
MINUTES_PER_DAY = 1440

DAY_TYPES = ("weekday", "weekend")


def day_type_of(date: dt.date) -> str:
    return "weekend" if date.weekday() >= 5 else "weekday"


def is_home(state) -> bool:
    return int(state) != ActivityState.AWAY


def is_active(state) -> bool:
    """Home and awake; the occupant count that drives lighting."""
    return int(state) not in (ActivityState.AWAY, ActivityState.SLEEPING)


class IngestError(ValueError):
    """A malformed input row, reported with its location.

    ``row`` counts data rows from 1 (the header is row 0).
    """

    def __init__(self, message: str, *, source: str | None = None,
                 row: int | None = None, field: str | None = None):
        self.source = source
        self.row = row
        self.field = field
        self.message = message
        parts = []
        if source:
            parts.append(str(source))
        if row is not None:
            parts.append(f"row {row}")
        if field:
            parts.append(f"field '{field}'")
        prefix = ", ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


@dataclass(frozen=True, order=True)
class PersonLabel:
    age_bin: str
    employment_status: str
    occupation_category: str
    parental_status: str

    def as_tuple(self) -> tuple[str, str, str, str]:
        return (self.age_bin, self.employment_status,
                self.occupation_category, self.parental_status)


LABEL_FIELDS = ("age_bin", "employment_status", "occupation_category", "parental_status")


@dataclass(frozen=True)
class LabelSchema:
    """Closed category sets for each label field.

    The order of ``LABEL_FIELDS`` is also the order in which fields are pooled
    away by the sparse-cell fallback (last field first).
    """

    age_bins: tuple[str, ...] = ("15-24", "25-44", "45-64", "65+")
    employment_statuses: tuple[str, ...] = ("employed", "not-employed")
    occupation_categories: tuple[str, ...] = ("none", "office", "service", "manual", "other")
    parental_statuses: tuple[str, ...] = ("parent", "non-parent")
    _lookup: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cats = self.categories
        for name, values in zip(LABEL_FIELDS, cats):
            if not values:
                raise ValueError(f"{name}: category set is empty")
            if len(set(values)) != len(values):
                raise ValueError(f"{name}: duplicate categories")
        object.__setattr__(self, "_lookup",
                           tuple({v: i for i, v in enumerate(c)} for c in cats))

    @property
    def categories(self) -> tuple[tuple[str, ...], ...]:
        return (tuple(self.age_bins), tuple(self.employment_statuses),
                tuple(self.occupation_categories), tuple(self.parental_statuses))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return tuple(len(c) for c in self.categories)

    def index(self, label: PersonLabel) -> tuple[int, int, int, int]:
        try:
            return tuple(t[v] for t, v in zip(self._lookup, label.as_tuple()))
        except KeyError as exc:
            raise ValueError(f"label {label} outside schema: {exc.args[0]!r}") from None

    def make_label(self, age_bin, employment_status, occupation_category,
                   parental_status, *, source=None, row=None) -> PersonLabel:
        """Build a label, rejecting values outside the closed sets."""
        values = (age_bin, employment_status, occupation_category, parental_status)
        for name, value, table in zip(LABEL_FIELDS, values, self._lookup):
            if value not in table:
                raise IngestError(
                    f"unknown category {value!r} (allowed: {', '.join(table)})",
                    source=source, row=row, field=name)
        return PersonLabel(*values)

    def all_labels(self):
        for a in self.age_bins:
            for e in self.employment_statuses:
                for o in self.occupation_categories:
                    for p in self.parental_statuses:
                        yield PersonLabel(a, e, o, p)

    def to_dict(self) -> dict:
        return {name: list(c) for name, c in zip(LABEL_FIELDS, self.categories)}

    @classmethod
    def from_dict(cls, d: dict) -> "LabelSchema":
        unknown = set(d) - set(LABEL_FIELDS)
        if unknown:
            raise ValueError(f"unknown label schema keys: {sorted(unknown)}")
        default = cls()
        cats = [tuple(d.get(name, c)) for name, c in zip(LABEL_FIELDS, default.categories)]
        return cls(*cats)


DEFAULT_SCHEMA = LabelSchema()
