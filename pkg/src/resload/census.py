"""Census-style household records and population sampling."""

from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .labels import DEFAULT_SCHEMA, LABEL_FIELDS, IngestError, LabelSchema, PersonLabel

INCOME_BRACKETS = ("<25K", "25-50K", "50-75K", "75-100K", "100K+")
CENSUS_COLUMNS = ("record_id", "region", "income_bracket", "weight") + LABEL_FIELDS
_REGION_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


@dataclass(frozen=True)
class CensusHouseholdRecord:
    record_id: str
    region: str
    income_bracket: str
    members: tuple[PersonLabel, ...]
    weight: float = 1.0

    def __post_init__(self):
        if not self.members:
            raise ValueError(f"household {self.record_id!r} has no members")
        if self.income_bracket not in INCOME_BRACKETS:
            raise ValueError(f"unknown income bracket {self.income_bracket!r}")
        if not self.weight > 0:
            raise ValueError("weight must be positive")


def ingest_census(source, schema: LabelSchema = DEFAULT_SCHEMA,
                  regions: Iterable[str] | None = None) -> list[CensusHouseholdRecord]:
    """Group one-row-per-person census rows into household records.

    The first row of a ``record_id`` declares the household (region, income
    bracket, optional weight). Later rows for the same household either repeat
    those values or leave them blank; a blank row for an undeclared household
    is an error, as is a conflicting value.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return _ingest(fh, str(source), schema, regions)
    return _ingest(source, getattr(source, "name", None), schema, regions)


def _ingest(stream, name, schema, regions):
    allowed_regions = set(regions) if regions is not None else None
    reader = csv.DictReader(stream)
    fields = [f.strip() for f in (reader.fieldnames or [])]
    reader.fieldnames = fields
    for col in CENSUS_COLUMNS:
        if col != "weight" and col not in fields:
            raise IngestError("missing column", source=name, row=0, field=col)
    has_weight = "weight" in fields
    declared: dict[str, dict] = {}
    members: dict[str, list[PersonLabel]] = {}
    for rownum, row in enumerate(reader, start=1):
        get = lambda col: (row.get(col) or "").strip()  # noqa: E731
        rid = get("record_id")
        if not rid:
            raise IngestError("empty record_id", source=name, row=rownum, field="record_id")
        region, bracket = get("region"), get("income_bracket")
        weight_raw = get("weight") if has_weight else ""
        if rid not in declared:
            if not region or not bracket:
                raise IngestError(f"person row references undeclared household {rid!r}",
                                  source=name, row=rownum, field="record_id")
            if not _REGION_RE.match(region) or (allowed_regions is not None
                                                and region not in allowed_regions):
                raise IngestError(f"unknown region {region!r}", source=name, row=rownum,
                                  field="region")
            if bracket not in INCOME_BRACKETS:
                raise IngestError(f"unknown income bracket {bracket!r} "
                                  f"(allowed: {', '.join(INCOME_BRACKETS)})",
                                  source=name, row=rownum, field="income_bracket")
            try:
                weight = float(weight_raw) if weight_raw else 1.0
            except ValueError:
                raise IngestError(f"bad weight {weight_raw!r}", source=name, row=rownum,
                                  field="weight") from None
            if not weight > 0:
                raise IngestError("weight must be positive", source=name, row=rownum,
                                  field="weight")
            declared[rid] = {"region": region, "income_bracket": bracket, "weight": weight}
            members[rid] = []
        else:
            decl = declared[rid]
            for col, value in (("region", region), ("income_bracket", bracket)):
                if value and value != decl[col]:
                    raise IngestError(f"conflicts with declared {col} {decl[col]!r}",
                                      source=name, row=rownum, field=col)
            if weight_raw and float(weight_raw) != decl["weight"]:
                raise IngestError("conflicts with declared weight", source=name,
                                  row=rownum, field="weight")
        members[rid].append(schema.make_label(*(get(f) for f in LABEL_FIELDS),
                                              source=name, row=rownum))
    return [CensusHouseholdRecord(rid, d["region"], d["income_bracket"], tuple(members[rid]),
                                  d["weight"])
            for rid, d in declared.items()]


def write_census(records: Iterable[CensusHouseholdRecord], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CENSUS_COLUMNS)
    for r in records:
        for m in r.members:
            writer.writerow([r.record_id, r.region, r.income_bracket, f"{r.weight:g}",
                             *m.as_tuple()])


def populate_households(records: Sequence[CensusHouseholdRecord], region: str, n: int,
                        params, seed=None, id_prefix: str | None = None) -> list:
    """Draw ``n`` households for ``region`` with replacement.

    Sampling is uniform unless some record carries a weight other than 1, in
    which case draws are proportional to weight. Every household shares
    ``params`` unchanged.
    """
    from .household import Household

    if n < 0:
        raise ValueError("n must be non-negative")
    pool = [r for r in records if r.region == region]
    if n == 0:
        return []
    if not pool:
        raise ValueError(f"no census records for region {region!r}")
    rng = np.random.default_rng(seed)
    weights = np.array([r.weight for r in pool])
    if np.all(weights == 1.0):
        picks = rng.integers(0, len(pool), size=n)
    else:
        picks = rng.choice(len(pool), size=n, replace=True, p=weights / weights.sum())
    prefix = id_prefix if id_prefix is not None else region
    width = max(4, len(str(n - 1)))
    return [Household(household_id=f"{prefix}-{i:0{width}d}", members=pool[k].members,
                      income_bracket=pool[k].income_bracket, region=region, params=params,
                      record_id=pool[k].record_id)
            for i, k in enumerate(picks)]
