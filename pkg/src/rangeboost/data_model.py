"""Column-typed tabular dataset: CSV ingestion, column stats, train/test split.

Cells are plain Python values: ``float`` for numeric, ``str`` for categorical,
``None`` for missing.  Tables are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DataError,
    DegenerateSplit,
    InvalidConfig,
    MissingColumn,
    RowArity,
    UnknownColumn,
)

NUMERIC = "numeric"
CATEGORICAL = "categorical"
FEATURE = "feature"
TARGET = "target"

# Tokens read as a missing cell, compared case-insensitively after trimming.
MISSING_TOKENS = frozenset({"", "na", "n/a"})

_CURRENCY_SYMBOLS = "$£€¥"


@dataclass(frozen=True)
class ColumnSchema:
    """One column: its name, value kind, and model role."""

    name: str
    kind: str
    role: str = FEATURE

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise InvalidConfig(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in (FEATURE, TARGET):
            raise InvalidConfig(f"column {self.name!r}: unknown role {self.role!r}")
        if not self.name:
            raise InvalidConfig("column name must be non-empty")


def _check_schema(schema: Sequence[ColumnSchema]) -> tuple[ColumnSchema, ...]:
    cols = tuple(schema)
    names = [c.name for c in cols]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise InvalidConfig(f"duplicate column names in schema: {dup}")
    targets = [c for c in cols if c.role == TARGET]
    if len(targets) != 1:
        raise InvalidConfig(f"schema must have exactly one target column, found {len(targets)}")
    return cols


@dataclass(frozen=True)
class DataTable:
    """Immutable rows of cells conforming to an ordered column schema."""

    schema: tuple[ColumnSchema, ...]
    rows: tuple[tuple, ...]

    def __post_init__(self):
        object.__setattr__(self, "schema", _check_schema(self.schema))
        width = len(self.schema)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise RowArity(f"row {i}: expected {width} cells, got {len(row)}")

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def m(self) -> int:
        return sum(1 for c in self.schema if c.role == FEATURE)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.schema)

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.schema):
            if c.name == name:
                return i
        raise UnknownColumn(name)

    def column(self, name: str) -> list:
        j = self.column_index(name)
        return [row[j] for row in self.rows]

    def target_schema(self) -> ColumnSchema:
        return next(c for c in self.schema if c.role == TARGET)

    def subset(self, indices: Iterable[int]) -> "DataTable":
        return DataTable(self.schema, tuple(self.rows[i] for i in indices))


@dataclass(frozen=True)
class SplitIndices:
    """Row-index partition of a table into a train part and a test part."""

    train_rows: tuple[int, ...]
    test_rows: tuple[int, ...]
    seed: int


@dataclass(frozen=True)
class ColumnStats:
    count: int
    missing_count: int
    mean: float | None = None
    distinct_values: frozenset | None = None


def default_schema() -> tuple[ColumnSchema, ...]:
    """Product-listing schema: nine feature columns plus a Sales target."""
    return (
        ColumnSchema("Products", CATEGORICAL),
        ColumnSchema("Brand", CATEGORICAL),
        ColumnSchema("Colour", CATEGORICAL),
        ColumnSchema("Manufacturer", CATEGORICAL),
        ColumnSchema("Price", NUMERIC),
        ColumnSchema("Rating", NUMERIC),
        ColumnSchema("Number of Rating", NUMERIC),
        ColumnSchema("Shipment", NUMERIC),
        ColumnSchema("Weight Pounds", NUMERIC),
        ColumnSchema("Sales", NUMERIC, TARGET),
    )


def parse_numeric(text: str) -> float | None:
    """Parse a numeric cell; currency symbols and thousands separators are
    tolerated.  Anything unparseable or non-finite is missing."""
    s = text.strip()
    if s.lower() in MISSING_TOKENS:
        return None
    try:
        value = float(s)
    except ValueError:
        stripped = s.lstrip(_CURRENCY_SYMBOLS).replace(",", "").strip()
        try:
            value = float(stripped)
        except ValueError:
            return None
    return value if math.isfinite(value) else None


def parse_categorical(text: str) -> str | None:
    s = text.strip()
    if s.lower() in MISSING_TOKENS:
        return None
    return s


def load_csv(path, schema: Sequence[ColumnSchema], allow_missing_target: bool = False) -> DataTable:
    """Read a UTF-8, comma-delimited CSV into a DataTable.

    Column order in the file is free; columns are matched by header name.
    With ``allow_missing_target`` the target column may be absent from the
    file (all its cells load as missing), which is what prediction-time
    inputs look like.
    """
    schema = _check_schema(schema)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise MissingColumn(f"{path}: file has no header row")
        positions: dict[str, int | None] = {}
        for col in schema:
            if col.name in header:
                positions[col.name] = header.index(col.name)
            elif col.role == TARGET and allow_missing_target:
                positions[col.name] = None
            else:
                raise MissingColumn(col.name)
        rows = []
        for fields in reader:
            if len(fields) != len(header):
                raise RowArity(
                    f"line {reader.line_num}: expected {len(header)} fields, got {len(fields)}"
                )
            cells = []
            for col in schema:
                pos = positions[col.name]
                if pos is None:
                    cells.append(None)
                elif col.kind == NUMERIC:
                    cells.append(parse_numeric(fields[pos]))
                else:
                    cells.append(parse_categorical(fields[pos]))
            rows.append(tuple(cells))
    return DataTable(schema, tuple(rows))


def write_csv(table: DataTable, path) -> None:
    """Write a DataTable back to CSV; missing cells become empty fields."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(table.column_names)
        for row in table.rows:
            writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])


def column_stats(table: DataTable, name: str) -> ColumnStats:
    """Per-column summary; the mean skips missing cells."""
    j = table.column_index(name)
    col = [row[j] for row in table.rows]
    missing = sum(1 for v in col if v is None)
    present = [v for v in col if v is not None]
    if table.schema[j].kind == NUMERIC:
        mean = float(np.mean(present)) if present else None
        return ColumnStats(count=len(col), missing_count=missing, mean=mean)
    return ColumnStats(count=len(col), missing_count=missing, distinct_values=frozenset(present))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_train_test(table: DataTable, train_fraction: float = 0.8, seed: int = 0) -> SplitIndices:
    """Seeded random permutation split; the first round(fraction*n) indices
    (half-up rounding) form the train side."""
    n = table.n
    if n < 2:
        raise DegenerateSplit(f"cannot split {n} rows")
    size = _round_half_up(train_fraction * n)
    if size <= 0 or size >= n:
        raise DegenerateSplit(
            f"train_fraction={train_fraction} on n={n} leaves an empty side"
        )
    perm = np.random.default_rng(seed).permutation(n)
    return SplitIndices(
        train_rows=tuple(int(i) for i in perm[:size]),
        test_rows=tuple(int(i) for i in perm[size:]),
        seed=seed,
    )


def schema_to_json(schema: Sequence[ColumnSchema]) -> list[dict]:
    return [{"name": c.name, "kind": c.kind, "role": c.role} for c in schema]


def schema_from_json(doc) -> tuple[ColumnSchema, ...]:
    if not isinstance(doc, list) or not doc:
        raise InvalidConfig("schema document must be a non-empty list of columns")
    cols = []
    for entry in doc:
        if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
            raise InvalidConfig(f"bad schema entry: {entry!r}")
        cols.append(ColumnSchema(entry["name"], entry["kind"], entry.get("role", FEATURE)))
    return _check_schema(cols)


def load_schema(path) -> tuple[ColumnSchema, ...]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidConfig(f"cannot read schema file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"schema file {path} is not valid JSON: {exc}") from exc
    return schema_from_json(doc)


def save_schema(schema: Sequence[ColumnSchema], path) -> None:
    Path(path).write_text(json.dumps(schema_to_json(schema), indent=2) + "\n", encoding="utf-8")
