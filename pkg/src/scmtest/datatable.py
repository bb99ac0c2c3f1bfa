"""Named-column numeric tables: CSV io, z-scoring, and deliberate splits.

The quantile split is the out-of-distribution protocol: the table is cut on
one column at its 25% or 75% quantile and the larger side becomes training
data, so every test value on that column lies outside the training range.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    InvalidArgumentError,
    NormalizationError,
    SplitError,
    TableParseError,
)

STANDARD_QUANTILES = (0.25, 0.75)


@dataclass(frozen=True, eq=False)
class Table:
    """Rectangular float matrix with unique column names (rows = samples)."""

    columns: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise InvalidArgumentError(f"values must be 2-D, got shape {values.shape}")
        columns = tuple(self.columns)
        if len(columns) != values.shape[1]:
            raise InvalidArgumentError(
                f"{len(columns)} column names for {values.shape[1]} columns"
            )
        if len(set(columns)) != len(columns):
            raise InvalidArgumentError("column names must be unique")
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise InvalidArgumentError(f"no column named {name!r}")
        return self.values[:, self.columns.index(name)]

    def take_rows(self, idx) -> "Table":
        return Table(self.columns, self.values[np.asarray(idx, dtype=int)])


def read_csv(path) -> Table:
    """Parse a headered numeric CSV; errors carry 1-based row/column locations."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TableParseError("empty file, header row required") from None
        header = [h.strip() for h in header]
        if any(not h for h in header):
            raise TableParseError("blank column name in header", row=1)
        if _all_numeric(header):
            raise TableParseError("first row is numeric; header row required", row=1)
        dupes = {h for h in header if header.count(h) > 1}
        if dupes:
            raise TableParseError(f"duplicate header names: {sorted(dupes)}", row=1)
        rows = []
        for r, cells in enumerate(reader, start=2):
            if len(cells) != len(header):
                raise TableParseError(
                    f"expected {len(header)} cells, found {len(cells)}", row=r
                )
            parsed = []
            for c, cell in enumerate(cells, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise TableParseError(
                        f"non-numeric cell {cell!r}", row=r, col=c
                    ) from None
            rows.append(parsed)
    values = np.asarray(rows, dtype=float).reshape(len(rows), len(header))
    return Table(tuple(header), values)


def write_csv(table: Table, path) -> None:
    """Write with shortest-round-trip float formatting (read(write(t)) == t)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.columns)
        for row in table.values:
            writer.writerow([repr(float(v)) for v in row])


def _all_numeric(cells: Sequence[str]) -> bool:
    try:
        for cell in cells:
            float(cell)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class SplitSpec:
    """Either a uniform random split or a single-column quantile split."""

    kind: str
    test_fraction: float | None = None
    column: str | None = None
    q: float | None = None

    @classmethod
    def random(cls, test_fraction: float) -> "SplitSpec":
        if not 0.0 < test_fraction < 1.0:
            raise InvalidArgumentError("test_fraction must be in (0, 1)")
        return cls("random", test_fraction=test_fraction)

    @classmethod
    def quantile(cls, column: str, q: float, allow_custom_q: bool = False) -> "SplitSpec":
        if q not in STANDARD_QUANTILES and not allow_custom_q:
            raise InvalidArgumentError(
                f"q must be one of {STANDARD_QUANTILES}; pass allow_custom_q=True to override"
            )
        if not 0.0 < q < 1.0:
            raise InvalidArgumentError("q must be in (0, 1)")
        return cls("quantile", column=column, q=q)

    def label(self) -> str:
        if self.kind == "random":
            return f"random{self.test_fraction:g}"
        return f"{self.column}@{self.q:g}"

    def to_json(self) -> dict:
        if self.kind == "random":
            return {"kind": "random", "test_fraction": self.test_fraction}
        return {"kind": "quantile", "column": self.column, "q": self.q}

    @classmethod
    def from_json(cls, obj: dict) -> "SplitSpec":
        if obj.get("kind") == "random":
            return cls.random(float(obj["test_fraction"]))
        if obj.get("kind") == "quantile":
            return cls.quantile(str(obj["column"]), float(obj["q"]), allow_custom_q=True)
        raise InvalidArgumentError(f"unknown split kind: {obj.get('kind')!r}")


def split(table: Table, spec: SplitSpec,
          rng: np.random.Generator | None = None) -> tuple[Table, Table]:
    """Partition rows according to ``spec``; row order is kept on each side.

    Quantile splits use the linear-interpolation quantile of the full column.
    Boundary ties go to the test side so the larger side always trains.
    """
    if table.n < 4:
        raise SplitError(f"need at least 4 rows to split, got {table.n}")
    if spec.kind == "random":
        if rng is None:
            raise InvalidArgumentError("random split requires an rng")
        n_test = int(round(table.n * spec.test_fraction))
        if n_test < 1 or n_test >= table.n:
            raise SplitError(f"test fraction {spec.test_fraction} leaves an empty side")
        perm = rng.permutation(table.n)
        test_idx = np.sort(perm[:n_test])
        train_idx = np.sort(perm[n_test:])
    else:
        col = table.column(spec.column)  # raises if missing
        cut = float(np.quantile(col, spec.q))
        if spec.q >= 0.5:
            train_mask = col < cut
        else:
            train_mask = col > cut
        train_idx = np.nonzero(train_mask)[0]
        test_idx = np.nonzero(~train_mask)[0]
        if train_idx.size == 0 or test_idx.size == 0:
            raise SplitError(
                f"quantile split on {spec.column!r} at q={spec.q} leaves an empty side"
            )
    return table.take_rows(train_idx), table.take_rows(test_idx)


def split_report(table: Table, spec: SplitSpec, train: Table, test: Table) -> dict:
    report = {"spec": spec.to_json(), "train_rows": train.n, "test_rows": test.n}
    if spec.kind == "quantile":
        report["quantile_value"] = float(np.quantile(table.column(spec.column), spec.q))
    return report


@dataclass(frozen=True, eq=False)
class NormStats:
    """Per-column mean and population std computed on training rows."""

    columns: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def to_json(self) -> dict:
        return {
            "columns": list(self.columns),
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NormStats":
        return cls(tuple(obj["columns"]),
                   np.asarray(obj["mean"], dtype=float),
                   np.asarray(obj["std"], dtype=float))

    @classmethod
    def identity(cls, columns: Sequence[str]) -> "NormStats":
        d = len(columns)
        return cls(tuple(columns), np.zeros(d), np.ones(d))


def normalize(table: Table, stats: NormStats | None = None) -> tuple[Table, NormStats]:
    """Z-score per column; stats from the given table unless supplied."""
    if stats is None:
        mean = table.values.mean(axis=0)
        std = table.values.std(axis=0)
        for name, s in zip(table.columns, std):
            if s == 0.0 or not np.isfinite(s):
                raise NormalizationError(name, "zero or non-finite variance")
        stats = NormStats(table.columns, mean, std)
    elif stats.columns != table.columns:
        raise InvalidArgumentError(
            f"stats columns {stats.columns} do not match table columns {table.columns}"
        )
    return Table(table.columns, (table.values - stats.mean) / stats.std), stats


def denormalize(table: Table, stats: NormStats) -> Table:
    if stats.columns != table.columns:
        raise InvalidArgumentError("stats columns do not match table columns")
    return Table(table.columns, table.values * stats.std + stats.mean)
