"""Missing-value filtering and vectorization of comparison patterns.

Sparse columns are dropped first (a column survives when its missing
fraction is strictly under the threshold, 20% by default), then rows with
too few present values among the surviving columns are deleted, and the
remainder is imputed and packed into a dense feature matrix.

Missing fractions are kept as exact rationals; nothing is rounded until a
report is printed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, InvalidInputError
from .ingest import SCORE_COLUMNS, ComparisonVector
from .table import PartitionedTable

__all__ = [
    "ColumnProfile",
    "FeatureMatrix",
    "DEFAULT_COL_MISSING_MAX",
    "DEFAULT_ROW_MIN_PRESENT",
    "profile_columns",
    "select_columns",
    "filter_rows",
    "impute_and_vectorize",
    "preprocess_report",
]

DEFAULT_COL_MISSING_MAX = Fraction(1, 5)
DEFAULT_ROW_MIN_PRESENT = 3
IMPUTE_POLICIES = ("zero", "mean")


@dataclass(slots=True, frozen=True)
class ColumnProfile:
    """Presence tally for one feature column."""

    name: str
    present: int
    missing: int

    @property
    def total(self) -> int:
        return self.present + self.missing

    @property
    def missing_fraction(self) -> Fraction:
        return Fraction(self.missing, self.total)


@dataclass(slots=True)
class FeatureMatrix:
    """Dense features, labels, and ids for the rows of one table."""

    ids: np.ndarray  # uint64, shape (n,)
    X: np.ndarray  # float64, shape (n, k)
    y: np.ndarray  # int8 in {0, 1}, shape (n,)
    columns: tuple[str, ...]
    means: dict[str, float] | None = None

    def __post_init__(self):
        n = len(self.ids)
        if self.X.shape != (n, len(self.columns)) or self.y.shape != (n,):
            raise InvalidInputError(
                f"inconsistent matrix shapes: ids {n}, X {self.X.shape}, y {self.y.shape}"
            )

    def __len__(self) -> int:
        return len(self.ids)


def profile_columns(
    table: PartitionedTable,
    columns: Sequence[str] = SCORE_COLUMNS,
) -> list[ColumnProfile]:
    """Count present/missing values per feature column in one pass."""
    total = len(table)
    if total == 0:
        raise InvalidInputError("cannot profile an empty table")
    missing = dict.fromkeys(columns, 0)
    for row in table.rows():
        for col in columns:
            if getattr(row, col) is None:
                missing[col] += 1
    return [ColumnProfile(col, total - missing[col], missing[col]) for col in columns]


def select_columns(
    profiles: Iterable[ColumnProfile],
    threshold: Fraction | float = DEFAULT_COL_MISSING_MAX,
    *,
    strict: bool = True,
) -> list[str]:
    """Columns whose missing fraction is under the threshold, input order kept.

    The boundary is exclusive by default (a column missing in exactly 20% of
    rows is dropped); pass strict=False for an inclusive boundary. The
    comparison is done on exact rationals, and a float threshold is read as
    its decimal literal (0.2 means exactly 1/5, not the nearest binary64),
    so one missing row in five sits exactly on the default boundary.
    """
    if isinstance(threshold, float):
        threshold = Fraction(str(threshold))
    else:
        threshold = Fraction(threshold)
    if not 0 < threshold <= 1:
        raise ConfigError(f"column threshold must be in (0, 1], got {float(threshold)}")
    if strict:
        kept = [p.name for p in profiles if p.missing_fraction < threshold]
    else:
        kept = [p.name for p in profiles if p.missing_fraction <= threshold]
    if not kept:
        raise ConfigError(
            f"no column passes the missing-value threshold {float(threshold)}"
        )
    return kept


def filter_rows(
    table: PartitionedTable,
    columns: Sequence[str] = SCORE_COLUMNS,
    min_present: int = DEFAULT_ROW_MIN_PRESENT,
) -> PartitionedTable:
    """Keep rows having at least min_present values among the given columns."""
    if min_present < 0:
        raise ConfigError(f"min_present must be >= 0, got {min_present}")
    cols = tuple(columns)

    def enough(row: ComparisonVector) -> bool:
        present = 0
        for col in cols:
            if getattr(row, col) is not None:
                present += 1
                if present >= min_present:
                    return True
        return min_present == 0

    return table.filter(enough)


def _column_means(table: PartitionedTable, columns: tuple[str, ...]) -> dict[str, float]:
    """Per-column mean of present values, accumulated in logical row order."""
    sums = dict.fromkeys(columns, 0.0)
    counts = dict.fromkeys(columns, 0)
    for row in table.rows():
        for col in columns:
            v = getattr(row, col)
            if v is not None:
                sums[col] += v
                counts[col] += 1
    means = {}
    for col in columns:
        if counts[col] == 0:
            raise InvalidInputError(f"column {col} has no present values to average")
        means[col] = sums[col] / counts[col]
    return means


def impute_and_vectorize(
    table: PartitionedTable,
    columns: Sequence[str],
    policy: str = "zero",
    *,
    means: Mapping[str, float] | None = None,
) -> FeatureMatrix:
    """Pack a row-filtered table into a FeatureMatrix, filling absences.

    Policy "zero" fills absent scores with 0.0 (maximum disagreement);
    "mean" fills with the per-column mean of present values, computed from
    this table unless precomputed means (e.g. from the training split) are
    supplied.
    """
    if policy not in IMPUTE_POLICIES:
        raise ConfigError(f"unknown imputation policy {policy!r}; choose from {IMPUTE_POLICIES}")
    cols = tuple(columns)
    if not cols:
        raise ConfigError("cannot vectorize with zero feature columns")

    if policy == "zero":
        fill = dict.fromkeys(cols, 0.0)
        kept_means = None
    else:
        if means is None:
            fill = _column_means(table, cols)
        else:
            missing = [c for c in cols if c not in means]
            if missing:
                raise ConfigError(f"supplied means lack column(s): {', '.join(missing)}")
            fill = {c: float(means[c]) for c in cols}
        kept_means = dict(fill)

    n = len(table)
    fills = [fill[c] for c in cols]
    col_idx = list(enumerate(cols))
    X = np.empty((n, len(cols)), dtype=np.float64)
    y = np.empty(n, dtype=np.int8)
    i = 0
    for rid, row in table.rows_with_ids():
        label = row.is_match
        if label is None:
            raise InvalidInputError(f"row id {rid} has no label; cannot vectorize for training")
        for j, col in col_idx:
            v = getattr(row, col)
            X[i, j] = fills[j] if v is None else v
        y[i] = 1 if label else 0
        i += 1
    return FeatureMatrix(ids=table.row_ids(), X=X, y=y, columns=cols, means=kept_means)


def preprocess_report(
    profiles: Sequence[ColumnProfile],
    retained: Sequence[str],
    full_count: int,
) -> str:
    """key=value report of what column/row filtering kept."""
    lines = [
        f"input_rows={profiles[0].total if profiles else 0}",
        f"retained_columns={','.join(retained)}",
        f"full_count={full_count}",
    ]
    for p in profiles:
        lines.append(f"column.{p.name}.present={p.present}")
        lines.append(f"column.{p.name}.missing={p.missing}")
        lines.append(f"column.{p.name}.missing_fraction={float(p.missing_fraction):.6f}")
    return "\n".join(lines) + "\n"
