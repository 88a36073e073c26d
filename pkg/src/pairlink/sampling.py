"""Seeded sampling and splitting.

Every decision here is a pure function of (seed, row id): whether a row
survives down-sampling and which split it lands in never depends on how the
table is partitioned or scheduled. Distinct operations draw from distinct
hash streams, so e.g. the rows kept by a fraction-0.1 down-sample are not
correlated with the rows that a later 0.7/0.2/0.1 split sends to train.

Fractions given as floats are interpreted as their decimal literals when a
threshold needs exact complement arithmetic (a 0.8 holdout is exactly the
mirror of a 0.2 holdout).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidArgumentError
from .rng import STREAM_FRACTION, STREAM_HOLDOUT, STREAM_SPLIT, unit_hash_array
from .table import PartitionedTable

__all__ = [
    "SamplingPlan",
    "SplitResult",
    "sample_fraction",
    "rebalance_negatives",
    "stratified_split",
    "holdout_split",
    "split_report",
]

DEFAULT_SEED = 3


def _decimal_fraction(x) -> Fraction:
    """Exact rational for a fraction given as float/str/Fraction.

    Floats are read as the decimal literal they print as, so 0.8 means 4/5
    and 1 - 0.8 is exactly 0.2's value; raw binary64 noise never leaks into
    threshold arithmetic.
    """
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


@dataclass(slots=True, frozen=True)
class SamplingPlan:
    """Split fractions and seed for rebalancing and splitting.

    train/test/validation apply to the stratified three-way split and must
    sum to 1. negative_fraction is the Bernoulli down-sampling rate for
    non-matches. holdout_test is the test share of the plain two-way split.
    """

    train: float = 0.7
    test: float = 0.2
    validation: float = 0.1
    negative_fraction: float = 0.1
    seed: int = DEFAULT_SEED
    holdout_test: float = 0.2

    def __post_init__(self):
        for name in ("train", "test", "validation"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidArgumentError(f"{name} fraction {v} outside [0, 1]")
        total = self.train + self.test + self.validation
        if abs(total - 1.0) > 1e-12:
            raise InvalidArgumentError(
                f"split fractions must sum to 1, got {self.train}+{self.test}+{self.validation}={total}"
            )
        if not 0.0 < self.negative_fraction <= 1.0:
            raise InvalidArgumentError(
                f"negative_fraction {self.negative_fraction} outside (0, 1]"
            )
        if not 0.0 < self.holdout_test < 1.0:
            raise InvalidArgumentError(f"holdout_test {self.holdout_test} outside (0, 1)")
        if not isinstance(self.seed, int):
            raise InvalidArgumentError(f"seed must be an integer, got {self.seed!r}")


@dataclass(slots=True)
class SplitResult:
    """Disjoint train/test/validation tables plus per-split class counts."""

    train: PartitionedTable
    test: PartitionedTable
    validation: PartitionedTable
    class_counts: dict[str, dict[bool, int]]
    warnings: list[str] = field(default_factory=list)

    def splits(self) -> dict[str, PartitionedTable]:
        return {"train": self.train, "test": self.test, "validation": self.validation}


def sample_fraction(table: PartitionedTable, fraction: float, seed: int = DEFAULT_SEED) -> PartitionedTable:
    """Bernoulli sample: keep each row iff hash(seed, row id) < fraction."""
    if not 0.0 <= fraction <= 1.0:
        raise InvalidArgumentError(f"sampling fraction {fraction} outside [0, 1]")
    masks = [
        unit_hash_array(seed, ids, STREAM_FRACTION) < fraction
        for ids in table.id_partitions()
    ]
    return table.filter_by_mask(masks)


def rebalance_negatives(
    table: PartitionedTable, fraction: float, seed: int = DEFAULT_SEED
) -> PartitionedTable:
    """Down-sample non-matches by `fraction`, keeping every match.

    One pass over the labeled table; row order is preserved, so positives
    stay interleaved where they were. A negative row survives exactly when
    sample_fraction with the same seed would keep it.
    """
    if not 0.0 < fraction <= 1.0:
        raise InvalidArgumentError(f"negative fraction {fraction} outside (0, 1]")
    id_parts = table.id_partitions()
    us = [unit_hash_array(seed, ids, STREAM_FRACTION) for ids in id_parts]
    masks = []
    for part_rows, u in zip(_row_partitions(table), us):
        pos = np.fromiter((r.is_match for r in part_rows), dtype=bool, count=len(part_rows))
        masks.append(pos | (u < fraction))
    return table.filter_by_mask(masks)


def _row_partitions(table: PartitionedTable):
    """Iterate the table's rows partition by partition."""
    sizes = table.sizes
    it = table.rows()
    for size in sizes:
        yield [next(it) for _ in range(size)]


def stratified_split(
    table: PartitionedTable,
    plan: SamplingPlan,
    *,
    expected_classes: tuple[bool, ...] = (True, False),
) -> SplitResult:
    """Three-way split by thresholding hash(seed, row id) at cumulative fractions.

    The assignment depends only on (seed, row id), so within every class the
    observed shares converge on the plan's fractions; classes are never mixed
    across splits differently on different partition layouts.
    """
    c1 = float(_decimal_fraction(plan.train))
    c2 = float(_decimal_fraction(plan.train) + _decimal_fraction(plan.test))
    us = [unit_hash_array(plan.seed, ids, STREAM_SPLIT) for ids in table.id_partitions()]
    train = table.filter_by_mask([u < c1 for u in us])
    test = table.filter_by_mask([(u >= c1) & (u < c2) for u in us])
    validation = table.filter_by_mask([u >= c2 for u in us])

    warnings = []
    input_counts = table.count_by(lambda r: r.is_match) if len(table) else {}
    for cls in expected_classes:
        if input_counts.get(cls, 0) == 0:
            warnings.append(f"class {cls} absent from input; its splits are empty")

    class_counts = {}
    for name, split in (("train", train), ("test", test), ("validation", validation)):
        counts = split.count_by(lambda r: r.is_match)
        class_counts[name] = {cls: counts.get(cls, 0) for cls in expected_classes}
    return SplitResult(train, test, validation, class_counts, warnings)


def holdout_split(
    table: PartitionedTable,
    test_fraction: float = 0.2,
    seed: int = DEFAULT_SEED,
) -> tuple[PartitionedTable, PartitionedTable]:
    """Two-way split into (train, test); disjoint and exhaustive.

    The test band sits at the bottom of the unit interval for fractions up
    to 1/2 and at the top beyond that, so swapping the roles of a 0.2 split
    reproduces a 0.8 split exactly rather than merely statistically.
    """
    f = _decimal_fraction(test_fraction)
    if not 0 < f < 1:
        raise InvalidArgumentError(f"test fraction {test_fraction} outside (0, 1)")
    us = [unit_hash_array(seed, ids, STREAM_HOLDOUT) for ids in table.id_partitions()]
    if f <= Fraction(1, 2):
        thr = float(f)
        test_masks = [u < thr for u in us]
    else:
        thr = float(1 - f)
        test_masks = [u >= thr for u in us]
    test = table.filter_by_mask(test_masks)
    train = table.filter_by_mask([~m for m in test_masks])
    return train, test


def split_report(result: SplitResult, plan: SamplingPlan) -> str:
    """key=value summary of a stratified split."""
    lines = [
        f"plan.train={plan.train}",
        f"plan.test={plan.test}",
        f"plan.validation={plan.validation}",
        f"plan.negative_fraction={plan.negative_fraction}",
        f"plan.seed={plan.seed}",
    ]
    for i, w in enumerate(result.warnings):
        lines.append(f"warning.{i}={w}")
    for name in ("train", "test", "validation"):
        counts = result.class_counts[name]
        pos = counts.get(True, 0)
        neg = counts.get(False, 0)
        lines.append(f"split.{name}.positives={pos}")
        lines.append(f"split.{name}.negatives={neg}")
        lines.append(f"split.{name}.total={pos + neg}")
    return "\n".join(lines) + "\n"
