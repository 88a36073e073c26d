"""Partitioned in-memory table with caching and deterministic parallel operations.

A :class:`PartitionedTable` is an immutable, ordered collection of rows split
into contiguous partitions. Per-partition work may run on any number of
worker threads; every operation is a pure function of (table contents,
arguments), never of scheduling, so logical row order and all derived
results are identical for any partition count and worker count.

Rows carry a 64-bit row id assigned once at ingestion and preserved through
maps and filters; randomized operations elsewhere key off (seed, row id) so
their decisions survive repartitioning.

Tables built from in-memory rows are materialized (and therefore cached)
from the start. Tables backed by a re-readable source (the corpus loader)
stay deferred until used; each use re-reads the source and bumps its pass
counter, and :meth:`PartitionedTable.cache` pins one materialization in
memory so later passes reuse it.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import InvalidArgumentError, RowFunctionError, TableResourceError

__all__ = ["PartitionedTable", "partition", "partition_sizes"]

_SENTINEL = object()


def partition_sizes(total: int, n: int) -> list[int]:
    """Contiguous split sizes: remainder rows go to the lowest-index partitions."""
    if n < 1:
        raise InvalidArgumentError(f"partition count must be >= 1, got {n}")
    base, rem = divmod(total, n)
    return [base + 1 if i < rem else base for i in range(n)]


class _DeferredSource:
    """Re-readable row source with a pass counter (one pass = one full re-read)."""

    __slots__ = ("reader", "count", "passes")

    def __init__(self, reader: Callable[[], Iterator[Any]], count: int):
        self.reader = reader
        self.count = count
        self.passes = 0


class PartitionedTable:
    """Immutable partitioned collection of rows with stable logical order."""

    __slots__ = ("_parts", "_id_parts", "_source", "_cached", "workers")

    def __init__(
        self,
        parts: list[list[Any]] | None,
        id_parts: list[np.ndarray] | None,
        *,
        source: _DeferredSource | None = None,
        workers: int = 1,
    ):
        if parts is None and source is None:
            raise InvalidArgumentError("table needs either materialized parts or a source")
        self._parts = parts
        self._id_parts = id_parts
        self._source = source
        self._cached = parts is not None
        self.workers = max(1, int(workers))

    # -- construction -----------------------------------------------------

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[Any],
        n: int,
        *,
        ids: Sequence[int] | np.ndarray | None = None,
        workers: int = 1,
    ) -> "PartitionedTable":
        rows = list(rows)
        if ids is None:
            id_arr = np.arange(len(rows), dtype=np.uint64)
        else:
            id_arr = np.asarray(ids, dtype=np.uint64)
            if len(id_arr) != len(rows):
                raise InvalidArgumentError("ids and rows must have equal length")
        sizes = partition_sizes(len(rows), n)
        parts, id_parts, start = [], [], 0
        for size in sizes:
            parts.append(rows[start : start + size])
            id_parts.append(id_arr[start : start + size])
            start += size
        return cls(parts, id_parts, workers=workers)

    @classmethod
    def deferred(
        cls,
        reader: Callable[[], Iterator[Any]],
        count: int,
        n: int,
        *,
        workers: int = 1,
    ) -> "PartitionedTable":
        """Table backed by a re-readable source; rows materialize per pass."""
        partition_sizes(count, n)  # validate n early
        table = cls(None, None, source=_DeferredSource(reader, count), workers=workers)
        table._id_parts = _split_ids(np.arange(count, dtype=np.uint64), partition_sizes(count, n))
        return table

    @classmethod
    def concat(cls, tables: Sequence["PartitionedTable"]) -> "PartitionedTable":
        """Concatenate tables in argument order, keeping rows, ids, and pieces."""
        if not tables:
            raise InvalidArgumentError("concat needs at least one table")
        parts: list[list[Any]] = []
        id_parts: list[np.ndarray] = []
        for t in tables:
            p, ids = t._materialized()
            parts.extend(p)
            id_parts.extend(ids)
        return cls(parts, id_parts, workers=tables[0].workers)

    # -- basic shape -------------------------------------------------------

    def __len__(self) -> int:
        if self._source is not None and self._parts is None:
            return self._source.count
        return sum(len(p) for p in self._parts)

    @property
    def partition_count(self) -> int:
        return len(self._id_parts)

    @property
    def sizes(self) -> list[int]:
        return [len(ids) for ids in self._id_parts]

    @property
    def cached(self) -> bool:
        return self._cached

    @property
    def source_passes(self) -> int:
        """Number of full re-reads of the backing source (0 for in-memory tables)."""
        return self._source.passes if self._source is not None else 0

    # -- materialization ---------------------------------------------------

    def _materialized(self) -> tuple[list[list[Any]], list[np.ndarray]]:
        if self._parts is not None:
            return self._parts, self._id_parts
        source = self._source
        source.passes += 1
        it = source.reader()
        parts = []
        for pidx, ids in enumerate(self._id_parts):
            size = len(ids)
            try:
                chunk = [next(it) for _ in range(size)]
            except MemoryError as exc:
                raise TableResourceError(
                    f"out of memory materializing partition {pidx}"
                ) from exc
            except StopIteration:
                raise InvalidArgumentError(
                    f"source yielded fewer than the declared {source.count} rows"
                ) from None
            parts.append(chunk)
        if next(it, _SENTINEL) is not _SENTINEL:
            raise InvalidArgumentError(
                f"source yielded more than the declared {source.count} rows"
            )
        return parts, self._id_parts

    def cache(self) -> "PartitionedTable":
        """Pin one materialization in memory; idempotent."""
        if self._cached:
            return self
        parts, id_parts = self._materialized()
        cached = PartitionedTable(parts, id_parts, source=self._source, workers=self.workers)
        cached._cached = True
        return cached

    # -- iteration ---------------------------------------------------------

    def rows(self) -> Iterator[Any]:
        parts, _ = self._materialized()
        for part in parts:
            yield from part

    def rows_with_ids(self) -> Iterator[tuple[int, Any]]:
        parts, id_parts = self._materialized()
        for part, ids in zip(parts, id_parts):
            yield from zip((int(i) for i in ids), part)

    def to_list(self) -> list[Any]:
        return list(self.rows())

    def row_ids(self) -> np.ndarray:
        if not self._id_parts:
            return np.empty(0, dtype=np.uint64)
        return np.concatenate(self._id_parts)

    def id_partitions(self) -> list[np.ndarray]:
        """Per-partition row-id arrays, in partition order. Treat as read-only."""
        return list(self._id_parts)

    def take(self, n: int) -> list[Any]:
        out = []
        for row in self.rows():
            if len(out) >= n:
                break
            out.append(row)
        return out

    # -- parallel per-partition execution -----------------------------------

    def _run_per_partition(self, task: Callable[[int], Any]) -> list[Any]:
        """Run task(pidx) for every partition; results in partition order."""
        n = self.partition_count
        if self.workers <= 1 or n <= 1:
            return [task(i) for i in range(n)]
        with ThreadPoolExecutor(max_workers=min(self.workers, n)) as pool:
            return list(pool.map(task, range(n)))

    # -- transformations -----------------------------------------------------

    def map_partitions(self, fn: Callable[[Any], Any]) -> "PartitionedTable":
        """Apply a pure per-row function; partition structure and ids preserved.

        A failure on any row aborts the whole operation, reporting the first
        failing row id in logical order.
        """
        parts, id_parts = self._materialized()

        def task(pidx: int):
            out, part, ids = [], parts[pidx], id_parts[pidx]
            for idx, row in enumerate(part):
                try:
                    out.append(fn(row))
                except Exception as exc:  # noqa: BLE001 - rewrapped below
                    return idx, int(ids[idx]), exc
            return out

        results = self._run_per_partition(task)
        failures = [
            (pidx, idx, rid, exc)
            for pidx, res in enumerate(results)
            if isinstance(res, tuple)
            for idx, rid, exc in [res]
        ]
        if failures:
            pidx, idx, rid, exc = min(failures, key=lambda f: (f[0], f[1]))
            raise RowFunctionError(
                f"row function failed on row id {rid} (partition {pidx}): {exc}",
                row_id=rid,
            ) from exc
        return PartitionedTable(results, id_parts, workers=self.workers)

    def filter(self, pred: Callable[[Any], bool]) -> "PartitionedTable":
        """Keep rows satisfying pred; ids preserved, partitions may go ragged."""
        parts, id_parts = self._materialized()

        def task(pidx: int):
            kept_rows, kept_idx = [], []
            for idx, row in enumerate(parts[pidx]):
                if pred(row):
                    kept_rows.append(row)
                    kept_idx.append(idx)
            return kept_rows, id_parts[pidx][kept_idx]

        results = self._run_per_partition(task)
        return PartitionedTable(
            [r for r, _ in results], [i for _, i in results], workers=self.workers
        )

    def filter_by_mask(self, masks: Sequence[np.ndarray]) -> "PartitionedTable":
        """Keep rows where the per-partition boolean mask is true."""
        parts, id_parts = self._materialized()
        if len(masks) != len(parts):
            raise InvalidArgumentError(
                f"got {len(masks)} masks for {len(parts)} partitions"
            )
        for pidx, (part, mask) in enumerate(zip(parts, masks)):
            if len(mask) != len(part):
                raise InvalidArgumentError(
                    f"mask length {len(mask)} != partition {pidx} size {len(part)}"
                )
        new_parts, new_ids = [], []
        for part, ids, mask in zip(parts, id_parts, masks):
            keep = mask.tolist()
            new_parts.append([row for row, k in zip(part, keep) if k])
            new_ids.append(ids[mask])
        return PartitionedTable(new_parts, new_ids, workers=self.workers)

    def repartition(self, n: int) -> "PartitionedTable":
        """Re-split the logical row sequence contiguously into n partitions."""
        rows = self.to_list()
        return PartitionedTable.from_rows(rows, n, ids=self.row_ids(), workers=self.workers)

    # -- aggregation ---------------------------------------------------------

    def count_by(self, key: Callable[[Any], Any]) -> dict[Any, int]:
        """Count rows per key(row); per-partition tallies merged by summation."""
        parts, _ = self._materialized()

        def task(pidx: int):
            return Counter(map(key, parts[pidx]))

        total: Counter = Counter()
        for c in self._run_per_partition(task):
            total.update(c)
        return dict(total)

    def with_workers(self, workers: int) -> "PartitionedTable":
        clone = PartitionedTable(self._parts, self._id_parts, source=self._source, workers=workers)
        clone._cached = self._cached
        return clone


def _split_ids(ids: np.ndarray, sizes: Iterable[int]) -> list[np.ndarray]:
    out, start = [], 0
    for size in sizes:
        out.append(ids[start : start + size])
        start += size
    return out


def partition(rows: Sequence[Any], n: int, *, ids=None, workers: int = 1) -> PartitionedTable:
    """Split rows into n contiguous partitions whose sizes differ by at most 1."""
    return PartitionedTable.from_rows(rows, n, ids=ids, workers=workers)
