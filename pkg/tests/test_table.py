import numpy as np
import pytest
from hypothesis import given, strategies as st

from pairlink.errors import InvalidArgumentError, RowFunctionError
from pairlink.table import PartitionedTable, partition, partition_sizes


def test_partition_sizes_even():
    assert partition_sizes(100, 4) == [25, 25, 25, 25]


def test_partition_sizes_remainder_goes_first():
    assert partition_sizes(10, 3) == [4, 3, 3]
    assert partition_sizes(5, 4) == [2, 1, 1, 1]
    assert partition_sizes(3, 8) == [1, 1, 1, 0, 0, 0, 0, 0]
    assert partition_sizes(0, 2) == [0, 0]


def test_partition_sizes_rejects_bad_count():
    with pytest.raises(InvalidArgumentError):
        partition_sizes(10, 0)


@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=1, max_value=64))
def test_partition_sizes_invariants(total, n):
    sizes = partition_sizes(total, n)
    assert sum(sizes) == total
    assert len(sizes) == n
    assert max(sizes) - min(sizes) <= 1
    assert sizes == sorted(sizes, reverse=True)


def test_logical_order_is_partition_order():
    t = partition(list(range(10)), 3)
    assert t.to_list() == list(range(10))
    assert t.sizes == [4, 3, 3]
    assert t.row_ids().tolist() == list(range(10))


def test_rows_with_ids_pairs_up():
    t = partition(["a", "b", "c"], 2)
    assert list(t.rows_with_ids()) == [(0, "a"), (1, "b"), (2, "c")]


def test_map_preserves_order_and_ids_across_layouts():
    rows = list(range(97))
    expected = [r * r for r in rows]
    for n in (1, 4, 8):
        for workers in (1, 4):
            t = partition(rows, n, workers=workers)
            mapped = t.map_partitions(lambda r: r * r)
            assert mapped.to_list() == expected
            assert mapped.row_ids().tolist() == rows
            assert mapped.sizes == t.sizes


def test_map_failure_reports_first_failing_row_id():
    rows = list(range(50))

    def boom(r):
        if r in (23, 7, 41):
            raise ValueError(f"bad {r}")
        return r

    t = partition(rows, 5, workers=4)
    with pytest.raises(RowFunctionError) as err:
        t.map_partitions(boom)
    assert err.value.row_id == 7


def test_filter_keeps_ids():
    t = partition(list(range(20)), 4)
    kept = t.filter(lambda r: r % 3 == 0)
    assert kept.to_list() == [0, 3, 6, 9, 12, 15, 18]
    assert kept.row_ids().tolist() == [0, 3, 6, 9, 12, 15, 18]
    assert len(kept) == 7


def test_filter_by_mask():
    t = partition(list(range(6)), 2)
    masks = [np.array([True, False, True]), np.array([False, True, True])]
    kept = t.filter_by_mask(masks)
    assert kept.to_list() == [0, 2, 4, 5]
    assert kept.row_ids().tolist() == [0, 2, 4, 5]


def test_filter_by_mask_validates_shape():
    t = partition(list(range(6)), 2)
    with pytest.raises(InvalidArgumentError):
        t.filter_by_mask([np.array([True, False, True])])
    with pytest.raises(InvalidArgumentError):
        t.filter_by_mask([np.array([True]), np.array([False, True, True])])


def test_repartition_round_trip():
    t = partition(list(range(11)), 3)
    kept = t.filter(lambda r: r != 4)
    re = kept.repartition(5)
    assert re.to_list() == kept.to_list()
    assert re.row_ids().tolist() == kept.row_ids().tolist()
    assert re.partition_count == 5


def test_count_by_totals():
    rows = list(range(1000))
    for n in (1, 7):
        t = partition(rows, n, workers=3)
        counts = t.count_by(lambda r: r % 5)
        assert sum(counts.values()) == 1000
        assert counts == {k: 200 for k in range(5)}


def test_concat_keeps_pieces_and_ids():
    a = partition([1, 2, 3], 2)
    b = PartitionedTable.from_rows([4, 5], 1, ids=[10, 11])
    c = PartitionedTable.concat([a, b])
    assert c.to_list() == [1, 2, 3, 4, 5]
    assert c.row_ids().tolist() == [0, 1, 2, 10, 11]
    assert c.partition_count == 3


def test_take_returns_leading_rows():
    t = PartitionedTable.deferred(lambda: iter(range(100)), 100, 4)
    assert t.take(3) == [0, 1, 2]
    assert partition(list("abcdef"), 3).take(2) == ["a", "b"]


def test_deferred_source_pass_counting():
    def reader():
        return iter(range(12))

    t = PartitionedTable.deferred(reader, 12, 3)
    assert t.source_passes == 0
    assert t.to_list() == list(range(12))
    assert t.source_passes == 1
    assert len(t) == 12  # count comes from the declaration, no extra pass
    assert t.source_passes == 1
    t.to_list()
    assert t.source_passes == 2

    cached = t.cache()
    assert t.source_passes == 3
    assert cached.cached
    cached.to_list()
    cached.count_by(lambda r: r % 2)
    assert cached.source_passes == 3  # pinned: no further reads
    assert cached.cache() is cached


def test_from_rows_is_born_cached():
    t = partition([1, 2], 1)
    assert t.cached
    assert t.cache() is t
    assert t.source_passes == 0


def test_deferred_undercount_and_overcount_raise():
    short = PartitionedTable.deferred(lambda: iter(range(5)), 6, 2)
    with pytest.raises(InvalidArgumentError):
        short.to_list()
    long = PartitionedTable.deferred(lambda: iter(range(7)), 6, 2)
    with pytest.raises(InvalidArgumentError):
        long.to_list()


def test_worker_count_does_not_change_results():
    rows = [f"r{i}" for i in range(211)]
    base = partition(rows, 8, workers=1).map_partitions(str.upper).to_list()
    for workers in (2, 4, 16):
        got = partition(rows, 8, workers=workers).map_partitions(str.upper).to_list()
        assert got == base


def test_with_workers_keeps_contents():
    t = partition(list(range(9)), 2)
    u = t.with_workers(6)
    assert u.workers == 6
    assert u.to_list() == t.to_list()
    assert u.cached == t.cached


def test_ids_survive_map_then_filter_chain():
    t = partition(list(range(30)), 4, workers=2)
    out = t.map_partitions(lambda r: r * 2).filter(lambda r: r % 6 == 0)
    # rows 0,3,6,...: doubled values divisible by 6 come from originals divisible by 3
    assert out.row_ids().tolist() == [i for i in range(30) if (2 * i) % 6 == 0]


def test_empty_table():
    t = partition([], 3)
    assert len(t) == 0
    assert t.to_list() == []
    assert t.row_ids().tolist() == []
    assert t.count_by(lambda r: r) == {}
    assert t.filter(lambda r: True).to_list() == []


@given(
    rows=st.lists(st.integers(), max_size=200),
    n=st.integers(min_value=1, max_value=12),
    m=st.integers(min_value=1, max_value=12),
)
def test_partition_count_never_changes_logical_view(rows, n, m):
    a = partition(rows, n)
    b = partition(rows, m)
    assert a.to_list() == b.to_list()
    assert a.row_ids().tolist() == b.row_ids().tolist()
    assert a.count_by(lambda r: r % 7 if rows else 0) == b.count_by(
        lambda r: r % 7 if rows else 0
    )
