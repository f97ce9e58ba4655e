import tracemalloc

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kmersort.sortcount import (Histogram, KmerArray, inplace_workspace_bytes, run_length,
                                scan_count, select_sorter, sort_inplace, sort_kmers,
                                sort_outofplace)

SORTERS = [sort_inplace, sort_outofplace]


def random_keys(rng, n, W, k=None):
    keys = rng.integers(0, 2**64 - 1, size=(n, W), dtype=np.uint64, endpoint=True)
    if k is not None:
        # zero the unused low bits of the last word
        used = 2 * k - 64 * (W - 1)
        keys[:, -1] &= np.uint64(((1 << used) - 1) << (64 - used))
    return keys


def oracle_order(keys):
    return np.lexsort(keys.T[::-1])


@pytest.mark.parametrize("sort", SORTERS)
@pytest.mark.parametrize("n,W,k,threads", [(0, 1, 31, 1), (1, 1, 31, 1), (33, 1, 5, 1),
                                           (5000, 1, 31, 1), (5000, 2, 55, 1), (5000, 1, 32, 1),
                                           (40000, 2, None, 4), (40000, 1, 17, 3)])
def test_sorters_match_lexsort(rng, sort, n, W, k, threads):
    keys = random_keys(rng, n, W, k)
    payload = np.arange(n, dtype=np.uint64)
    arr = KmerArray(keys.copy(), payload.copy(), k)
    sort(arr, threads)
    order = oracle_order(keys)
    assert (arr.keys == keys[order]).all()
    # payload travels with its key: each (key, payload) pair is preserved
    assert (arr.keys == keys[arr.payload.astype(np.int64)]).all()


@pytest.mark.parametrize("sort", SORTERS)
def test_sorters_with_duplicates(rng, sort):
    keys = rng.integers(0, 4, size=(20000, 2)).astype(np.uint64) << np.uint64(60)
    arr = KmerArray(keys.copy(), None, 64)
    sort(arr, 2)
    assert (arr.keys == keys[oracle_order(keys)]).all()


@given(st.lists(st.tuples(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1)), max_size=200),
       st.sampled_from(SORTERS))
def test_sort_property(rows, sort):
    keys = np.array(rows, dtype=np.uint64).reshape(-1, 2)
    arr = KmerArray(keys.copy())
    sort(arr)
    assert [tuple(r) for r in arr.keys.tolist()] == sorted(rows)


def test_inplace_aux_is_constant(rng):
    peaks = []
    for n in (10**3, 10**4, 10**5):
        arr = KmerArray(random_keys(rng, n, 2))
        tracemalloc.start()
        sort_inplace(arr)
        peaks.append(tracemalloc.get_traced_memory()[1])
        tracemalloc.stop()
    assert max(peaks) <= 2 * inplace_workspace_bytes(2)
    assert max(peaks) - min(peaks) < 4096


def test_select_sorter_rules():
    assert select_sorter(1000, 16) == "outofplace"
    assert select_sorter(1000, 16, memory_budget=10 * 1000 * 16) == "outofplace"
    assert select_sorter(1000, 16, memory_budget=1.05 * 1000 * 16) == "inplace"
    assert select_sorter(1000, 16, memory_budget=2 * 1000 * 16 * 1.1) == "outofplace"
    assert select_sorter(1000, 16, memory_budget=2 * 1000 * 16) == "inplace"
    assert select_sorter(10, 16, memory_budget=0, override="outofplace") == "outofplace"
    assert select_sorter(10, 16, override="inplace") == "inplace"
    with pytest.raises(ValueError):
        select_sorter(10, 16, override="bogus")
    with pytest.raises(ValueError):
        sort_kmers(KmerArray(np.zeros((1, 1), dtype=np.uint64)), "bogus")


def test_run_length():
    keys = np.array([[1], [1], [2], [5], [5], [5]], dtype=np.uint64)
    uniq, counts, starts = run_length(keys)
    assert uniq[:, 0].tolist() == [1, 2, 5] and counts.tolist() == [2, 1, 3]
    assert starts.tolist() == [0, 2, 3]


def test_scan_count_histogram_and_filter():
    keys = np.array([[1]] * 3 + [[2]] + [[4]] * 2 + [[9]] * 3, dtype=np.uint64)
    h = scan_count(KmerArray(keys, None, 31), lower=2, upper=2)
    assert h.counts == {1: 1, 2: 1, 3: 2}
    assert h.distinct == 4 and h.total_instances == 9
    assert h.keys[:, 0].tolist() == [4] and h.kmer_counts.tolist() == [2]


def test_scan_count_extensions_sorted_within_run():
    keys = np.array([[3], [3], [3], [7]], dtype=np.uint64)
    pay = np.array([(5 << 32) | 9, (1 << 32) | 4, (5 << 32) | 2, 0], dtype=np.uint64)
    h = scan_count(KmerArray(keys, pay, 31), lower=1, upper=10)
    assert h.extensions_of(0) == [(1, 4), (5, 2), (5, 9)]
    assert h.extensions_of(1) == [(0, 0)]


def test_histogram_merge(rng):
    parts = []
    for lo in (0, 100, 50):
        keys = np.repeat(np.arange(lo, lo + 10, dtype=np.uint64), 2).reshape(-1, 1)
        pay = np.arange(len(keys), dtype=np.uint64)
        parts.append(scan_count(KmerArray(keys, pay, 31), 1, 5))
    h = Histogram.merge(parts, 1, 31, extensions=True)
    assert h.counts == {2: 30} and not h.ordered
    assert h.extensions_of(10) == [(0, 0), (0, 1)]
    h.sort_by_key()
    assert h.counts == {2: 30}
    assert h.keys[:, 0].tolist() == sorted(list(range(0, 10)) + list(range(50, 60))
                                           + list(range(100, 110)))
    assert h.extensions_of(10) == [(0, 0), (0, 1)]  # key 50 comes from the third part
    empty = Histogram.merge([], 1)
    assert empty.counts == {} and empty.distinct == 0
