"""Radix sorting of packed k-mer arrays and run-length counting.

Two sorters share one ordering contract (ascending word-sequence order,
payload moving with its key):

* ``sort_inplace``: MSD radix with 8-bit digits and American-flag cycle
  permutation.  Its workspace is a fixed number of 256-entry tables per
  digit level, so auxiliary memory does not grow with n.
* ``sort_outofplace``: one stable scatter on the top digit into an auxiliary
  array, then LSD passes inside each top-level bucket, ping-ponging between
  the two arrays.  Faster, but needs a second array of equal size.

With ``threads > 1`` both split work by top-level digit bucket.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .seqmodel import keys_to_strings, n_words

INSERTION_CUTOFF = 32
PARALLEL_CUTOFF = 1 << 14
BUDGET_SLACK = 0.10
SORTERS = ("auto", "inplace", "outofplace")


@dataclass
class KmerArray:
    keys: np.ndarray  # (n, W) uint64
    payload: Optional[np.ndarray] = None  # (n,) uint64, read_id << 32 | pos
    k: Optional[int] = None

    def __post_init__(self):
        self.keys = np.ascontiguousarray(self.keys, dtype=np.uint64)
        if self.keys.ndim == 1:
            self.keys = self.keys.reshape(-1, 1)
        if self.payload is not None:
            self.payload = np.ascontiguousarray(self.payload, dtype=np.uint64)

    def __len__(self):
        return self.keys.shape[0]

    @property
    def W(self) -> int:
        return self.keys.shape[1]

    @property
    def record_width(self) -> int:
        return 8 * self.W + (8 if self.payload is not None else 0)

    @property
    def n_digits(self) -> int:
        bits = 64 * self.W if self.k is None else 2 * self.k
        return (bits + 7) // 8

    def _payload_or_dummy(self):
        return self.payload if self.payload is not None else np.zeros(1, dtype=np.uint64)


# ---------------------------------------------------------------- shared kernels


@njit(nogil=True, cache=True)
def _digit(keys, i, d):
    return np.int64((keys[i, d >> 3] >> np.uint64(56 - 8 * (d & 7))) & np.uint64(255))


@njit(nogil=True, cache=True)
def _swap(keys, payload, hp, i, j, W):
    for w in range(W):
        t = keys[i, w]
        keys[i, w] = keys[j, w]
        keys[j, w] = t
    if hp:
        t = payload[i]
        payload[i] = payload[j]
        payload[j] = t


@njit(nogil=True, cache=True)
def _less_rows(keys, i, j, W):
    for w in range(W):
        if keys[i, w] != keys[j, w]:
            return keys[i, w] < keys[j, w]
    return False


@njit(nogil=True, cache=True)
def _insertion_sort(keys, payload, hp, lo, hi, W, tmp):
    for i in range(lo + 1, hi):
        if not _less_rows(keys, i, i - 1, W):
            continue
        for w in range(W):
            tmp[w] = keys[i, w]
        tp = payload[i] if hp else np.uint64(0)
        j = i
        while j > lo:
            smaller = False
            for w in range(W):
                if tmp[w] != keys[j - 1, w]:
                    smaller = tmp[w] < keys[j - 1, w]
                    break
            if not smaller:
                break
            for w in range(W):
                keys[j, w] = keys[j - 1, w]
            if hp:
                payload[j] = payload[j - 1]
            j -= 1
        for w in range(W):
            keys[j, w] = tmp[w]
        if hp:
            payload[j] = tp


# ---------------------------------------------------------------- in-place MSD


@njit(nogil=True, cache=True)
def _flag_pass(keys, payload, hp, lo, hi, d, W, counts, heads, tails):
    """American-flag permutation of [lo, hi) on digit d; fills bucket bounds.

    Afterwards bucket b occupies [tails[b] - counts[b], tails[b]).
    """
    for b in range(256):
        counts[b] = 0
    for i in range(lo, hi):
        counts[_digit(keys, i, d)] += 1
    pos = lo
    for b in range(256):
        heads[b] = pos
        pos += counts[b]
        tails[b] = pos
    for b in range(256):
        while heads[b] < tails[b]:
            i = heads[b]
            v = _digit(keys, i, d)
            while v != b:
                _swap(keys, payload, hp, i, heads[v], W)
                heads[v] += 1
                v = _digit(keys, i, d)
            heads[b] += 1


@njit(nogil=True, cache=True)
def _msd_sort(keys, payload, hp, lo, hi, d0, n_digits, W, cutoff,
              counts, heads, tails, stack, tmp):
    """Depth-first MSD radix sort of [lo, hi) starting at digit d0.

    ``stack`` is an (n_digits * 255 + 1, 3) table of pending ranges.
    """
    sp = 0
    stack[0, 0] = lo
    stack[0, 1] = hi
    stack[0, 2] = d0
    sp = 1
    while sp > 0:
        sp -= 1
        a = stack[sp, 0]
        b = stack[sp, 1]
        d = stack[sp, 2]
        if b - a <= cutoff:
            _insertion_sort(keys, payload, hp, a, b, W, tmp)
            continue
        if d >= n_digits:
            continue
        _flag_pass(keys, payload, hp, a, b, d, W, counts, heads, tails)
        if d + 1 >= n_digits:
            continue
        for bucket in range(255, -1, -1):
            size = counts[bucket]
            if size > 1:
                stack[sp, 0] = tails[bucket] - size
                stack[sp, 1] = tails[bucket]
                stack[sp, 2] = d + 1
                sp += 1


@dataclass
class InplaceWorkspace:
    """Fixed-size scratch for one in-place sorting thread."""
    n_digits: int
    W: int
    counts: np.ndarray = field(init=False)
    heads: np.ndarray = field(init=False)
    tails: np.ndarray = field(init=False)
    stack: np.ndarray = field(init=False)
    tmp: np.ndarray = field(init=False)

    def __post_init__(self):
        self.counts = np.zeros(256, dtype=np.int64)
        self.heads = np.zeros(256, dtype=np.int64)
        self.tails = np.zeros(256, dtype=np.int64)
        self.stack = np.zeros((self.n_digits * 255 + 1, 3), dtype=np.int64)
        self.tmp = np.zeros(self.W, dtype=np.uint64)

    @property
    def nbytes(self) -> int:
        return sum(a.nbytes for a in (self.counts, self.heads, self.tails, self.stack, self.tmp))


def inplace_workspace_bytes(W: int, n_digits: int | None = None, threads: int = 1) -> int:
    nd = 8 * W if n_digits is None else n_digits
    return threads * InplaceWorkspace(nd, W).nbytes


def _split_buckets(sizes, threads):
    """Largest-first assignment of buckets to ``threads`` bins."""
    bins = [[] for _ in range(threads)]
    loads = [0] * threads
    for b in sorted(range(len(sizes)), key=lambda b: -sizes[b]):
        if sizes[b] == 0:
            break
        t = loads.index(min(loads))
        bins[t].append(b)
        loads[t] += sizes[b]
    return bins


def sort_inplace(arr: KmerArray, threads: int = 1) -> KmerArray:
    n = len(arr)
    if n < 2:
        return arr
    W, nd = arr.W, arr.n_digits
    hp = arr.payload is not None
    payload = arr._payload_or_dummy()
    if threads <= 1 or n < PARALLEL_CUTOFF or nd < 2:
        ws = InplaceWorkspace(nd, W)
        _msd_sort(arr.keys, payload, hp, 0, n, 0, nd, W, INSERTION_CUTOFF,
                  ws.counts, ws.heads, ws.tails, ws.stack, ws.tmp)
        return arr
    spaces = [InplaceWorkspace(nd, W) for _ in range(threads)]
    top = spaces[0]
    _flag_pass(arr.keys, payload, hp, 0, n, 0, W, top.counts, top.heads, top.tails)
    counts = top.counts.copy()
    tails = top.tails.copy()

    def work(t, buckets):
        ws = spaces[t]
        for b in buckets:
            _msd_sort(arr.keys, payload, hp, tails[b] - counts[b], tails[b], 1, nd, W,
                      INSERTION_CUTOFF, ws.counts, ws.heads, ws.tails, ws.stack, ws.tmp)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for f in [pool.submit(work, t, bs) for t, bs in enumerate(_split_buckets(counts, threads))]:
            f.result()
    return arr


# ---------------------------------------------------------------- out-of-place


@njit(nogil=True, cache=True)
def _scatter(src_k, src_p, dst_k, dst_p, hp, lo, hi, d, W, counts):
    """Stable counting scatter of [lo, hi) on digit d.  False if one bucket holds all."""
    for b in range(256):
        counts[b] = 0
    for i in range(lo, hi):
        counts[_digit(src_k, i, d)] += 1
    for b in range(256):
        if counts[b] == hi - lo:
            return False
    pos = lo
    for b in range(256):
        c = counts[b]
        counts[b] = pos
        pos += c
    for i in range(lo, hi):
        v = _digit(src_k, i, d)
        j = counts[v]
        counts[v] = j + 1
        for w in range(W):
            dst_k[j, w] = src_k[i, w]
        if hp:
            dst_p[j] = src_p[i]
    return True


@njit(nogil=True, cache=True)
def _lsd_range(a_k, a_p, b_k, b_p, hp, lo, hi, d_first, n_digits, W, counts):
    """LSD sort [lo, hi) of the (a) arrays on digits n_digits-1 .. d_first.

    Result ends in the (a) arrays.
    """
    in_a = True
    for d in range(n_digits - 1, d_first - 1, -1):
        if in_a:
            moved = _scatter(a_k, a_p, b_k, b_p, hp, lo, hi, d, W, counts)
        else:
            moved = _scatter(b_k, b_p, a_k, a_p, hp, lo, hi, d, W, counts)
        if moved:
            in_a = not in_a
    if not in_a:
        for i in range(lo, hi):
            for w in range(W):
                a_k[i, w] = b_k[i, w]
            if hp:
                a_p[i] = b_p[i]


def sort_outofplace(arr: KmerArray, threads: int = 1) -> KmerArray:
    n = len(arr)
    if n < 2:
        return arr
    W, nd = arr.W, arr.n_digits
    hp = arr.payload is not None
    payload = arr._payload_or_dummy()
    aux_k = np.empty_like(arr.keys)
    aux_p = np.empty_like(payload)
    counts = np.zeros(256, dtype=np.int64)
    if not _scatter(arr.keys, payload, aux_k, aux_p, hp, 0, n, 0, W, counts):
        aux_k[...] = arr.keys
        aux_p[...] = payload
    sizes = np.bincount(((aux_k[:, 0] >> np.uint64(56)) & np.uint64(255)).astype(np.int64),
                        minlength=256)
    bounds = np.zeros(257, dtype=np.int64)
    np.cumsum(sizes, out=bounds[1:])

    def work(buckets):
        cnt = np.zeros(256, dtype=np.int64)
        for b in buckets:
            lo, hi = bounds[b], bounds[b + 1]
            # sorted bucket lands in aux, then moves home
            _lsd_range(aux_k, aux_p, arr.keys, payload, hp, lo, hi, 1, nd, W, cnt)
            arr.keys[lo:hi] = aux_k[lo:hi]
            if hp:
                payload[lo:hi] = aux_p[lo:hi]

    if threads <= 1 or n < PARALLEL_CUTOFF:
        work(range(256))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for f in [pool.submit(work, bs) for bs in _split_buckets(sizes, threads)]:
                f.result()
    return arr


def select_sorter(n: int, record_width: int, memory_budget: Optional[float] = None,
                  override: str = "auto") -> str:
    """Out-of-place when the budget covers two arrays plus slack, else in-place."""
    if override not in SORTERS:
        raise ValueError(f"unknown sorter {override!r}")
    if override != "auto":
        return override
    if memory_budget is None:
        return "outofplace"
    need = 2 * n * record_width * (1 + BUDGET_SLACK)
    return "outofplace" if memory_budget >= need else "inplace"


def sort_kmers(arr: KmerArray, sorter: str, threads: int = 1) -> KmerArray:
    if sorter == "inplace":
        return sort_inplace(arr, threads)
    if sorter == "outofplace":
        return sort_outofplace(arr, threads)
    raise ValueError(f"unknown sorter {sorter!r}")


# ---------------------------------------------------------------- counting


@njit(nogil=True, cache=True)
def _run_starts(keys, W, out):
    n = keys.shape[0]
    r = 0
    for i in range(n):
        if i == 0:
            out[r] = 0
            r += 1
            continue
        for w in range(W):
            if keys[i, w] != keys[i - 1, w]:
                out[r] = i
                r += 1
                break
    return r


def run_length(keys: np.ndarray):
    """(unique keys, counts) of a sorted key array."""
    n = keys.shape[0]
    starts = np.empty(n, dtype=np.int64)
    r = _run_starts(keys, keys.shape[1], starts)
    starts = starts[:r]
    counts = np.diff(np.append(starts, n))
    return keys[starts], counts, starts


@dataclass
class Histogram:
    """Frequency histogram plus the k-mers whose count lies within the bounds."""
    counts: dict
    keys: np.ndarray
    kmer_counts: np.ndarray
    k: Optional[int] = None
    ext_offsets: Optional[np.ndarray] = None
    ext: Optional[np.ndarray] = None
    ordered: bool = True

    @property
    def total_instances(self) -> int:
        return sum(f * d for f, d in self.counts.items())

    @property
    def distinct(self) -> int:
        return sum(self.counts.values())

    def count_map(self) -> dict:
        """Filtered k-mers as {string: count}."""
        return dict(zip(keys_to_strings(self.keys, self.k), self.kmer_counts.tolist()))

    def extensions_of(self, i: int) -> list:
        seg = self.ext[self.ext_offsets[i]:self.ext_offsets[i + 1]]
        return [(int(v >> np.uint64(32)), int(v & np.uint64(0xFFFFFFFF))) for v in seg]

    @staticmethod
    def empty(W: int, k=None, extensions=False) -> "Histogram":
        return Histogram({}, np.zeros((0, W), dtype=np.uint64), np.zeros(0, dtype=np.int64), k,
                         np.zeros(1, dtype=np.int64) if extensions else None,
                         np.zeros(0, dtype=np.uint64) if extensions else None)

    @staticmethod
    def from_counts(keys, kmer_counts, lower, upper, k=None) -> "Histogram":
        hist = np.bincount(kmer_counts) if len(kmer_counts) else np.zeros(0, dtype=np.int64)
        freq = np.flatnonzero(hist)
        distinct = hist[freq]
        keep = (kmer_counts >= lower) & (kmer_counts <= upper)
        return Histogram(dict(zip(freq.tolist(), distinct.tolist())), keys[keep],
                         kmer_counts[keep], k)

    @staticmethod
    def merge(parts, W: int, k=None, extensions=False) -> "Histogram":
        """Combine histograms over disjoint key sets.

        The filtered list is left in part order; call ``sort_by_key`` before
        anything that needs k-mer order.
        """
        parts = list(parts)
        if not parts:
            return Histogram.empty(W, k, extensions)
        counts: dict = {}
        for p in parts:
            for f, d in p.counts.items():
                counts[f] = counts.get(f, 0) + d
        keys = np.concatenate([p.keys for p in parts]).reshape(-1, W)
        kc = np.concatenate([p.kmer_counts for p in parts])
        ext_offsets = ext = None
        if extensions:
            lengths = np.concatenate([np.diff(p.ext_offsets) for p in parts]).astype(np.int64)
            ext_offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
            np.cumsum(lengths, out=ext_offsets[1:])
            ext = np.concatenate([p.ext for p in parts])
        ordered = len(parts) == 1 and parts[0].ordered
        return Histogram(dict(sorted(counts.items())), keys, kc, k, ext_offsets, ext, ordered)

    def sort_by_key(self) -> "Histogram":
        """Reorder the filtered list (and its extensions) by k-mer; returns self."""
        if self.ordered:
            return self
        order = _key_order(self.keys, self.k)
        if self.ext is not None:
            self.ext_offsets, self.ext = _gather_segments(self.ext, np.diff(self.ext_offsets), order)
        self.keys = self.keys[order]
        self.kmer_counts = self.kmer_counts[order]
        self.ordered = True
        return self


def _key_order(keys, k=None) -> np.ndarray:
    """Permutation that sorts rows of ``keys``; radix sort carrying row indices."""
    arr = KmerArray(keys.copy(), np.arange(len(keys), dtype=np.uint64), k)
    sort_outofplace(arr)
    return arr.payload.astype(np.int64)


def _gather_segments(flat, lengths, order):
    """Reorder variable-length segments of ``flat``; returns (offsets, data)."""
    starts = np.zeros(len(lengths), dtype=np.int64)
    if len(lengths) > 1:
        np.cumsum(lengths[:-1], out=starts[1:])
    new_len = lengths[order]
    offsets = np.zeros(len(order) + 1, dtype=np.int64)
    np.cumsum(new_len, out=offsets[1:])
    idx = np.repeat(starts[order] - offsets[:-1], new_len) + np.arange(offsets[-1])
    return offsets, flat[idx]


def scan_count(arr: KmerArray, lower: int = 2, upper: int = 50) -> Histogram:
    """Run-length count a sorted array into a histogram and a filtered list."""
    if len(arr) == 0:
        return Histogram.empty(arr.W, arr.k, arr.payload is not None)
    uniq, counts, starts = run_length(arr.keys)
    hist = Histogram.from_counts(uniq, counts, lower, upper, arr.k)
    if arr.payload is not None:
        keep = (counts >= lower) & (counts <= upper)
        pay = arr.payload[np.repeat(keep, counts)]
        run = np.repeat(np.arange(int(keep.sum())), counts[keep])
        hist.ext = pay[np.lexsort((pay, run))]
        hist.ext_offsets = np.zeros(int(keep.sum()) + 1, dtype=np.int64)
        np.cumsum(counts[keep], out=hist.ext_offsets[1:])
    return hist


def empty_kmer_array(k: int, extensions: bool = False) -> KmerArray:
    W = n_words(k)
    return KmerArray(np.zeros((0, W), dtype=np.uint64),
                     np.zeros(0, dtype=np.uint64) if extensions else None, k)
