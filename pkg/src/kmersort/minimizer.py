"""Hash-scored minimizers found with a monotonic deque.

The score of an m-mer is the 64-bit MurmurHash3 finalizer applied to its
packed value XOR a seed; the same score (mod the task count) picks the
destination task.  The minimizer of a k-mer is the m-mer with the smallest
key ``(score, m-mer value, position)``.

``minimizers_of_read`` is the readable reference built on
``collections.deque``; ``window_minimizers`` runs the same algorithm in a
compiled kernel over many reads at once and is what the pipeline uses.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError
from .seqmodel import MAX_M, Read, check_k, encode_sequence

DEFAULT_SEED = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1
FMIX_C1 = 0xFF51AFD7ED558CCD
FMIX_C2 = 0xC4CEB9FE1A85EC53


def fmix64(x: int) -> int:
    x &= MASK64
    x ^= x >> 33
    x = (x * FMIX_C1) & MASK64
    x ^= x >> 33
    x = (x * FMIX_C2) & MASK64
    x ^= x >> 33
    return x


def mmer_score(packed: int, seed: int = DEFAULT_SEED, score_bits: int = 64) -> int:
    """Score of a packed m-mer.

    ``score_bits`` < 64 keeps only the top bits of the hash.  The full finalizer
    is a bijection, so distinct m-mers never tie; truncation exists so tests can
    build genuinely colliding scores.
    """
    return fmix64(packed ^ seed) >> (64 - score_bits)


def destination_task(minimizer_score: int, s: int) -> int:
    if s < 1:
        raise ConfigError(f"task count must be >= 1, got {s}")
    return minimizer_score % s


def check_km(k: int, m: int) -> None:
    check_k(k)
    if not (1 <= m < k and m <= MAX_M):
        raise ConfigError(f"need 1 <= m < k and m <= {MAX_M}, got k={k} m={m}")


def rc_mmer(value: int, m: int) -> int:
    out = 0
    for _ in range(m):
        out = (out << 2) | (3 - (value & 3))
        value >>= 2
    return out


@dataclass(frozen=True)
class ScoredMmer:
    mmer: int
    score: int
    pos: int

    @property
    def key(self):
        return (self.score, self.mmer, self.pos)


def sliding_window_minima(values, w: int) -> list:
    """Minimum of every length-``w`` window, via the monotonic deque."""
    dq: deque = deque()
    out = []
    for i, v in enumerate(values):
        while dq and values[dq[-1]] > v:
            dq.pop()
        dq.append(i)
        if dq[0] <= i - w:
            dq.popleft()
        if i >= w - 1:
            out.append(values[dq[0]])
    return out


def scored_mmers(r: Read, m: int, seed: int = DEFAULT_SEED, canonical: bool = False,
                 score_bits: int = 64) -> list:
    codes = r.codes
    mask = (1 << (2 * m)) - 1
    value = 0
    out = []
    for p, c in enumerate(codes):
        value = ((value << 2) | int(c)) & mask
        if p >= m - 1:
            v = value
            if canonical:
                v = min(v, rc_mmer(v, m))
            out.append(ScoredMmer(v, mmer_score(v, seed, score_bits), p - m + 1))
    return out


def minimizers_of_read(r: Read, k: int, m: int, seed: int = DEFAULT_SEED,
                       canonical: bool = False, score_bits: int = 64) -> list:
    """One ScoredMmer per k-mer of ``r``, left to right.

    Deque keys never decrease front to back.  Equal ``(score, m-mer)`` pairs are
    both kept: the older one wins while it is in the window and the newer one
    must survive its expiry.
    """
    check_km(k, m)
    span = k - m
    dq: deque = deque()
    out = []
    for sm in scored_mmers(r, m, seed, canonical, score_bits):
        while dq and (dq[-1].score, dq[-1].mmer) > (sm.score, sm.mmer):
            dq.pop()
        dq.append(sm)
        i = sm.pos - span
        if i < 0:
            continue
        if dq[0].pos < i:
            dq.popleft()
        out.append(dq[0])
    return out


# ---------------------------------------------------------------- compiled path


@njit(nogil=True, cache=True)
def fmix64_nb(x):
    x ^= x >> np.uint64(33)
    x *= np.uint64(FMIX_C1)
    x ^= x >> np.uint64(33)
    x *= np.uint64(FMIX_C2)
    x ^= x >> np.uint64(33)
    return x


@njit(nogil=True, cache=True)
def read_minimizers(codes, start, length, k, m, seed, canonical, shift,
                    out_score, out_mmer, out_pos, out_off,
                    dq_score, dq_mmer, dq_pos):
    """Minimizers of the k-mers of codes[start:start+length].

    Results go to out_*[out_off : out_off + length - k + 1]; positions are
    relative to ``start``.  dq_* are ring buffers of capacity >= k - m + 2.
    Returns the number of deque insertions.
    """
    cap = dq_score.shape[0]
    mask = (np.uint64(1) << np.uint64(2 * m)) - np.uint64(1)
    rc_shift = np.uint64(2 * (m - 1))
    span = k - m
    fwd = np.uint64(0)
    rev = np.uint64(0)
    head = 0
    size = 0
    inserts = 0
    for p in range(length):
        c = np.uint64(codes[start + p])
        fwd = ((fwd << np.uint64(2)) | c) & mask
        rev = (rev >> np.uint64(2)) | ((np.uint64(3) - c) << rc_shift)
        if p < m - 1:
            continue
        v = fwd
        if canonical and rev < v:
            v = rev
        sc = fmix64_nb(v ^ seed) >> shift
        pos = p - m + 1
        while size > 0:
            b = (head + size - 1) % cap
            if dq_score[b] > sc or (dq_score[b] == sc and dq_mmer[b] > v):
                size -= 1
            else:
                break
        t = (head + size) % cap
        dq_score[t] = sc
        dq_mmer[t] = v
        dq_pos[t] = pos
        size += 1
        inserts += 1
        i = pos - span
        if i < 0:
            continue
        if dq_pos[head] < i:
            head = (head + 1) % cap
            size -= 1
        out_score[out_off + i] = dq_score[head]
        out_mmer[out_off + i] = dq_mmer[head]
        out_pos[out_off + i] = dq_pos[head]
    return inserts


@njit(nogil=True, cache=True)
def _batch_minimizers(codes, starts, lengths, k, m, seed, canonical, shift,
                      out_score, out_mmer, out_pos, out_offsets):
    cap = k - m + 2
    dq_score = np.empty(cap, dtype=np.uint64)
    dq_mmer = np.empty(cap, dtype=np.uint64)
    dq_pos = np.empty(cap, dtype=np.int64)
    inserts = 0
    for r in range(starts.shape[0]):
        if lengths[r] < k:
            continue
        inserts += read_minimizers(codes, starts[r], lengths[r], k, m, seed, canonical,
                                   shift, out_score, out_mmer, out_pos, out_offsets[r],
                                   dq_score, dq_mmer, dq_pos)
    return inserts


def window_minimizers(codes: np.ndarray, starts: np.ndarray, lengths: np.ndarray,
                      k: int, m: int, seed: int = DEFAULT_SEED, canonical: bool = False,
                      score_bits: int = 64):
    """Minimizers for every k-mer of every read in a concatenated code array.

    Returns (score, mmer, pos, offsets, inserts): per-k-mer arrays in read
    order, ``offsets[r]`` the index of read r's first k-mer, and the total
    number of deque insertions.
    """
    check_km(k, m)
    lengths = np.asarray(lengths, dtype=np.int64)
    starts = np.asarray(starts, dtype=np.int64)
    per_read = np.maximum(lengths - k + 1, 0)
    offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
    np.cumsum(per_read, out=offsets[1:])
    total = int(offsets[-1])
    score = np.empty(total, dtype=np.uint64)
    mmer = np.empty(total, dtype=np.uint64)
    pos = np.empty(total, dtype=np.int64)
    inserts = _batch_minimizers(codes, starts, lengths, k, m, np.uint64(seed), canonical,
                                np.uint64(64 - score_bits), score, mmer, pos, offsets)
    return score, mmer, pos, offsets, int(inserts)


def read_window_minimizers(r: Read, k: int, m: int, seed: int = DEFAULT_SEED,
                           canonical: bool = False, score_bits: int = 64) -> list:
    """Compiled-path counterpart of :func:`minimizers_of_read`."""
    codes = encode_sequence(r.bases)
    score, mmer, pos, _, _ = window_minimizers(
        codes, np.array([0]), np.array([len(codes)]), k, m, seed, canonical, score_bits)
    return [ScoredMmer(int(v), int(s), int(p)) for s, v, p in zip(score, mmer, pos)]
