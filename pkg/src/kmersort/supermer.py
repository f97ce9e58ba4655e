"""Supermer construction and expansion.

A supermer is a maximal run of consecutive k-mers of one read that share a
destination task.  Only its bases travel; the receiver re-expands it and
reconstructs each k-mer's extension from the supermer's first one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .errors import ConfigError, WireFormatError
from .minimizer import (DEFAULT_SEED, check_km, fmix64_nb, minimizers_of_read,
                        read_minimizers)
from .seqmodel import (Extension, Read, canonical as canonical_kmer, decode_codes,
                       encode_sequence, n_words, pack_kmer, pack_window, pack_window_rc,
                       row_less)


def pack_bases(codes) -> bytes:
    """4 bases per byte, first base in the top two bits, tail zero-filled."""
    codes = np.asarray(codes, dtype=np.uint8)
    n = len(codes)
    padded = np.zeros((n + 3) // 4 * 4, dtype=np.uint8)
    padded[:n] = codes
    quads = padded.reshape(-1, 4)
    return ((quads[:, 0] << 6) | (quads[:, 1] << 4) | (quads[:, 2] << 2) | quads[:, 3]).tobytes()


def unpack_bases(data: bytes, n: int) -> np.ndarray:
    raw = np.frombuffer(data, dtype=np.uint8)
    out = np.empty((len(raw), 4), dtype=np.uint8)
    for j in range(4):
        out[:, j] = (raw >> (6 - 2 * j)) & 3
    return out.reshape(-1)[:n]


@dataclass(frozen=True)
class Supermer:
    packed: bytes
    length: int
    dest_task: int = -1
    ext: Optional[Extension] = None

    @classmethod
    def from_sequence(cls, seq, dest_task=-1, ext=None):
        codes = encode_sequence(seq)
        return cls(pack_bases(codes), len(codes), dest_task, ext)

    @property
    def codes(self) -> np.ndarray:
        return unpack_bases(self.packed, self.length)

    @property
    def sequence(self) -> str:
        return decode_codes(self.codes)


def supermers_of_read(r: Read, k: int, m: int, seed: int = DEFAULT_SEED, s: int = 1,
                      canonical: bool = False, score_bits: int = 64) -> list:
    check_km(k, m)
    if r.length < k:
        return []
    mins = minimizers_of_read(r, k, m, seed, canonical, score_bits)
    dests = [mz.score % s for mz in mins]
    codes = r.codes
    out = []
    first = 0
    for i in range(1, len(dests) + 1):
        if i == len(dests) or dests[i] != dests[first]:
            seg = codes[first:i - 1 + k]
            out.append(Supermer(pack_bases(seg), len(seg), dests[first],
                                Extension(r.read_id, first)))
            first = i
    return out


def expand_supermer(sm: Supermer, k: int, canonical: bool = False) -> list:
    if sm.length < k:
        raise WireFormatError(f"supermer of length {sm.length} shorter than k={k}")
    seq = sm.sequence
    out = []
    for j in range(sm.length - k + 1):
        km = pack_kmer(seq[j:j + k], k)
        if canonical:
            km = canonical_kmer(km)
        ext = None if sm.ext is None else Extension(sm.ext.read_id, sm.ext.pos_in_read + j)
        out.append((km, ext))
    return out


def max_supermer_length(usable_bytes: int, extensions: bool) -> int:
    """Longest supermer whose wire record fits in ``usable_bytes``."""
    return 4 * (usable_bytes - 2 - (9 if extensions else 0))


def record_bytes(lengths: np.ndarray, extensions: bool) -> np.ndarray:
    """Uncompressed wire size of each supermer record."""
    return 2 + (np.asarray(lengths, dtype=np.int64) + 3) // 4 + (9 if extensions else 0)


# ---------------------------------------------------------------- compiled path


@njit(nogil=True, cache=True)
def _build_supermers(codes, starts, lengths, k, m, seed, s, canonical, shift,
                     sm_read, sm_start, sm_len, sm_task):
    max_len = 0
    for r in range(lengths.shape[0]):
        if lengths[r] > max_len:
            max_len = lengths[r]
    nk = max(max_len - k + 1, 1)
    score = np.empty(nk, dtype=np.uint64)
    mmer = np.empty(nk, dtype=np.uint64)
    pos = np.empty(nk, dtype=np.int64)
    cap = k - m + 2
    dq_score = np.empty(cap, dtype=np.uint64)
    dq_mmer = np.empty(cap, dtype=np.uint64)
    dq_pos = np.empty(cap, dtype=np.int64)
    su = np.uint64(s)
    n = 0
    for r in range(lengths.shape[0]):
        L = lengths[r]
        if L < k:
            continue
        read_minimizers(codes, starts[r], L, k, m, seed, canonical, shift,
                        score, mmer, pos, 0, dq_score, dq_mmer, dq_pos)
        cnt = L - k + 1
        first = 0
        cur = score[0] % su
        for i in range(1, cnt + 1):
            d = cur
            if i < cnt:
                d = score[i] % su
            if i == cnt or d != cur:
                sm_read[n] = r
                sm_start[n] = starts[r] + first
                sm_len[n] = i - first + k - 1
                sm_task[n] = np.int64(cur)
                n += 1
                first = i
                cur = d
    return n


@dataclass
class SupermerSet:
    """Supermers of one rank as offsets into that rank's code array."""
    codes: np.ndarray
    start: np.ndarray
    length: np.ndarray
    task: np.ndarray
    read_id: np.ndarray
    pos: np.ndarray

    def __len__(self):
        return len(self.start)

    def select(self, mask) -> "SupermerSet":
        return SupermerSet(self.codes, self.start[mask], self.length[mask], self.task[mask],
                           self.read_id[mask], self.pos[mask])

    def kmer_count(self, k: int) -> int:
        return int((self.length - k + 1).sum())


def build_supermers(codes: np.ndarray, starts: np.ndarray, lengths: np.ndarray,
                    read_ids: np.ndarray, k: int, m: int, seed: int = DEFAULT_SEED,
                    s: int = 1, canonical: bool = False, score_bits: int = 64) -> SupermerSet:
    """Supermers of every read in a concatenated code array (production order)."""
    check_km(k, m)
    starts = np.asarray(starts, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    cap = int(np.maximum(lengths - k + 1, 0).sum())
    sm_read = np.empty(cap, dtype=np.int64)
    sm_start = np.empty(cap, dtype=np.int64)
    sm_len = np.empty(cap, dtype=np.int64)
    sm_task = np.empty(cap, dtype=np.int64)
    n = _build_supermers(codes, starts, lengths, k, m, np.uint64(seed), s, canonical,
                         np.uint64(64 - score_bits), sm_read, sm_start, sm_len, sm_task)
    sm_read = sm_read[:n]
    sm_start = sm_start[:n].copy()
    return SupermerSet(codes, sm_start, sm_len[:n].copy(), sm_task[:n].copy(),
                       np.asarray(read_ids, dtype=np.int64)[sm_read],
                       sm_start - starts[sm_read])


def split_long(sms: SupermerSet, max_len: int, k: int):
    """Split supermers longer than ``max_len`` into pieces overlapping by k-1 bases.

    Returns the new set and the number of splits performed.
    """
    if max_len < k:
        raise ConfigError(f"batch too small: a supermer record of {k} bases does not fit")
    long_ = sms.length > max_len
    if not long_.any():
        return sms, 0
    step = max_len - (k - 1)
    # pieces per supermer: 1 + ceil((len - max_len) / step)
    pieces = np.ones(len(sms), dtype=np.int64)
    pieces[long_] = 1 + (sms.length[long_] - max_len + step - 1) // step
    owner = np.repeat(np.arange(len(sms)), pieces)
    first = np.zeros(len(sms) + 1, dtype=np.int64)
    np.cumsum(pieces, out=first[1:])
    j = np.arange(len(owner)) - first[owner]
    offset = j * step
    length = np.minimum(sms.length[owner] - offset, max_len)
    out = SupermerSet(sms.codes, sms.start[owner] + offset, length, sms.task[owner],
                      sms.read_id[owner], sms.pos[owner] + offset)
    return out, int(pieces.sum() - len(sms))


@njit(nogil=True, cache=True)
def _first_kmer_task(codes, start, k, m, seed, canonical, shift, s):
    mask = (np.uint64(1) << np.uint64(2 * m)) - np.uint64(1)
    rc_shift = np.uint64(2 * (m - 1))
    fwd = np.uint64(0)
    rev = np.uint64(0)
    best_s = np.uint64(0)
    best_v = np.uint64(0)
    have = False
    for p in range(k):
        c = np.uint64(codes[start + p])
        fwd = ((fwd << np.uint64(2)) | c) & mask
        rev = (rev >> np.uint64(2)) | ((np.uint64(3) - c) << rc_shift)
        if p < m - 1:
            continue
        v = fwd
        if canonical and rev < v:
            v = rev
        sc = fmix64_nb(v ^ seed) >> shift
        if not have or sc < best_s or (sc == best_s and v < best_v):
            best_s = sc
            best_v = v
            have = True
    return np.int64(best_s % np.uint64(s))


@njit(nogil=True, cache=True)
def _record_tasks(codes, rec_start, k, m, seed, canonical, shift, s, out):
    for i in range(rec_start.shape[0]):
        out[i] = _first_kmer_task(codes, rec_start[i], k, m, seed, canonical, shift, s)


def record_tasks(codes, rec_start, k, m, seed=DEFAULT_SEED, s=1, canonical=False,
                 score_bits=64) -> np.ndarray:
    """Destination task of each supermer, recomputed from its first k-mer."""
    out = np.empty(len(rec_start), dtype=np.int64)
    _record_tasks(codes, np.asarray(rec_start, dtype=np.int64), k, m, np.uint64(seed),
                  canonical, np.uint64(64 - score_bits), s, out)
    return out


@njit(nogil=True, cache=True)
def _expand(codes, rec_start, rec_len, rec_rid, rec_pos, k, W, canonical, with_ext,
            out_keys, out_payload, fwd, rev):
    """Rolling expansion: each step shifts the packed window by one base."""
    last_w = (k - 1) >> 5
    last_shift = np.uint64(62 - 2 * ((k - 1) & 31))
    clear_w = k >> 5
    clear_mask = ~(np.uint64(3) << np.uint64(62 - 2 * (k & 31))) if k < 32 * W else ~np.uint64(0)
    n = 0
    for r in range(rec_start.shape[0]):
        s0 = rec_start[r]
        for j in range(rec_len[r] - k + 1):
            if j == 0:
                pack_window(codes, s0, k, W, fwd)
                if canonical:
                    pack_window_rc(codes, s0, k, W, rev)
            else:
                c = np.uint64(codes[s0 + j + k - 1])
                for w in range(W - 1):
                    fwd[w] = (fwd[w] << np.uint64(2)) | (fwd[w + 1] >> np.uint64(62))
                fwd[W - 1] = fwd[W - 1] << np.uint64(2)
                fwd[last_w] |= c << last_shift
                if canonical:
                    for w in range(W - 1, 0, -1):
                        rev[w] = (rev[w] >> np.uint64(2)) | (rev[w - 1] << np.uint64(62))
                    rev[0] = (rev[0] >> np.uint64(2)) | ((np.uint64(3) - c) << np.uint64(62))
                    if clear_w < W:
                        rev[clear_w] &= clear_mask
            use_rev = canonical and row_less(rev, fwd, W)
            for w in range(W):
                out_keys[n, w] = rev[w] if use_rev else fwd[w]
            if with_ext:
                out_payload[n] = (np.uint64(rec_rid[r]) << np.uint64(32)) | np.uint64(rec_pos[r] + j)
            n += 1
    return n


def expand_records(codes, rec_start, rec_len, k, canonical=False, rec_rid=None, rec_pos=None):
    """Expand supermer records into an (n, W) key array and optional payload.

    The payload packs ``read_id << 32 | pos_in_read`` per k-mer instance.
    """
    rec_start = np.asarray(rec_start, dtype=np.int64)
    rec_len = np.asarray(rec_len, dtype=np.int64)
    if len(rec_len) and rec_len.min() < k:
        raise WireFormatError(f"supermer shorter than k={k}")
    W = n_words(k)
    total = int((rec_len - k + 1).sum())
    keys = np.empty((total, W), dtype=np.uint64)
    with_ext = rec_rid is not None
    payload = np.empty(total if with_ext else 0, dtype=np.uint64)
    dummy = np.zeros(0, dtype=np.int64)
    _expand(codes, rec_start, rec_len,
            dummy if rec_rid is None else np.asarray(rec_rid, dtype=np.int64),
            dummy if rec_pos is None else np.asarray(rec_pos, dtype=np.int64),
            k, W, canonical, with_ext, keys, payload, np.empty(W, dtype=np.uint64),
            np.empty(W, dtype=np.uint64))
    return keys, (payload if with_ext else None)
