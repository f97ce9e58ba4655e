"""Byte formats for supermer and kmerlist messages (all little-endian).

Supermer record::

    u16 len | ceil(len/4) bytes, 4 bases/byte, first base in bits 7..6
            | [extension block]

Extension block (only when extensions are exchanged)::

    u8 tag | (i8 read_id delta  if tag & 1 else u32 read_id)
           | (i8 pos delta      if tag & 2 else u32 pos)

Deltas are taken against the previous record of the same stream within the
same batch; the first record of a batch always carries full fields.  A record
with len == 0 terminates a batch payload.

Kmerlist record::

    W x u64 key words | u32 count      (count >= 1; a zero count terminates)

Every batch on the wire is ``payload | u16 0 | zero fill`` to exactly
``batch_size`` bytes.  See docs/wire-format.md for worked examples.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import WireFormatError
from .seqmodel import Extension
from .supermer import Supermer, pack_bases

SENTINEL_BYTES = 2
FULL_EXT_BYTES = 9
TAG_READ = 1
TAG_POS = 2


# ---------------------------------------------------------------- supermer kernels


@njit(nogil=True, cache=True)
def _ext_size(dr, dp, have_prev):
    size = 1
    size += 1 if have_prev and -128 <= dr <= 127 else 4
    size += 1 if have_prev and -128 <= dp <= 127 else 4
    return size


@njit(nogil=True, cache=True)
def _plan_supermers(length, rid, pos, ext, usable, cuts):
    """Greedy round fill.  cuts[j] is the first record index of batch j.

    Returns the number of batches, or -1 - i if record i can never fit.
    """
    n_batches = 0
    used = usable + 1
    have_prev = False
    prev_r = 0
    prev_p = 0
    for i in range(length.shape[0]):
        base = 2 + (length[i] + 3) // 4
        size = base
        if ext:
            size += _ext_size(rid[i] - prev_r, pos[i] - prev_p, have_prev)
        if used + size > usable:
            size = base + (FULL_EXT_BYTES if ext else 0)
            if size > usable:
                return -1 - i
            cuts[n_batches] = i
            n_batches += 1
            used = 0
        used += size
        have_prev = True
        prev_r = rid[i]
        prev_p = pos[i]
    return n_batches


@njit(nogil=True, cache=True)
def _put_u32(out, off, v):
    for b in range(4):
        out[off + b] = (v >> (8 * b)) & 255


@njit(nogil=True, cache=True)
def _encode_supermers(codes, start, length, rid, pos, order, lo, hi, ext, out, off):
    have_prev = False
    prev_r = 0
    prev_p = 0
    for t in range(lo, hi):
        i = order[t]
        L = length[i]
        out[off] = L & 255
        out[off + 1] = (L >> 8) & 255
        off += 2
        nb = (L + 3) // 4
        for j in range(nb):
            out[off + j] = 0
        s0 = start[i]
        for j in range(L):
            out[off + (j >> 2)] |= np.uint8(codes[s0 + j] << (6 - 2 * (j & 3)))
        off += nb
        if ext:
            r = rid[i]
            p = pos[i]
            dr = r - prev_r
            dp = p - prev_p
            tag = 0
            if have_prev and -128 <= dr <= 127:
                tag |= TAG_READ
            if have_prev and -128 <= dp <= 127:
                tag |= TAG_POS
            out[off] = tag
            off += 1
            if tag & TAG_READ:
                out[off] = dr & 255
                off += 1
            else:
                _put_u32(out, off, r)
                off += 4
            if tag & TAG_POS:
                out[off] = dp & 255
                off += 1
            else:
                _put_u32(out, off, p)
                off += 4
            have_prev = True
            prev_r = r
            prev_p = p
    return off


@njit(nogil=True, cache=True)
def _get_u32(buf, off):
    v = np.int64(0)
    for b in range(4):
        v |= np.int64(buf[off + b]) << (8 * b)
    return v


@njit(nogil=True, cache=True)
def _signed(b):
    v = np.int64(b)
    return v - 256 if v >= 128 else v


@njit(nogil=True, cache=True)
def _decode_supermers(buf, lo, hi, k, ext, out_len, out_start, out_rid, out_pos,
                      out_codes, status):
    """Decode records from buf[lo:hi] until a zero length or the end.

    status receives (error code, byte offset of the failing record); error
    codes: 1 truncated, 2 length < k, 3 bad tag.  Returns (records, bases).
    """
    off = lo
    n = 0
    nb = 0
    have_prev = False
    prev_r = np.int64(0)
    prev_p = np.int64(0)
    status[0] = 0
    while off < hi:
        if off + 2 > hi:
            status[0] = 1
            status[1] = off
            break
        L = np.int64(buf[off]) | (np.int64(buf[off + 1]) << 8)
        if L == 0:
            break
        if L < k:
            status[0] = 2
            status[1] = off
            break
        rec = off
        off += 2
        nbytes = (L + 3) // 4
        if off + nbytes > hi:
            status[0] = 1
            status[1] = rec
            break
        out_start[n] = nb
        for j in range(L):
            out_codes[nb + j] = (buf[off + (j >> 2)] >> (6 - 2 * (j & 3))) & 3
        off += nbytes
        if ext:
            if off + 1 > hi:
                status[0] = 1
                status[1] = rec
                break
            tag = buf[off]
            if tag & ~3:
                status[0] = 3
                status[1] = rec
                break
            need = 1 + (1 if tag & TAG_READ else 4) + (1 if tag & TAG_POS else 4)
            if off + need > hi:
                status[0] = 1
                status[1] = rec
                break
            off += 1
            if tag & TAG_READ:
                r = prev_r + _signed(buf[off])
                off += 1
            else:
                r = _get_u32(buf, off)
                off += 4
            if tag & TAG_POS:
                p = prev_p + _signed(buf[off])
                off += 1
            else:
                p = _get_u32(buf, off)
                off += 4
            if (tag != 0) and not have_prev:
                status[0] = 3
                status[1] = rec
                break
            out_rid[n] = r
            out_pos[n] = p
            prev_r = r
            prev_p = p
            have_prev = True
        out_len[n] = L
        nb += L
        n += 1
    return n, nb


# ---------------------------------------------------------------- decoded containers


@dataclass
class SupermerChunk:
    """Decoded supermer records; ``codes`` holds one base code per byte."""
    codes: np.ndarray
    start: np.ndarray
    length: np.ndarray
    read_id: np.ndarray | None
    pos: np.ndarray | None

    def __len__(self):
        return len(self.length)

    def records(self) -> list:
        out = []
        for i in range(len(self)):
            seg = self.codes[self.start[i]:self.start[i] + self.length[i]]
            ext = None
            if self.read_id is not None:
                ext = Extension(int(self.read_id[i]), int(self.pos[i]))
            out.append(Supermer(pack_bases(seg), int(self.length[i]), -1, ext))
        return out

    @staticmethod
    def concat(chunks, extensions: bool) -> "SupermerChunk":
        chunks = [c for c in chunks if len(c)]
        if not chunks:
            z = np.zeros(0, dtype=np.int64)
            return SupermerChunk(np.zeros(0, dtype=np.uint8), z, z,
                                 z if extensions else None, z if extensions else None)
        base = np.cumsum([0] + [len(c.codes) for c in chunks[:-1]])
        return SupermerChunk(
            np.concatenate([c.codes for c in chunks]),
            np.concatenate([c.start + b for c, b in zip(chunks, base)]),
            np.concatenate([c.length for c in chunks]),
            np.concatenate([c.read_id for c in chunks]) if extensions else None,
            np.concatenate([c.pos for c in chunks]) if extensions else None,
        )


def decode_supermer_block(buf, k: int = 1, extensions: bool = False, stream=None,
                          lo: int = 0, hi: int | None = None) -> SupermerChunk:
    buf = np.frombuffer(buf, dtype=np.uint8) if isinstance(buf, (bytes, bytearray)) else buf
    hi = len(buf) if hi is None else hi
    span = hi - lo
    cap = span // 3 + 1
    out_len = np.empty(cap, dtype=np.int64)
    out_start = np.empty(cap, dtype=np.int64)
    out_rid = np.empty(cap if extensions else 0, dtype=np.int64)
    out_pos = np.empty(cap if extensions else 0, dtype=np.int64)
    out_codes = np.empty(4 * span, dtype=np.uint8)
    status = np.zeros(2, dtype=np.int64)
    n, nb = _decode_supermers(buf, lo, hi, k, extensions, out_len, out_start, out_rid,
                              out_pos, out_codes, status)
    if status[0]:
        reason = {1: "truncated record", 2: f"record length < k={k}", 3: "bad extension tag"}
        raise WireFormatError(reason[int(status[0])], stream=stream, offset=int(status[1]) - lo)
    return SupermerChunk(out_codes[:nb].copy(), out_start[:n].copy(), out_len[:n].copy(),
                         out_rid[:n].copy() if extensions else None,
                         out_pos[:n].copy() if extensions else None)


# ---------------------------------------------------------------- record-level API


def _records_to_arrays(records, extensions):
    codes = [r.codes for r in records]
    lengths = np.array([r.length for r in records], dtype=np.int64)
    start = np.zeros(len(records), dtype=np.int64)
    if len(records) > 1:
        np.cumsum(lengths[:-1], out=start[1:])
    flat = np.concatenate(codes) if codes else np.zeros(0, dtype=np.uint8)
    if extensions:
        if any(r.ext is None for r in records):
            raise ValueError("extensions enabled but a record has no extension")
        rid = np.array([r.ext.read_id for r in records], dtype=np.int64)
        pos = np.array([r.ext.pos_in_read for r in records], dtype=np.int64)
    else:
        rid = pos = np.zeros(len(records), dtype=np.int64)
    return flat, start, lengths, rid, pos


def encoded_size_bound(lengths, extensions: bool) -> int:
    lengths = np.asarray(lengths, dtype=np.int64)
    return int((2 + (lengths + 3) // 4).sum() + (FULL_EXT_BYTES * len(lengths) if extensions else 0))


def encode_stream(records, extensions: bool = False) -> bytes:
    """Serialize supermer records as one delta-state segment (no sentinel)."""
    if any(r.length > 0xFFFF or r.length < 1 for r in records):
        raise WireFormatError("supermer length outside [1, 65535]")
    flat, start, lengths, rid, pos = _records_to_arrays(records, extensions)
    out = np.zeros(encoded_size_bound(lengths, extensions), dtype=np.uint8)
    order = np.arange(len(records), dtype=np.int64)
    end = _encode_supermers(flat, start, lengths, rid, pos, order, 0, len(records),
                            extensions, out, 0)
    return out[:end].tobytes()


def decode_stream(data, extensions: bool = False, k: int = 1, stream=None) -> list:
    return decode_supermer_block(data, k, extensions, stream).records()


def pad_batch(payload: bytes, batch_size: int) -> bytes:
    if len(payload) + SENTINEL_BYTES > batch_size:
        raise AssertionError(
            f"batcher overfilled a batch: {len(payload)} + sentinel > {batch_size}")
    return bytes(payload) + bytes(batch_size - len(payload))


# ---------------------------------------------------------------- kmerlist


def kmerlist_dtype(W: int) -> np.dtype:
    return np.dtype([("key", "<u8", (W,)), ("count", "<u4")])


def kmerlist_record_size(W: int) -> int:
    return 8 * W + 4


def encode_kmerlist(keys: np.ndarray, counts: np.ndarray) -> bytes:
    keys = np.asarray(keys, dtype=np.uint64)
    if keys.ndim == 1:
        keys = keys[:, None]
    counts = np.asarray(counts)
    if len(counts) and counts.min() < 1:
        raise WireFormatError("kmerlist count must be >= 1")
    rec = np.empty(len(counts), dtype=kmerlist_dtype(keys.shape[1]))
    rec["key"] = keys
    rec["count"] = counts
    return rec.tobytes()


def decode_kmerlist(data, W: int, stream=None):
    """Decode records until a zero count or fewer bytes than one record remain."""
    buf = np.frombuffer(data, dtype=np.uint8) if isinstance(data, (bytes, bytearray)) else data
    size = kmerlist_record_size(W)
    n = len(buf) // size
    rec = np.frombuffer(buf[:n * size].tobytes(), dtype=kmerlist_dtype(W))
    zero = np.flatnonzero(rec["count"] == 0)
    if len(zero):
        n = int(zero[0])
        if buf[n * size:].any():
            raise WireFormatError("data after kmerlist terminator", stream=stream, offset=n * size)
    return rec["key"][:n].astype(np.uint64).reshape(n, W), rec["count"][:n].astype(np.int64)
