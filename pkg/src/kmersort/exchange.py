"""Round-based all-to-all exchange between simulated ranks.

Each round every rank sends exactly ``batch_size`` bytes to every rank
(itself included), so a round moves ``R * R * batch_size`` bytes.  A round
runs three stages: *prepare* encodes the send buffer, *communicate* performs
the all-to-all copy, *parse* decodes the receive buffer.  With overlap on,
round n is communicated while round n+1 is prepared and round n-1 parsed,
using two send and two receive buffers that alternate between rounds.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .wire import (SENTINEL_BYTES, _encode_supermers, _plan_supermers,
                   decode_kmerlist, decode_supermer_block, kmerlist_record_size)

DEFAULT_BATCH_SIZE = 80_000


@dataclass
class RankTopology:
    ranks: int
    batch_size: int = DEFAULT_BATCH_SIZE

    def __post_init__(self):
        if self.ranks < 1:
            raise ConfigError(f"rank count must be >= 1, got {self.ranks}")
        if self.batch_size <= SENTINEL_BYTES:
            raise ConfigError(f"batch size must exceed {SENTINEL_BYTES} bytes")

    @property
    def usable(self) -> int:
        return self.batch_size - SENTINEL_BYTES


@dataclass
class ExchangeStats:
    ranks: int
    batch_size: int
    payload_bytes: int = 0
    padding_bytes: int = 0
    rounds: int = 0
    per_destination: list = field(default_factory=list)

    def __post_init__(self):
        if not self.per_destination:
            self.per_destination = [0] * self.ranks

    @property
    def total_bytes(self) -> int:
        return self.rounds * self.ranks * self.ranks * self.batch_size

    def as_dict(self) -> dict:
        return {
            "payload_bytes": self.payload_bytes,
            "padding_bytes": self.padding_bytes,
            "rounds": self.rounds,
            "total_bytes": self.total_bytes,
            "per_destination_bytes": list(self.per_destination),
        }


class SupermerQueue:
    """Supermer records from one source rank to one destination rank."""

    def __init__(self, codes, start, length, read_id=None, pos=None, k=1):
        self.codes = codes
        self.start = np.asarray(start, dtype=np.int64)
        self.length = np.asarray(length, dtype=np.int64)
        self.extensions = read_id is not None
        n = len(self.length)
        self.read_id = np.asarray(read_id if self.extensions else np.zeros(n), dtype=np.int64)
        self.pos = np.asarray(pos if self.extensions else np.zeros(n), dtype=np.int64)
        self.order = np.arange(n, dtype=np.int64)
        self.k = k

    def __len__(self):
        return len(self.length)

    def plan(self, usable: int) -> np.ndarray:
        cuts = np.empty(len(self) + 1, dtype=np.int64)
        nb = _plan_supermers(self.length, self.read_id, self.pos, self.extensions, usable, cuts)
        if nb < 0:
            i = -1 - nb
            raise ConfigError(f"supermer record of {self.length[i]} bases exceeds the batch")
        cuts[nb] = len(self)
        return cuts[:nb + 1].copy()

    def encode(self, lo: int, hi: int, out: np.ndarray) -> int:
        return _encode_supermers(self.codes, self.start, self.length, self.read_id, self.pos,
                                 self.order, lo, hi, self.extensions, out, 0)

    def decoder(self):
        return SupermerDecoder(self.k, self.extensions)


@dataclass
class SupermerDecoder:
    k: int
    extensions: bool

    def __call__(self, block, stream):
        return decode_supermer_block(block, self.k, self.extensions, stream)


class KmerListQueue:
    """(k-mer, count) records from one source rank to one destination rank."""

    def __init__(self, keys, counts):
        self.keys = np.ascontiguousarray(keys, dtype=np.uint64)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.W = self.keys.shape[1]
        self.record_size = kmerlist_record_size(self.W)
        dtype = np.dtype([("key", "<u8", (self.W,)), ("count", "<u4")])
        rec = np.empty(len(self.counts), dtype=dtype)
        rec["key"] = self.keys
        rec["count"] = self.counts
        self._bytes = rec.view(np.uint8).reshape(-1)

    def __len__(self):
        return len(self.counts)

    def plan(self, usable: int) -> np.ndarray:
        per = usable // self.record_size
        if per < 1:
            raise ConfigError(f"batch too small for a {self.record_size}-byte kmerlist record")
        return np.append(np.arange(0, len(self), per, dtype=np.int64), len(self))

    def encode(self, lo: int, hi: int, out: np.ndarray) -> int:
        n = (hi - lo) * self.record_size
        out[:n] = self._bytes[lo * self.record_size:hi * self.record_size]
        return n

    def decoder(self):
        return KmerListDecoder(self.W)


@dataclass
class KmerListDecoder:
    W: int

    def __call__(self, block, stream):
        return KmerListChunk(*decode_kmerlist(block, self.W, stream))


@dataclass
class KmerListChunk:
    keys: np.ndarray
    counts: np.ndarray

    def __len__(self):
        return len(self.counts)


@dataclass
class RoundSchedule:
    rounds: int
    cuts: dict  # (src, dst) -> record boundaries, one batch per consecutive pair

    def records_in(self, src: int, dst: int, rnd: int):
        c = self.cuts.get((src, dst))
        if c is None or rnd >= len(c) - 1:
            return None
        return int(c[rnd]), int(c[rnd + 1])


def plan_rounds(queues, batch_size: int) -> RoundSchedule:
    """Assign every queued record to a round.

    ``queues[src][dst]`` is a queue object (or None).  The round count is the
    global maximum of per-stream batch counts, and at least one.
    """
    usable = batch_size - SENTINEL_BYTES
    cuts = {}
    rounds = 1
    for src, row in enumerate(queues):
        for dst, q in enumerate(row):
            if q is None or len(q) == 0:
                continue
            c = q.plan(usable)
            cuts[(src, dst)] = c
            rounds = max(rounds, len(c) - 1)
    return RoundSchedule(rounds, cuts)


def run_exchange(topology: RankTopology, queues, schedule: RoundSchedule, overlap: bool = True,
                 decoder=None):
    """Move all queued records; returns (received[dst][src] -> list of chunks, stats).

    ``decoder`` defaults to the decoder of the first non-empty queue.
    """
    R, B = topology.ranks, topology.batch_size
    if decoder is None:
        decoder = next((q.decoder() for row in queues for q in row if q is not None), None)
    stats = ExchangeStats(R, B, rounds=schedule.rounds)
    send = [np.zeros((R, R, B), dtype=np.uint8) for _ in range(2)]
    recv = [np.zeros((R, R, B), dtype=np.uint8) for _ in range(2)]
    received = [[[] for _ in range(R)] for _ in range(R)]

    def prepare(rnd):
        buf = send[rnd % 2]
        buf.fill(0)
        for src in range(R):
            for dst in range(R):
                span = schedule.records_in(src, dst, rnd)
                if span is None:
                    continue
                n = queues[src][dst].encode(span[0], span[1], buf[src, dst])
                if n + SENTINEL_BYTES > B:
                    raise AssertionError("batcher overfilled a batch")
                stats.payload_bytes += n
                stats.per_destination[dst] += n

    def communicate(rnd):
        recv[rnd % 2][...] = send[rnd % 2].transpose(1, 0, 2)

    def parse(rnd):
        if decoder is None:
            return
        buf = recv[rnd % 2]
        for dst in range(R):
            for src in range(R):
                chunk = decoder(buf[dst, src], (src, dst, rnd))
                if len(chunk):
                    received[dst][src].append(chunk)

    n = schedule.rounds
    if overlap:
        with ThreadPoolExecutor(max_workers=3) as pool:
            for step in range(n + 2):
                futures = []
                if step < n:
                    futures.append(pool.submit(prepare, step))
                if 0 <= step - 1 < n:
                    futures.append(pool.submit(communicate, step - 1))
                if 0 <= step - 2 < n:
                    futures.append(pool.submit(parse, step - 2))
                for f in futures:
                    f.result()
    else:
        for rnd in range(n):
            prepare(rnd)
            communicate(rnd)
            parse(rnd)

    stats.padding_bytes = stats.total_bytes - stats.payload_bytes
    return received, stats
