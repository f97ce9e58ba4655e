"""FASTA ingestion and greedy read partitioning across ranks."""
from __future__ import annotations

import heapq
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IngestError
from .seqmodel import CODE_TABLE, Read

MAX_READ_LENGTH = 0xFFFF
_RUN = re.compile(rb"[ACGT]+")


def fragments(seq: bytes, max_len: int = MAX_READ_LENGTH, overlap: int = 0):
    """ACGT runs of an upper-cased sequence, cut to at most ``max_len`` bases.

    Consecutive cuts of one run share ``overlap`` bases, so with overlap k-1
    no k-mer is lost at a cut.
    """
    step = max_len - overlap
    if step < 1:
        raise IngestError(f"overlap {overlap} leaves no room in {max_len}-base fragments")
    for m in _RUN.finditer(seq):
        a, b = m.span()
        while b - a > max_len:
            yield seq[a:a + max_len]
            a += step
        yield seq[a:b]


def _records(path: Path):
    header = None
    parts: list = []
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise IngestError(f"cannot open: {exc.strerror}", path) from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith(b">"):
                if header is not None:
                    yield header, b"".join(parts)
                header, parts = line[1:], []
            elif line.startswith(b";"):
                continue
            else:
                if header is None:
                    raise IngestError("sequence data before the first header", path, lineno)
                parts.append(line)
    if header is not None:
        yield header, b"".join(parts)


def parse_fasta(paths, max_len: int = MAX_READ_LENGTH, overlap: int = 0) -> list:
    """Reads of one or more FASTA files with dense ids in file order."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    reads = []
    for path in paths:
        for _, seq in _records(Path(path)):
            for frag in fragments(seq.upper(), max_len, overlap):
                reads.append(Read(len(reads), frag))
    return reads


def partition_reads(reads, ranks: int) -> list:
    """Longest read first onto the least-loaded rank (load = bases)."""
    heap = [(0, r) for r in range(ranks)]
    out = [[] for _ in range(ranks)]
    for read in sorted(reads, key=lambda x: (-x.length, x.read_id)):
        load, r = heapq.heappop(heap)
        out[r].append(read)
        heapq.heappush(heap, (load + read.length, r))
    for lst in out:
        lst.sort(key=lambda x: x.read_id)
    return out


@dataclass
class ReadBlock:
    """Reads of one rank as one concatenated code array."""
    codes: np.ndarray
    starts: np.ndarray
    lengths: np.ndarray
    read_ids: np.ndarray

    @classmethod
    def from_reads(cls, reads) -> "ReadBlock":
        lengths = np.array([r.length for r in reads], dtype=np.int64)
        starts = np.zeros(len(reads), dtype=np.int64)
        if len(reads) > 1:
            np.cumsum(lengths[:-1], out=starts[1:])
        blob = b"".join(r.bases for r in reads)
        codes = CODE_TABLE[np.frombuffer(blob, dtype=np.uint8)]
        if codes.size and codes.max() == 255:
            raise IngestError("unsanitized base reached the encoder")
        return cls(codes, starts, lengths, np.array([r.read_id for r in reads], dtype=np.int64))

    @property
    def bases(self) -> int:
        return int(self.lengths.sum())
