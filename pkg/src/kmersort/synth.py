"""Synthetic read sets for tests and experiment scripts."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .seqmodel import Read

_ALPHABET = np.frombuffer(b"ACGT", dtype=np.uint8)


def random_sequence(rng: np.random.Generator, n: int) -> bytes:
    return _ALPHABET[rng.integers(0, 4, size=n)].tobytes()


def random_reads(rng: np.random.Generator, n_reads: int, min_len: int, max_len: int | None = None,
                 first_id: int = 0) -> list:
    max_len = min_len if max_len is None else max_len
    lengths = rng.integers(min_len, max_len + 1, size=n_reads)
    return [Read(first_id + i, random_sequence(rng, int(L))) for i, L in enumerate(lengths)]


def repeat_reads(rng: np.random.Generator, n_reads: int, length: int, fraction: float,
                 unit: bytes = b"AATGG") -> list:
    """Random reads in which about ``fraction`` of the bases form one tandem-repeat block."""
    out = []
    for i in range(n_reads):
        seq = bytearray(random_sequence(rng, length))
        run = int(round(length * fraction))
        if run:
            at = int(rng.integers(0, length - run + 1))
            phase = int(rng.integers(0, len(unit)))
            block = (unit * (run // len(unit) + 2))[phase:phase + run]
            seq[at:at + run] = block
        out.append(Read(i, bytes(seq)))
    return out


def repeat_genome(rng: np.random.Generator, length: int, fraction: float,
                  unit: bytes = b"AATGG", block: tuple = (2_000, 8_000)) -> bytes:
    """Random genome in which about ``fraction`` of the bases lie in tandem-repeat blocks."""
    seq = bytearray(random_sequence(rng, length))
    target = int(round(length * fraction))
    covered = np.zeros(length, dtype=bool)
    while covered.sum() < target:
        n = min(int(rng.integers(block[0], block[1] + 1)), target - int(covered.sum()))
        at = int(rng.integers(0, length - n + 1))
        if covered[at:at + n].any():
            continue
        phase = int(rng.integers(0, len(unit)))
        seq[at:at + n] = (unit * (n // len(unit) + 2))[phase:phase + n]
        covered[at:at + n] = True
    return bytes(seq)


def sample_reads(rng: np.random.Generator, genome: bytes, coverage: float, length: int,
                 first_id: int = 0) -> list:
    """Error-free reads drawn uniformly from ``genome`` to the given depth."""
    n = int(round(coverage * len(genome) / length))
    at = rng.integers(0, len(genome) - length + 1, size=n)
    return [Read(first_id + i, genome[a:a + length]) for i, a in enumerate(at.tolist())]


def write_fasta(path, reads, width: int = 80) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        for r in reads:
            fh.write(f">read{r.read_id}\n")
            s = r.bases.decode("ascii")
            for i in range(0, len(s), width):
                fh.write(s[i:i + width] + "\n")
    return path
