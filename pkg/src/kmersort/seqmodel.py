"""2-bit DNA encoding, packed k-mers, reverse complement.

Bases are coded A=0, C=1, G=2, T=3 and packed most-significant-first into
64-bit words: word 0 holds bases 0..31, base i of a word sits at bits
``62 - 2*i``.  With this layout integer comparison of the word sequence is
the same as lexicographic comparison of the base strings, which is what lets
the radix sorters order k-mers directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ConfigError, SanitizationError

MAX_K = 63
MAX_M = 31
BASES = "ACGT"

# 255 marks a byte that is not a (case-insensitive) nucleotide.
CODE_TABLE = np.full(256, 255, dtype=np.uint8)
for _code, _base in enumerate(BASES):
    CODE_TABLE[ord(_base)] = _code
    CODE_TABLE[ord(_base.lower())] = _code
ASCII_TABLE = np.frombuffer(BASES.encode(), dtype=np.uint8)


def n_words(k: int) -> int:
    return (k + 31) // 32


def check_k(k: int) -> None:
    if not 1 <= k <= MAX_K:
        raise ConfigError(f"k must be in [1, {MAX_K}], got {k}")


def encode_base(b: str) -> int:
    code = CODE_TABLE[ord(b)] if len(b) == 1 and ord(b) < 256 else 255
    if code == 255:
        raise SanitizationError(f"not a nucleotide: {b!r}")
    return int(code)


def encode_sequence(bases) -> np.ndarray:
    """Bytes/str of ACGT (any case) to a uint8 code array."""
    if isinstance(bases, str):
        bases = bases.encode("ascii", errors="replace")
    codes = CODE_TABLE[np.frombuffer(bases, dtype=np.uint8)]
    if codes.size and codes.max() == 255:
        bad = int(np.argmax(codes == 255))
        raise SanitizationError(f"not a nucleotide: {chr(bases[bad])!r} at offset {bad}")
    return codes


def decode_codes(codes: np.ndarray) -> str:
    return ASCII_TABLE[np.asarray(codes, dtype=np.uint8)].tobytes().decode("ascii")


@dataclass(frozen=True)
class Read:
    read_id: int
    bases: bytes

    def __post_init__(self):
        if not self.bases:
            raise SanitizationError("empty read")

    @property
    def length(self) -> int:
        return len(self.bases)

    @property
    def codes(self) -> np.ndarray:
        return encode_sequence(self.bases)


@dataclass(frozen=True, order=True)
class PackedKmer:
    words: tuple
    k: int = field(compare=False)

    def __str__(self) -> str:
        return unpack_kmer(self)


@dataclass(frozen=True, order=True)
class Extension:
    read_id: int
    pos_in_read: int


def pack_kmer(bases, k: int) -> PackedKmer:
    check_k(k)
    if len(bases) != k:
        raise ConfigError(f"slice length {len(bases)} != k={k}")
    codes = encode_sequence(bases)
    words = []
    for w in range(n_words(k)):
        chunk = codes[32 * w:32 * w + 32]
        value = 0
        for c in chunk:
            value = (value << 2) | int(c)
        value <<= 2 * (32 - len(chunk))
        words.append(value)
    return PackedKmer(tuple(words), k)


def unpack_kmer(km: PackedKmer) -> str:
    out = []
    for i in range(km.k):
        word = km.words[i // 32]
        out.append(BASES[(word >> (62 - 2 * (i % 32))) & 3])
    return "".join(out)


_COMPLEMENT = str.maketrans("ACGT", "TGCA")


def reverse_complement_str(seq: str) -> str:
    return seq.translate(_COMPLEMENT)[::-1]


def reverse_complement(km: PackedKmer) -> PackedKmer:
    return pack_kmer(reverse_complement_str(unpack_kmer(km)), km.k)


def canonical(km: PackedKmer) -> PackedKmer:
    return min(km, reverse_complement(km))


def kmers_of_read(r: Read, k: int, canonical_mode: bool = False) -> list:
    """All (k-mer, extension) pairs of a read, left to right.

    Reads shorter than k yield nothing; the caller counts them as skipped.
    """
    check_k(k)
    text = r.bases.decode("ascii").upper()
    out = []
    for pos in range(len(text) - k + 1):
        km = pack_kmer(text[pos:pos + k], k)
        if canonical_mode:
            km = canonical(km)
        out.append((km, Extension(r.read_id, pos)))
    return out


# ---------------------------------------------------------------- array kernels


@njit(nogil=True, cache=True)
def pack_window(codes, start, k, W, out_row):
    """Pack codes[start:start+k] MSB-first into out_row[0:W]."""
    for w in range(W):
        out_row[w] = np.uint64(0)
    for i in range(k):
        w = i >> 5
        shift = np.uint64(62 - 2 * (i & 31))
        out_row[w] |= np.uint64(codes[start + i]) << shift


@njit(nogil=True, cache=True)
def pack_window_rc(codes, start, k, W, out_row):
    """Pack the reverse complement of codes[start:start+k]."""
    for w in range(W):
        out_row[w] = np.uint64(0)
    for i in range(k):
        c = np.uint64(3 - codes[start + k - 1 - i])
        w = i >> 5
        shift = np.uint64(62 - 2 * (i & 31))
        out_row[w] |= c << shift


@njit(nogil=True, cache=True)
def row_less(a, b, W):
    for w in range(W):
        if a[w] != b[w]:
            return a[w] < b[w]
    return False


def words_to_kmer(words, k: int) -> PackedKmer:
    return PackedKmer(tuple(int(w) for w in words), k)


def keys_to_strings(keys: np.ndarray, k: int) -> list:
    """Decode an (n, W) uint64 key array into k-mer strings."""
    n = keys.shape[0]
    if n == 0:
        return []
    chars = np.empty((n, k), dtype=np.uint8)
    for i in range(k):
        w, j = divmod(i, 32)
        chars[:, i] = ((keys[:, w] >> np.uint64(62 - 2 * j)) & np.uint64(3)).astype(np.uint8)
    blob = ASCII_TABLE[chars].tobytes().decode("ascii")
    return [blob[i * k:(i + 1) * k] for i in range(n)]
