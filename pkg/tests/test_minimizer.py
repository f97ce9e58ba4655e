import numpy as np
import pytest
from hypothesis import given, strategies as st

from kmersort.errors import ConfigError
from kmersort.minimizer import (DEFAULT_SEED, destination_task, minimizers_of_read,
                                mmer_score, read_window_minimizers, sliding_window_minima,
                                window_minimizers)
from kmersort.seqmodel import Read
from kmersort.synth import random_sequence
from oracles import fmix64_np, naive_minimizers, naive_minimizers_slow

# fmix64 values computed with oracles.fmix64_np
FMIX_1 = 0xB456BCFC34C2CB2C
FMIX_27 = 0x7ED3ADB081E15AEC


def test_mmer_score_examples():
    assert mmer_score(0, 0) == 0
    assert mmer_score(1, 0) == FMIX_1 == int(fmix64_np([1])[0])
    assert mmer_score(27, 0) == FMIX_27 == int(fmix64_np([27])[0])


@given(st.integers(0, 2**62), st.integers(0, 2**64 - 1))
def test_mmer_score_matches_reference(v, seed):
    assert mmer_score(v, seed) == int(fmix64_np([v ^ seed])[0])


def test_destination_examples():
    assert destination_task(0, 8) == 0
    assert destination_task(27, 4) == 3
    with pytest.raises(ConfigError):
        destination_task(5, 0)


def test_destination_distribution(rng):
    scores = fmix64_np(rng.integers(0, 2**62, size=10**6, dtype=np.uint64))
    counts = np.bincount((scores % np.uint64(256)).astype(np.int64), minlength=256)
    expected = 10**6 / 256
    assert np.all(np.abs(counts - expected) <= 0.05 * expected)


def test_sliding_window_minima_example():
    assert sliding_window_minima([5, 3, 4, 1, 2], 3) == [3, 1, 1]


def test_single_distinct_mmer():
    mins = minimizers_of_read(Read(0, b"AAAAC"), 4, 2)
    assert mins[0].mmer == 0 and mins[0].pos in (0, 1, 2)
    assert mins[0].pos == 0  # leftmost tie-break


def test_reference_vs_slow_scan(rng):
    for _ in range(20):
        seq = random_sequence(rng, int(rng.integers(12, 60)))
        want = naive_minimizers_slow(seq, 11, 5, DEFAULT_SEED)
        got = [m.key for m in minimizers_of_read(Read(0, seq), 11, 5)]
        assert got == want


@pytest.mark.parametrize("k,m,bits", [(31, 15, 64), (21, 7, 3), (15, 4, 2), (5, 1, 1)])
@pytest.mark.parametrize("canonical", [False, True])
def test_deque_equals_naive(rng, k, m, bits, canonical):
    for _ in range(30):
        seq = random_sequence(rng, int(rng.integers(k, 4 * k)))
        score, mmer, pos = naive_minimizers(seq, k, m, DEFAULT_SEED, canonical, bits)
        ref = [(int(a), int(b), int(c)) for a, b, c in zip(score, mmer, pos)]
        py = [mz.key for mz in minimizers_of_read(Read(0, seq), k, m, DEFAULT_SEED,
                                                     canonical, bits)]
        nb = [mz.key for mz in read_window_minimizers(Read(0, seq), k, m, DEFAULT_SEED,
                                                          canonical, bits)]
        assert py == ref
        assert nb == ref


def test_batch_kernel_inserts_bounded(rng):
    seqs = [random_sequence(rng, 300) for _ in range(10)]
    codes = np.frombuffer(b"".join(seqs), dtype=np.uint8)
    codes = np.searchsorted(np.frombuffer(b"ACGT", dtype=np.uint8), codes).astype(np.uint8)
    starts = np.arange(10) * 300
    _, _, _, offsets, inserts = window_minimizers(codes, starts, np.full(10, 300), 31, 15)
    assert offsets[-1] == 10 * 270
    assert inserts == 10 * (300 - 15 + 1)


def test_deterministic(rng):
    seq = random_sequence(rng, 500)
    a = read_window_minimizers(Read(0, seq), 31, 15, 7)
    b = read_window_minimizers(Read(0, seq), 31, 15, 7)
    assert a == b


@pytest.mark.parametrize("k,m", [(10, 10), (40, 32), (64, 10)])
def test_bad_parameters(k, m):
    with pytest.raises(ConfigError):
        minimizers_of_read(Read(0, b"A" * 70), k, m)
