import numpy as np
import pytest
from hypothesis import given, strategies as st

from kmersort.errors import WireFormatError
from kmersort.seqmodel import Extension, pack_kmer
from kmersort.supermer import Supermer
from kmersort.wire import (decode_kmerlist, decode_stream, decode_supermer_block,
                           encode_kmerlist, encode_stream, kmerlist_record_size, pad_batch)
from wire_fixtures import load_vectors

VECTORS = load_vectors()


def rec(bases, rid=None, pos=None):
    return Supermer.from_sequence(bases, ext=None if rid is None else Extension(rid, pos))


def test_delta_example():
    data = encode_stream([rec("ACGTA", 7, 100), rec("ACGTA", 7, 130)], extensions=True)
    first = 2 + 2 + 9
    assert data[first + 4:] == bytes([0b11, 0, 30])


def test_read_jump_uses_full_read_id():
    data = encode_stream([rec("ACGTA", 7, 100), rec("ACGTA", 1007, 101)], extensions=True)
    block = data[13 + 4:]
    assert block[0] == 0b10 and block[1:5] == (1007).to_bytes(4, "little") and block[5] == 1


def test_sentinel_only_payload_is_empty():
    assert decode_stream(bytes(2)) == []
    assert decode_stream(pad_batch(b"", 64)) == []


def test_single_record_without_extensions():
    out = decode_stream(encode_stream([rec("ACGTACG")]), k=3)
    assert len(out) == 1 and out[0].sequence == "ACGTACG" and out[0].ext is None


def test_pad_batch_arithmetic():
    b = pad_batch(b"", 80_000)
    assert len(b) == 80_000 and not any(b)
    b = pad_batch(b"\x01" * 100, 80_000)
    assert len(b) == 80_000 and b[:100] == b"\x01" * 100 and not any(b[100:])
    pad_batch(b"\x01" * 62, 64)
    with pytest.raises(AssertionError):
        pad_batch(b"\x01" * 63, 64)


def test_truncated_record_reports_stream_and_offset():
    data = encode_stream([rec("ACGTACGT"), rec("ACGTACGTACGT")])
    with pytest.raises(WireFormatError) as ei:
        decode_supermer_block(data[:-1], k=3, stream=(1, 2, 0))
    assert ei.value.stream == (1, 2, 0) and ei.value.offset == 4


def test_short_record_rejected():
    data = encode_stream([rec("ACG")]) + bytes(2)
    with pytest.raises(WireFormatError, match="length < k"):
        decode_stream(data, k=4)


def test_bad_tag_rejected():
    data = bytearray(encode_stream([rec("ACGTA", 1, 2)], extensions=True))
    data[4] = 0x80
    with pytest.raises(WireFormatError, match="tag"):
        decode_stream(bytes(data), extensions=True)


def test_encoder_rejects_oversized_length():
    with pytest.raises(WireFormatError):
        encode_stream([Supermer(bytes(16385), 65536)])


records_st = st.lists(
    st.tuples(st.text("ACGT", min_size=1, max_size=40),
              st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1)),
    max_size=30)


@given(records_st, st.booleans())
def test_roundtrip_property(items, ext):
    recs = [rec(b, r, p) if ext else rec(b) for b, r, p in items]
    got = decode_stream(encode_stream(recs, ext), ext)
    assert [(g.sequence, g.ext) for g in got] == [(r.sequence, r.ext) for r in recs]


@given(st.lists(st.tuples(st.text("ACGT", min_size=1, max_size=9),
                          st.integers(0, 300), st.integers(0, 300)), min_size=1, max_size=30))
def test_deltas_shrink_blocks(items):
    recs = [rec(b, r, p) for b, r, p in items]
    plain = sum(2 + (r.length + 3) // 4 + 9 for r in recs)
    assert len(encode_stream(recs, True)) <= plain


def test_fuzzed_roundtrip_with_padding(rng):
    for _ in range(300):
        n = int(rng.integers(0, 20))
        recs = []
        rid, pos = int(rng.integers(0, 1000)), int(rng.integers(0, 1000))
        for _ in range(n):
            rid = max(0, rid + int(rng.integers(-200, 200)))
            pos = max(0, pos + int(rng.integers(-200, 200)))
            seq = "".join(rng.choice(list("ACGT"), size=int(rng.integers(5, 60))))
            recs.append(rec(seq, rid, pos))
        data = encode_stream(recs, True)
        block = pad_batch(data, len(data) + 2 + int(rng.integers(0, 50)))
        got = decode_stream(block, True, k=5)
        assert [(g.sequence, g.ext) for g in got] == [(r.sequence, r.ext) for r in recs]


def test_kmerlist_roundtrip_and_terminators(rng):
    keys = rng.integers(0, 2**63, size=(10, 2), dtype=np.uint64)
    counts = rng.integers(1, 1000, size=10)
    data = encode_kmerlist(keys, counts)
    assert len(data) == 10 * kmerlist_record_size(2) == 200
    for tail in (b"", bytes(20), bytes(7)):
        k2, c2 = decode_kmerlist(data + tail, 2)
        assert (k2 == keys).all() and (c2 == counts).all()
    with pytest.raises(WireFormatError):
        encode_kmerlist(keys[:1], [0])
    with pytest.raises(WireFormatError):
        decode_kmerlist(data + bytes(20) + b"\x01", 2)


# ------------------------------------------------------------------ golden vectors


def _supermer_vector(v):
    ext = v["extensions"]
    recs = [rec(r["bases"], r.get("read_id"), r.get("pos")) if ext else rec(r["bases"])
            for r in v["records"]]
    return recs, ext


@pytest.mark.parametrize("name", ["supermer_record", "extension_tags"])
def test_golden_supermer_bytes(name):
    v = VECTORS[name]
    recs, ext = _supermer_vector(v)
    assert encode_stream(recs, ext) == v["bytes"]
    got = decode_stream(v["bytes"], ext, v["k"])
    assert [(g.sequence, g.ext) for g in got] == [(r.sequence, r.ext) for r in recs]


def test_golden_covers_every_tag():
    assert {r["tag"] for r in VECTORS["extension_tags"]["records"]} == {0, 1, 2, 3}


def test_golden_padded_batch():
    v = VECTORS["padded_batch"]
    recs, ext = _supermer_vector(v)
    assert len(v["bytes"]) == v["batch_size"]
    assert pad_batch(encode_stream(recs, ext), v["batch_size"]) == v["bytes"]
    got = decode_stream(v["bytes"], ext, v["k"])
    assert [g.sequence for g in got] == [r["bases"] for r in v["records"]]


@pytest.mark.parametrize("name", ["kmerlist_record", "kmerlist_record_two_words",
                                  "padded_kmerlist_batch"])
def test_golden_kmerlist(name):
    v = VECTORS[name]
    keys = np.array([pack_kmer(r["kmer"], v["k"]).words for r in v["records"]], dtype=np.uint64)
    counts = np.array([r["count"] for r in v["records"]])
    enc = encode_kmerlist(keys, counts)
    if "batch_size" in v:
        enc = pad_batch(enc, v["batch_size"])
    assert enc == v["bytes"]
    k2, c2 = decode_kmerlist(v["bytes"], v["W"])
    assert (k2 == keys).all() and (c2 == counts).all()
