import math

import pytest

from kmersort.errors import ConfigError, PipelineError
from kmersort.pipeline import RunConfig, default_m, run_pipeline
from kmersort.seqmodel import Read
from kmersort.synth import random_reads, repeat_reads
from oracles import brute_counts, brute_counts_int
from pipeline_helpers import count_map, histogram_bytes


def test_default_m():
    assert default_m(31) == 15 and default_m(17) == 8 and default_m(45) == 22
    assert default_m(46) == 23 and default_m(63) == 23


def test_default_parameters():
    cfg = RunConfig()
    assert (cfg.batch_size, cfg.lower, cfg.upper) == (80_000, 2, 50)
    assert (cfg.tasks_per_worker, cfg.threads_per_worker) == (3, 4)
    assert cfg.heavy_factor == 4.0 and cfg.sorter == "auto" and cfg.memory_budget is None
    assert (cfg.k, cfg.m) == (31, 15) and not cfg.canonical and not cfg.extensions


def test_tiny_example():
    hist, report = run_pipeline(RunConfig(k=4, m=2, lower=1, upper=50), [Read(0, b"AAAAC")])
    assert hist.count_map() == {"AAAA": 1, "AAAC": 1}
    assert hist.counts == {1: 2}
    assert report.reads["kmer_instances"] == 2


def test_short_reads_are_skipped():
    hist, report = run_pipeline(RunConfig(k=5, m=2, lower=1), [Read(0, b"ACG"), Read(1, b"ACGTA")])
    assert hist.count_map() == {"ACGTA": 1}
    assert report.reads["skipped_short"] == 1


def test_no_reads():
    hist, report = run_pipeline(RunConfig(k=21, ranks=2), [])
    assert hist.counts == {} and report.exchange["supermer"]["rounds"] == 1


@pytest.mark.parametrize("k,canonical", [(17, False), (31, True), (55, False), (55, True)])
def test_exact_against_brute_force(rng, k, canonical):
    reads = random_reads(rng, 300, 50, 2000)
    got, _, report = count_map(reads, k=k, canonical=canonical, ranks=3, batch_size=10_000)
    assert got == dict(brute_counts_int(reads, k, canonical))
    assert report.reads["kmer_instances"] == sum(max(0, r.length - k + 1) for r in reads)


def test_string_oracle_agrees_with_filtered_output(rng):
    reads = random_reads(rng, 40, 20, 200) + [Read(40, b"ACGTACGTACGTACGTACGTACGT")]
    hist, _ = run_pipeline(RunConfig(k=5, m=3, lower=2, upper=5), reads)
    want = {s: c for s, c in brute_counts(reads, 5).items() if 2 <= c <= 5}
    assert hist.count_map() == want


def test_configuration_independence(rng):
    reads = random_reads(rng, 60, 100, 600)
    base = None
    for R in (1, 2, 4):
        for tpw in (1, 8):
            hist, _ = run_pipeline(RunConfig(k=21, ranks=R, tasks_per_worker=tpw, workers_per_rank=1),
                                   reads)
            if base is None:
                base = histogram_bytes(hist)
            assert histogram_bytes(hist) == base


def test_extensions_mode(rng):
    reads = random_reads(rng, 30, 40, 300)
    reads.append(Read(30, reads[0].bases))  # guarantee duplicated k-mers
    k = 15
    hist, _ = run_pipeline(RunConfig(k=k, ranks=2, extensions=True, lower=2, upper=50,
                                     batch_size=500), reads)
    occ = {}
    for r in reads:
        for i in range(r.length - k + 1):
            occ.setdefault(r.bases[i:i + k].decode(), []).append((r.read_id, i))
    want = {s: sorted(v) for s, v in occ.items() if 2 <= len(v) <= 50}
    names = hist.count_map()
    got = {s: hist.extensions_of(i) for i, s in enumerate(names)}
    assert got == want


def test_heavy_path_counts_match(rng):
    reads = repeat_reads(rng, 40, 3000, 0.3)
    # supermers shrink the repeat's byte share, so it takes s = 48 tasks to clear 4x the mean
    a, _, ra = count_map(reads, k=31, ranks=2, tasks_per_worker=6, heavy_factor=4.0)
    b, _, rb = count_map(reads, k=31, ranks=2, tasks_per_worker=6, heavy_factor=math.inf)
    assert a == b == dict(brute_counts_int(reads, 31))
    assert any(t["heavy"] for t in ra.tasks) and not any(t["heavy"] for t in rb.tasks)
    assert ra.exchange["kmerlist"]["payload_bytes"] > 0


def test_report_fields(rng):
    reads = random_reads(rng, 20, 100, 300)
    _, report = run_pipeline(RunConfig(k=21, ranks=2), reads)
    d = report.as_dict()
    assert set(d) == {"config", "times", "reads", "supermers", "exchange", "tasks", "sorters",
                      "histogram"}
    assert set(d["times"]) == {"io_seconds", "prepare_seconds", "exchange_seconds",
                               "count_seconds"}
    assert len(d["tasks"]) == d["config"]["tasks"] == 2 * 4 * 3
    ex = d["exchange"]["supermer"]
    assert ex["payload_bytes"] + ex["padding_bytes"] == ex["rounds"] * 4 * 80_000


def test_sorter_and_budget_choices(rng):
    reads = random_reads(rng, 30, 100, 400)
    outs = []
    for sorter, budget in (("inplace", None), ("outofplace", None), ("auto", 0), ("auto", None)):
        hist, report = run_pipeline(RunConfig(k=25, sorter=sorter, memory_budget=budget), reads)
        outs.append(histogram_bytes(hist))
        if sorter == "inplace" or budget == 0:
            assert report.sorters["outofplace"] == 0
    assert len(set(outs)) == 1


def test_invalid_configs():
    for bad in (dict(k=31, m=31), dict(k=64, m=20), dict(lower=5, upper=2), dict(ranks=0),
                dict(batch_size=5), dict(heavy_factor=1.0), dict(sorter="x")):
        with pytest.raises(ConfigError):
            RunConfig(**bad).validate()


def test_ingest_failure_is_stage_tagged(tmp_path):
    with pytest.raises(PipelineError) as ei:
        run_pipeline(RunConfig(k=21, inputs=[str(tmp_path / "nope.fa")]))
    assert ei.value.stage == "io" and ei.value.exit_code == 3
