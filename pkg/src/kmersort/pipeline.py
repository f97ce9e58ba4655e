"""End-to-end counting run over R simulated ranks.

Stages: prepare (partition reads, build supermers, gather task sizes,
place tasks, detect heavy hitters, fill queues), exchange (supermer rounds,
then kmerlist rounds for heavy tasks) and count (expand, sort and scan each
task; merge kmerlists).  Ingest time is reported apart from stage times.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, KmerSortError, PipelineError
from .exchange import (DEFAULT_BATCH_SIZE, ExchangeStats, KmerListDecoder, KmerListQueue,
                       RankTopology, SupermerDecoder, SupermerQueue, plan_rounds,
                       run_exchange)
from .ingest import MAX_READ_LENGTH, ReadBlock, parse_fasta, partition_reads
from .minimizer import DEFAULT_SEED, check_km
from .seqmodel import n_words
from .sortcount import (SORTERS, Histogram, KmerArray, scan_count, select_sorter,
                        sort_kmers)
from .supermer import (build_supermers, expand_records, max_supermer_length, record_bytes,
                       record_tasks, split_long)
from .taskengine import (DEFAULT_HEAVY_FACTOR, DEFAULT_TASKS_PER_WORKER,
                         DEFAULT_THREADS_PER_WORKER, DEFAULT_WORKERS_PER_RANK,
                         TaskDescriptor, assign_tasks, detect_heavy_hitters,
                         gather_task_sizes, kmerlist_transform, merge_kmerlists,
                         schedule_workers, task_count)
from .wire import SupermerChunk, kmerlist_record_size


def default_m(k: int) -> int:
    return k // 2 if k < 46 else 23


@dataclass
class RunConfig:
    k: int = 31
    m: Optional[int] = None
    ranks: int = 1
    workers_per_rank: int = DEFAULT_WORKERS_PER_RANK
    threads_per_worker: int = DEFAULT_THREADS_PER_WORKER
    tasks_per_worker: int = DEFAULT_TASKS_PER_WORKER
    batch_size: int = DEFAULT_BATCH_SIZE
    lower: int = 2
    upper: int = 50
    seed: int = DEFAULT_SEED
    canonical: bool = False
    extensions: bool = False
    heavy_factor: float = DEFAULT_HEAVY_FACTOR
    sorter: str = "auto"
    memory_budget: Optional[float] = None
    overlap: bool = True
    inputs: list = field(default_factory=list)
    out_histogram: Optional[str] = None
    out_dump: Optional[str] = None
    out_report: Optional[str] = None

    def __post_init__(self):
        if self.m is None:
            self.m = default_m(self.k)

    @property
    def tasks(self) -> int:
        return task_count(self.ranks, self.workers_per_rank, self.tasks_per_worker)

    def validate(self) -> "RunConfig":
        check_km(self.k, self.m)
        for name in ("ranks", "workers_per_rank", "threads_per_worker", "tasks_per_worker"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.lower > self.upper:
            raise ConfigError(f"lower bound {self.lower} exceeds upper bound {self.upper}")
        if self.sorter not in SORTERS:
            raise ConfigError(f"sorter must be one of {SORTERS}")
        if not self.heavy_factor > 1:
            raise ConfigError("heavy factor must be > 1")
        usable = self.batch_size - 2
        if max_supermer_length(usable, self.extensions) < self.k:
            raise ConfigError(f"batch size {self.batch_size} cannot hold a {self.k}-base supermer")
        if kmerlist_record_size(n_words(self.k)) > usable:
            raise ConfigError(f"batch size {self.batch_size} cannot hold a kmerlist record")
        return self


@dataclass
class RunReport:
    config: dict
    times: dict
    reads: dict
    supermers: dict
    exchange: dict
    tasks: list
    sorters: dict
    histogram: dict

    def as_dict(self) -> dict:
        return asdict(self)


class _Timer:
    def __init__(self):
        self.times = {}

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        except KmerSortError as exc:
            raise PipelineError(name, exc) from exc
        finally:
            self.times[name] = self.times.get(name, 0.0) + time.perf_counter() - t0


def _map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["tasks"] = cfg.tasks
    if math.isinf(d["heavy_factor"]):
        d["heavy_factor"] = "inf"
    return d


def run_pipeline(cfg: RunConfig, reads=None):
    """Count k-mers; returns (Histogram, RunReport)."""
    cfg.validate()
    timer = _Timer()
    k, m, R, s = cfg.k, cfg.m, cfg.ranks, cfg.tasks
    W = n_words(k)
    ext = cfg.extensions
    with timer.stage("io"):
        if reads is None:
            reads = parse_fasta(cfg.inputs, MAX_READ_LENGTH, k - 1)

    # ------------------------------------------------------------ prepare
    with timer.stage("prepare"):
        parts = partition_reads(reads, R)
        blocks = [ReadBlock.from_reads(p) for p in parts]
        sms = _map(lambda b: build_supermers(b.codes, b.starts, b.lengths, b.read_ids, k, m,
                                             cfg.seed, s, cfg.canonical), blocks, R)
        local = [np.bincount(sm.task, weights=record_bytes(sm.length, ext), minlength=s)
                 .astype(np.int64) for sm in sms]
        sizes = gather_task_sizes(local)
        owner, threshold = assign_tasks(sizes, R)
        heavy = (np.zeros(s, dtype=bool) if ext
                 else detect_heavy_hitters(sizes, cfg.heavy_factor))
        max_len = min(MAX_READ_LENGTH, max_supermer_length(cfg.batch_size - 2, ext))
        splits = 0
        sm_queues = [[None] * R for _ in range(R)]
        kl_queues = [[None] * R for _ in range(R)]
        kl_bytes = np.zeros(s, dtype=np.int64)
        heavy_ids = np.flatnonzero(heavy)
        for src, sm in enumerate(sms):
            normal = sm.select(~heavy[sm.task])
            normal, n_split = split_long(normal, max_len, k)
            splits += n_split
            dest = owner[normal.task]
            for dst in range(R):
                sel = normal.select(dest == dst)
                sm_queues[src][dst] = SupermerQueue(
                    sm.codes, sel.start, sel.length,
                    sel.read_id if ext else None, sel.pos if ext else None, k)
            if len(heavy_ids):
                per_dst = [[] for _ in range(R)]
                for t in heavy_ids:
                    mine = sm.select(sm.task == t)
                    keys, _ = expand_records(sm.codes, mine.start, mine.length, k, cfg.canonical)
                    uk, uc = kmerlist_transform(KmerArray(keys, None, k))
                    kl_bytes[t] += len(uc) * kmerlist_record_size(W)
                    per_dst[owner[t]].append((uk, uc))
                for dst in range(R):
                    if per_dst[dst]:
                        kl_queues[src][dst] = KmerListQueue(
                            np.concatenate([a for a, _ in per_dst[dst]]).reshape(-1, W),
                            np.concatenate([c for _, c in per_dst[dst]]))

    # ------------------------------------------------------------ exchange
    topo = RankTopology(R, cfg.batch_size)
    with timer.stage("exchange"):
        sched = plan_rounds(sm_queues, cfg.batch_size)
        received, sm_stats = run_exchange(topo, sm_queues, sched, cfg.overlap,
                                          SupermerDecoder(k, ext))
        kl_received = [[[] for _ in range(R)] for _ in range(R)]
        kl_stats = ExchangeStats(R, cfg.batch_size)
        if len(heavy_ids):
            kl_sched = plan_rounds(kl_queues, cfg.batch_size)
            kl_received, kl_stats = run_exchange(topo, kl_queues, kl_sched, cfg.overlap,
                                                 KmerListDecoder(W))

    # ------------------------------------------------------------ count
    sorter_use = {"inplace": 0, "outofplace": 0}

    def count_rank(dst):
        chunk = SupermerChunk.concat([c for src in range(R) for c in received[dst][src]], ext)
        tasks = record_tasks(chunk.codes, chunk.start, k, m, cfg.seed, s, cfg.canonical)
        keys, payload = expand_records(chunk.codes, chunk.start, chunk.length, k, cfg.canonical,
                                       chunk.read_id, chunk.pos)
        per_kmer = np.repeat(tasks, chunk.length - k + 1)
        order = np.argsort(per_kmer.astype(np.uint16 if s < 65536 else np.int64), kind="stable")
        keys = keys[order]
        payload = payload[order] if payload is not None else None
        bounds = np.searchsorted(per_kmer[order], np.arange(s + 1))
        mine = [t for t in range(s) if owner[t] == dst and not heavy[t]]
        n_of = bounds[1:] - bounds[:-1]

        def work(task_list):
            out = []
            for t in task_list:
                lo, hi = bounds[t], bounds[t + 1]
                arr = KmerArray(keys[lo:hi], payload[lo:hi] if payload is not None else None, k)
                choice = select_sorter(len(arr), arr.record_width, cfg.memory_budget, cfg.sorter)
                sort_kmers(arr, choice, cfg.threads_per_worker)
                out.append((choice, scan_count(arr, cfg.lower, cfg.upper)))
            return out

        bins = schedule_workers(mine, n_of, cfg.workers_per_rank)
        done = [x for part in _map(work, bins, cfg.workers_per_rank) for x in part]
        for choice, _ in done:
            sorter_use[choice] += 1
        hists = [h for _, h in done]
        lists = [(c.keys, c.counts) for src in range(R) for c in kl_received[dst][src]]
        if lists:
            uk, uc = merge_kmerlists(lists, W, k)
            hists.append(Histogram.from_counts(uk, uc, cfg.lower, cfg.upper, k))
        return hists, int(len(per_kmer))

    with timer.stage("count"):
        results = _map(count_rank, list(range(R)), R)
        hist = Histogram.merge([h for hs, _ in results for h in hs], W, k, ext)

    n_kmers = sum(sm.kmer_count(k) for sm in sms)
    report = RunReport(
        config=_config_dict(cfg),
        times={"io_seconds": timer.times.get("io", 0.0),
               "prepare_seconds": timer.times["prepare"],
               "exchange_seconds": timer.times["exchange"],
               "count_seconds": timer.times["count"]},
        reads={"reads": len(reads),
               "skipped_short": int(sum(1 for r in reads if r.length < k)),
               "bases": int(sum(b.bases for b in blocks)),
               "per_rank_bases": [b.bases for b in blocks],
               "kmer_instances": int(n_kmers)},
        supermers={"count": int(sum(len(sm) for sm in sms)),
                   "bases": int(sum(int(sm.length.sum()) for sm in sms)),
                   "splits": splits},
        exchange={"supermer": sm_stats.as_dict(), "kmerlist": kl_stats.as_dict()},
        tasks=[TaskDescriptor(t, int(sizes[t]), int(owner[t]), bool(heavy[t])).as_dict()
               | {"kmerlist_bytes": int(kl_bytes[t])} for t in range(s)],
        sorters=sorter_use | {"assignment_threshold": float(threshold)},
        histogram={"distinct": hist.distinct, "instances": hist.total_instances,
                   "filtered": int(len(hist.kmer_counts)),
                   "counts": {str(f): d for f, d in hist.counts.items()}},
    )
    if report.histogram["instances"] != n_kmers:
        raise PipelineError("count", AssertionError(
            f"counted {report.histogram['instances']} instances, expected {n_kmers}"))
    return hist, report
