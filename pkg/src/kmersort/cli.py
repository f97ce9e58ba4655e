"""Command-line entry point: ``kmersort [options] FASTA...``."""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import KmerSortError
from .exchange import DEFAULT_BATCH_SIZE
from .minimizer import DEFAULT_SEED
from .output import check_writable, emit_outputs
from .pipeline import RunConfig, run_pipeline
from .taskengine import (DEFAULT_HEAVY_FACTOR, DEFAULT_TASKS_PER_WORKER,
                         DEFAULT_THREADS_PER_WORKER, DEFAULT_WORKERS_PER_RANK)

log = logging.getLogger("kmersort")


def _int_auto_base(text: str) -> int:
    return int(text, 0)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kmersort",
        description="Sorting-based k-mer counter over simulated distributed ranks.")
    p.add_argument("inputs", nargs="+", help="FASTA files")
    p.add_argument("--k", type=int, default=31)
    p.add_argument("--m", type=int, default=None, help="minimizer length (default k/2, or 23 for k >= 46)")
    p.add_argument("--ranks", type=int, default=1)
    p.add_argument("--workers-per-rank", type=int, default=DEFAULT_WORKERS_PER_RANK)
    p.add_argument("--threads-per-worker", type=int, default=DEFAULT_THREADS_PER_WORKER)
    p.add_argument("--tasks-per-worker", type=int, default=DEFAULT_TASKS_PER_WORKER)
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    p.add_argument("--lower", type=int, default=2)
    p.add_argument("--upper", type=int, default=50)
    p.add_argument("--seed", type=_int_auto_base, default=DEFAULT_SEED)
    p.add_argument("--canonical", action="store_true")
    p.add_argument("--extensions", action="store_true")
    p.add_argument("--heavy-factor", type=float, default=DEFAULT_HEAVY_FACTOR)
    p.add_argument("--sorter", choices=("auto", "inplace", "outofplace"), default="auto")
    p.add_argument("--memory-budget", type=float, default=None, help="bytes available per sort")
    p.add_argument("--out-histogram", default=None)
    p.add_argument("--out-dump", default=None)
    p.add_argument("--out-report", default=None)
    p.add_argument("--no-overlap", action="store_true", help="run exchange stages sequentially")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> RunConfig:
    return RunConfig(
        k=args.k, m=args.m, ranks=args.ranks, workers_per_rank=args.workers_per_rank,
        threads_per_worker=args.threads_per_worker, tasks_per_worker=args.tasks_per_worker,
        batch_size=args.batch_size, lower=args.lower, upper=args.upper, seed=args.seed,
        canonical=args.canonical, extensions=args.extensions, heavy_factor=args.heavy_factor,
        sorter=args.sorter, memory_budget=args.memory_budget, overlap=not args.no_overlap,
        inputs=list(args.inputs), out_histogram=args.out_histogram, out_dump=args.out_dump,
        out_report=args.out_report)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args).validate()
        check_writable([cfg.out_histogram, cfg.out_dump, cfg.out_report])
        hist, report = run_pipeline(cfg)
        emit_outputs(hist, report, cfg.out_histogram, cfg.out_dump, cfg.out_report)
    except KmerSortError as exc:
        print(f"kmersort: error: {exc}", file=sys.stderr)
        return exc.exit_code
    log.info("distinct=%d instances=%d filtered=%d", report.histogram["distinct"],
             report.histogram["instances"], report.histogram["filtered"])
    if not cfg.out_histogram:
        for f, d in sorted(hist.counts.items()):
            print(f"{f}\t{d}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
