"""Task size spread and rank loads for uniform and repeat-rich input.

    python3 scripts/load_balance.py --kmers 2000000 --tasks 256
"""
import argparse

import numpy as np

from kmersort.ingest import ReadBlock
from kmersort.minimizer import DEFAULT_SEED
from kmersort.supermer import build_supermers, record_bytes
from kmersort.synth import random_reads, repeat_reads
from kmersort.taskengine import assign_tasks, detect_heavy_hitters, rank_loads


def summarize(label, reads, k, m, s, ranks):
    b = ReadBlock.from_reads(reads)
    sms = build_supermers(b.codes, b.starts, b.lengths, b.read_ids, k, m, DEFAULT_SEED, s)
    sizes = np.bincount(sms.task, weights=record_bytes(sms.length, False), minlength=s)
    owner, threshold = assign_tasks(sizes.astype(np.int64), ranks)
    loads = rank_loads(sizes, owner, ranks)
    heavy = int(detect_heavy_hitters(sizes, 4.0).sum())
    print(f"{label:<10} tasks max/min {sizes.max() / max(sizes.min(), 1):6.3f}  "
          f"std/mean {sizes.std() / sizes.mean():6.2%}  rank max/avg "
          f"{loads.max() / loads.mean():5.3f}  heavy@4 {heavy}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kmers", type=int, default=2_000_000)
    ap.add_argument("--tasks", type=int, default=256)
    ap.add_argument("--ranks", type=int, default=8)
    ap.add_argument("--k", type=int, default=31)
    ap.add_argument("--m", type=int, default=15)
    ap.add_argument("--seed", type=int, default=2)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    length = 10_000
    n = max(1, args.kmers // (length - args.k + 1))
    summarize("uniform", random_reads(rng, n, length), args.k, args.m, args.tasks, args.ranks)
    summarize("AATGG 30%", repeat_reads(rng, n, length, 0.3), args.k, args.m, args.tasks,
              args.ranks)


if __name__ == "__main__":
    main()
