"""Per-stage wall time of a full run on synthetic reads, as JSON.

    python3 scripts/stage_times.py --reads 2000 --length 2000 --ranks 4
"""
import argparse
import json

import numpy as np

from kmersort.pipeline import RunConfig, run_pipeline
from kmersort.synth import random_reads


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reads", type=int, default=2_000)
    ap.add_argument("--length", type=int, default=2_000)
    ap.add_argument("--ranks", type=int, default=4)
    ap.add_argument("--k", type=int, default=31)
    ap.add_argument("--sorter", default="auto", choices=["auto", "inplace", "outofplace"])
    args = ap.parse_args()

    reads = random_reads(np.random.default_rng(4), args.reads, args.length)
    cfg = RunConfig(k=args.k, ranks=args.ranks, sorter=args.sorter)
    run_pipeline(cfg, reads[:10])  # compile
    _, report = run_pipeline(cfg, reads)
    out = {"times": report.times, "exchange": report.exchange["supermer"],
           "sorters": report.sorters, "kmer_instances": report.reads["kmer_instances"]}
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
