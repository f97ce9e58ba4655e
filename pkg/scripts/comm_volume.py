"""Exchange volume of supermers against per-k-mer messages, across k and m.

    python3 scripts/comm_volume.py --reads 50 --length 10000
"""
import argparse
import math

import numpy as np

from kmersort.pipeline import RunConfig, default_m, run_pipeline
from kmersort.synth import random_reads


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reads", type=int, default=50)
    ap.add_argument("--length", type=int, default=10_000)
    ap.add_argument("--ranks", type=int, default=4)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    reads = random_reads(np.random.default_rng(args.seed), args.reads, args.length)
    print(f"{'k':>3} {'m':>3} {'supermer B':>12} {'per-k-mer B':>12} {'ratio':>6} "
          f"{'ext ratio':>9} {'rounds':>6}")
    for k in (17, 31, 45, 55):
        for m in sorted({default_m(k), k // 3, min(k - 1, 27)}):
            cfg = RunConfig(k=k, m=m, ranks=args.ranks, lower=1)
            _, rep = run_pipeline(cfg, reads)
            sm = rep.exchange["supermer"]
            naive = sum((r.length - k + 1) * math.ceil(k / 4) for r in reads)
            _, rep_ext = run_pipeline(RunConfig(k=k, m=m, ranks=args.ranks, lower=1,
                                                extensions=True), reads)
            ext_bytes = rep_ext.exchange["supermer"]["payload_bytes"] - sm["payload_bytes"]
            ext_ratio = ext_bytes / (8 * rep.supermers["count"])
            print(f"{k:>3} {m:>3} {sm['payload_bytes']:>12} {naive:>12} "
                  f"{sm['payload_bytes'] / naive:>6.3f} {ext_ratio:>9.3f} {sm['rounds']:>6}")


if __name__ == "__main__":
    main()
