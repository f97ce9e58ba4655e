"""Task layer: size gathering, greedy task placement, heavy-hitter handling.

k-mers are split into ``s = ranks * workers_per_rank * tasks_per_worker``
tasks by minimizer score.  A task is never split, so each task can be sorted
and counted on its own.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sortcount import KmerArray, run_length, sort_inplace

DEFAULT_TASKS_PER_WORKER = 3
DEFAULT_THREADS_PER_WORKER = 4
DEFAULT_WORKERS_PER_RANK = 4
DEFAULT_HEAVY_FACTOR = 4.0
THRESHOLD_GROWTH = 1.1


@dataclass
class TaskDescriptor:
    task_id: int
    size_bytes: int
    owner_rank: int
    heavy: bool

    def as_dict(self) -> dict:
        return {"task_id": self.task_id, "size_bytes": self.size_bytes,
                "owner_rank": self.owner_rank, "heavy": self.heavy}


def task_count(ranks: int, workers_per_rank: int, tasks_per_worker: int) -> int:
    return ranks * workers_per_rank * tasks_per_worker


def gather_task_sizes(local_sizes) -> np.ndarray:
    local_sizes = [np.asarray(v, dtype=np.int64) for v in local_sizes]
    s = len(local_sizes[0])
    for r, v in enumerate(local_sizes):
        if len(v) != s:
            raise AssertionError(f"rank {r} reported {len(v)} task sizes, expected {s}")
    return np.sum(local_sizes, axis=0)


def assign_tasks(sizes, ranks: int):
    """Threshold-and-retry first-fit of tasks (largest first) onto ranks.

    Returns (owner array, final threshold).
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    total = int(sizes.sum())
    order = sorted(range(len(sizes)), key=lambda t: (-sizes[t], t))
    threshold = float(max(math.ceil(total / ranks), int(sizes.max(initial=0))))
    while True:
        owner = np.full(len(sizes), -1, dtype=np.int64)
        loads = [0] * ranks
        for t in order:
            for r in range(ranks):
                if loads[r] + sizes[t] <= threshold:
                    owner[t] = r
                    loads[r] += int(sizes[t])
                    break
            else:
                break
        else:
            return owner, threshold
        threshold *= THRESHOLD_GROWTH


def rank_loads(sizes, owner, ranks: int) -> np.ndarray:
    return np.bincount(owner, weights=sizes, minlength=ranks).astype(np.int64)


def detect_heavy_hitters(sizes, factor: float) -> np.ndarray:
    sizes = np.asarray(sizes, dtype=np.float64)
    if math.isinf(factor) or len(sizes) == 0:
        return np.zeros(len(sizes), dtype=bool)
    return sizes > factor * (sizes.sum() / len(sizes))


def schedule_workers(task_ids, sizes, workers: int) -> list:
    """Largest task first to the least-loaded worker; ties to the lower id."""
    bins = [[] for _ in range(workers)]
    loads = [0] * workers
    for t in sorted(task_ids, key=lambda t: (-int(sizes[t]), t)):
        w = loads.index(min(loads))
        bins[w].append(t)
        loads[w] += int(sizes[t])
    return bins


def kmerlist_transform(arr: KmerArray):
    """Sort and run-length count local k-mer instances of one heavy task.

    Returns (unique keys strictly increasing, counts).
    """
    if len(arr) == 0:
        return arr.keys[:0], np.zeros(0, dtype=np.int64)
    sort_inplace(KmerArray(arr.keys, None, arr.k))
    uniq, counts, _ = run_length(arr.keys)
    return uniq, counts


def merge_kmerlists(streams, W: int, k=None):
    """Concatenate (keys, counts) streams, sort by key, sum equal keys."""
    streams = [(np.asarray(kk, dtype=np.uint64).reshape(-1, W), np.asarray(c, dtype=np.int64))
               for kk, c in streams]
    if not streams or sum(len(c) for _, c in streams) == 0:
        return np.zeros((0, W), dtype=np.uint64), np.zeros(0, dtype=np.int64)
    keys = np.concatenate([kk for kk, _ in streams])
    counts = np.concatenate([c for _, c in streams])
    arr = KmerArray(keys, counts.astype(np.uint64), k)
    sort_inplace(arr)
    uniq, _, starts = run_length(arr.keys)
    totals = np.add.reduceat(arr.payload.astype(np.int64), starts)
    return uniq, totals
