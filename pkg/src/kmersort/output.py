"""Histogram, dump and report files.

* histogram TSV: ``count<TAB>num_distinct`` per line, ascending count.
* dump TSV: header ``kmer<TAB>count``, then one line per filtered k-mer in
  k-mer order; with extensions, each k-mer line is followed by its
  ``read_id<TAB>pos`` lines (sorted).
* report: one JSON object, keys sorted.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .errors import OutputError
from .seqmodel import keys_to_strings

DUMP_HEADER = "kmer\tcount"


def check_writable(paths) -> None:
    """Fail before any counting if an output cannot be created."""
    for p in paths:
        if p is None:
            continue
        parent = Path(p).resolve().parent
        if not parent.is_dir():
            raise OutputError(f"{p}: directory does not exist")
        if not os.access(parent, os.W_OK) or (Path(p).exists() and not os.access(p, os.W_OK)):
            raise OutputError(f"{p}: not writable")


def _atomic_write(path, lines) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.resolve().parent, prefix=f".{path.name}.")
    except OSError as exc:
        raise OutputError(f"{path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
        os.replace(tmp, path)
    except BaseException as exc:
        Path(tmp).unlink(missing_ok=True)
        if isinstance(exc, OSError):
            raise OutputError(f"{path}: {exc}") from exc
        raise


def histogram_lines(hist):
    for f, d in sorted(hist.counts.items()):
        yield f"{f}\t{d}"


def dump_lines(hist):
    yield DUMP_HEADER
    hist.sort_by_key()
    names = keys_to_strings(hist.keys, hist.k)
    with_ext = hist.ext is not None
    for i, (name, c) in enumerate(zip(names, hist.kmer_counts.tolist())):
        yield f"{name}\t{c}"
        if with_ext:
            for rid, pos in hist.extensions_of(i):
                yield f"{rid}\t{pos}"


def emit_outputs(hist, report, out_histogram=None, out_dump=None, out_report=None) -> list:
    written = []
    try:
        if out_histogram:
            _atomic_write(out_histogram, histogram_lines(hist))
            written.append(out_histogram)
        if out_dump:
            _atomic_write(out_dump, dump_lines(hist))
            written.append(out_dump)
        if out_report:
            text = json.dumps(report.as_dict(), indent=2, sort_keys=True)
            _atomic_write(out_report, [text])
            written.append(out_report)
    except BaseException:
        for p in written:
            Path(p).unlink(missing_ok=True)
        raise
    return written


def read_histogram(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        f, d = line.split("\t")
        out[int(f)] = int(d)
    return out


def read_dump(path):
    """Parse a dump file into ({kmer: count}, {kmer: [(read_id, pos), ...]})."""
    counts, exts = {}, {}
    current = None
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != DUMP_HEADER:
        raise ValueError(f"{path}: missing dump header")
    for line in lines[1:]:
        a, b = line.split("\t")
        if a[0].isdigit():
            exts[current].append((int(a), int(b)))
        else:
            current = a
            counts[a] = int(b)
            exts[a] = []
    return counts, exts
