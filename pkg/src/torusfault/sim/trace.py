"""Serialising simulation traces and findings."""

from __future__ import annotations

import csv
import io
import json

from ..lofamo.taxonomy import FINDINGS_HEADER
from .world import TRACE_HEADER

FORMATS = ("csv", "jsonl")


def _rows_text(header, rows, fmt: str) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    else:
        for row in rows:
            buf.write(json.dumps(dict(zip(header, row)), separators=(",", ":")) + "\n")
    return buf.getvalue()


def trace_text(world, fmt: str = "csv") -> str:
    """``time_us,node,event_kind,detail`` records, in processing order."""
    return _rows_text(TRACE_HEADER, [r.as_row() for r in world.trace], fmt)


def findings_text(world, fmt: str = "csv") -> str:
    return _rows_text(FINDINGS_HEADER, [f.as_row() for f in world.findings], fmt)
