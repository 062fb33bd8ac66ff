"""Per-fault awareness latency and scenario assertion checks."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import List, Optional, Union

from ..lofamo import FaultClass
from .scenario import Assertion, FaultEvent, FaultKind
from .supervisor import AwareRecord

LATENCY_HEADER = ["inject_us", "node", "component", "kind", "fault_class", "detect_us", "aware_us", "path"]


class FaultNeverDetected(Exception):
    """An injected fault that never reached the supervisor."""

    def __init__(self, event: FaultEvent, fault_class: FaultClass, reason: str):
        super().__init__(f"{event.describe()} at {event.target}: {fault_class.label} {reason}")
        self.event = event
        self.fault_class = fault_class
        self.reason = reason


@dataclass(frozen=True)
class AwarenessRecord:
    event: FaultEvent
    fault_class: FaultClass
    inject_time: int
    detect_time: Optional[int]
    aware_time: int
    path: str
    reporter: object

    @property
    def latency_us(self) -> int:
        return self.aware_time - self.inject_time


Entry = Union[AwarenessRecord, FaultNeverDetected]


def _subjects(world, ev: FaultEvent):
    subjects = [ev.target]
    if ev.direction is not None:
        subjects.append(world.torus.neighbour(ev.target, ev.direction))
    return subjects


def _first_detect(world, ev: FaultEvent, cls: FaultClass, subjects) -> Optional[int]:
    names = {str(s) for s in subjects}
    for f in world.findings:
        if f.time >= ev.time_us and f.fault_class is cls and f.node in names and f.status.value > 0:
            return f.time
    return None


def _first_aware(world, ev: FaultEvent, cls: FaultClass, subjects) -> Optional[AwareRecord]:
    best = None
    for view in world.views.values():
        for s in subjects:
            r = view.first_aware(s, cls, ev.time_us)
            if r is not None and (best is None or r.time < best.time):
                best = r
    return best


def awareness_latency(world) -> List[Entry]:
    """One entry per (injected fault, expected class); restores are skipped."""
    out: List[Entry] = []
    for ev in world.injections:
        if ev.kind is FaultKind.RESTORE:
            continue
        subjects = _subjects(world, ev)
        for cls in ev.expected_classes():
            rec = _first_aware(world, ev, cls, subjects)
            detect = _first_detect(world, ev, cls, subjects)
            if rec is None:
                reason = "never detected" if detect is None else "detected but never reported"
                out.append(FaultNeverDetected(ev, cls, reason))
                continue
            if cls is FaultClass.NODE_DEAD:
                detect = rec.time
            out.append(AwarenessRecord(ev, cls, ev.time_us, detect, rec.time, rec.path, rec.reporter))
    return out


def never_detected(entries: List[Entry]) -> List[FaultNeverDetected]:
    return [e for e in entries if isinstance(e, FaultNeverDetected)]


def latency_rows(entries: List[Entry]) -> List[list]:
    rows = []
    for e in entries:
        if isinstance(e, FaultNeverDetected):
            ev = e.event
            rows.append([ev.time_us, str(ev.target), ev.component, ev.kind.value, e.fault_class.label,
                         "", "", "never_detected"])
        else:
            ev = e.event
            rows.append([e.inject_time, str(ev.target), ev.component, ev.kind.value, e.fault_class.label,
                         "" if e.detect_time is None else e.detect_time, e.aware_time, e.path])
    return rows


def latency_csv(entries: List[Entry]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LATENCY_HEADER)
    w.writerows(latency_rows(entries))
    return buf.getvalue()


def summary_line(world, entries: List[Entry]) -> str:
    aware = sum(1 for e in entries if isinstance(e, AwarenessRecord))
    missed = len(entries) - aware
    text = f"{len(world.findings)} faults detected, {aware} reached the supervisor"
    if missed:
        text += f", {missed} never detected"
    return text


# scenario assertions

def check_assertion(world, a: Assertion) -> Optional[str]:
    """None when the assertion holds, else a failure message."""
    views = list(world.views.values())
    if a.kind == "findings":
        n = len(world.findings)
        return None if n == a.count else f"expected {a.count} findings, got {n}"
    if a.kind == "inferred_dead":
        if any(a.node in v.inferred_dead for v in views):
            return None
        return f"{a.node} never inferred dead"
    since = 0
    recs = [r for v in views for r in [v.first_aware(a.node, a.fault_class, since)] if r is not None]
    if a.kind == "never_aware":
        return None if not recs else f"supervisor unexpectedly aware of {a.fault_class.label} at {a.node}"
    if not recs:
        return f"supervisor never aware of {a.fault_class.label} at {a.node}"
    if a.within_ms is not None:
        t0 = min((e.time_us for e in world.injections if e.target == a.node), default=0)
        first = min(r.time for r in recs)
        if first - t0 > a.within_ms * 1000:
            return f"{a.fault_class.label} at {a.node} took {(first - t0) / 1000:.3f} ms > {a.within_ms} ms"
    return None


def check_assertions(world) -> List[str]:
    return [m for a in world.scenario.assertions for m in [check_assertion(world, a)] if m is not None]
