"""The Fault Supervisor on a master node: merges diagnostics into a
system-wide fault map."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..lofamo import Diagnostic, FaultClass
from ..wire import Status
from .topology import Torus, TorusCoord

PATH_DIRECT = "ServiceNet"
PATH_RELAY = "LiFaMa3D then ServiceNet"
PATH_SNET_WATCHDOG = "ServiceNet via watchdog"
PATH_INFERRED = "inferred-dead"


def awareness_path(diag: Diagnostic) -> str:
    if not diag.relayed:
        return PATH_DIRECT
    if diag.fault_class is FaultClass.HOST_SNET:
        return PATH_SNET_WATCHDOG
    return PATH_RELAY


@dataclass(frozen=True)
class AwareRecord:
    time: int
    node: TorusCoord
    fault_class: FaultClass
    status: Status
    path: str
    reporter: TorusCoord
    detail: str = ""


@dataclass
class _Suspicion:
    since: int
    reports: List[Tuple[int, TorusCoord, str]] = field(default_factory=list)
    check_pending: bool = False


@dataclass
class SupervisorView:
    master: TorusCoord
    torus: Torus
    grace_us: int
    status: Dict[tuple, Status] = field(default_factory=dict)   # (node, class, port) -> status
    records: List[AwareRecord] = field(default_factory=list)
    inferred_dead: Dict[TorusCoord, Tuple[int, tuple]] = field(default_factory=dict)  # node -> (time, reports)
    heard: Dict[TorusCoord, List[Tuple[int, str]]] = field(default_factory=dict)
    suspects: Dict[TorusCoord, _Suspicion] = field(default_factory=dict)
    frozen: bool = False

    def subject_of(self, origin: TorusCoord, diag: Diagnostic) -> TorusCoord:
        if diag.relayed and diag.direction is not None:
            return self.torus.neighbour(origin, diag.direction)
        return origin

    def hear(self, now: int, node: TorusCoord, what: str) -> None:
        self.heard.setdefault(node, []).append((now, what))

    def receive(self, now: int, origin: TorusCoord, diag: Diagnostic) -> Tuple[Optional[AwareRecord], Optional[TorusCoord]]:
        """Merge one diagnostic. Returns the new awareness record (if the
        status changed) and a node to check for death later (if any)."""
        if self.frozen:
            return None, None
        self.hear(now, origin, "diag")
        subject = self.subject_of(origin, diag)
        # link reports stay per port; everything else is per node
        port = diag.direction if not diag.relayed else None
        key = (subject, diag.fault_class, port)
        rec = None
        if self.status.get(key, Status.NORMAL) is not diag.status:
            self.status[key] = diag.status
            rec = AwareRecord(now, subject, diag.fault_class, diag.status, awareness_path(diag), origin,
                              diag.describe())
            self.records.append(rec)
        suspect = None
        if diag.fault_class is FaultClass.LINK_BROKEN and diag.status is Status.BROKEN and diag.direction:
            target = self.torus.neighbour(origin, diag.direction)
            if target not in self.inferred_dead and target != origin:
                s = self.suspects.get(target)
                if s is None:
                    s = self.suspects[target] = _Suspicion(now)
                s.reports.append((now, origin, diag.direction.label))
                if not s.check_pending:
                    s.check_pending = True
                    suspect = target
        return rec, suspect

    def check_dead(self, now: int, node: TorusCoord) -> Optional[AwareRecord]:
        s = self.suspects.pop(node, None)
        if s is None or self.frozen:
            return None
        lo = s.since - self.grace_us
        for t, what in self.heard.get(node, []):
            if (what == "diag" and lo <= t <= now) or (what == "ping" and s.since <= t <= now):
                return None
        self.inferred_dead[node] = (now, tuple(s.reports))
        self.status[(node, FaultClass.NODE_DEAD, None)] = Status.BROKEN
        detail = f"reports={len(s.reports)} from " + " ".join(f"{o}:{d}" for _, o, d in s.reports)
        rec = AwareRecord(now, node, FaultClass.NODE_DEAD, Status.BROKEN, PATH_INFERRED, self.master, detail)
        self.records.append(rec)
        return rec

    def known(self, node: TorusCoord, cls: FaultClass) -> bool:
        return any(r.node == node and r.fault_class is cls and r.status is not Status.NORMAL for r in self.records)

    def first_aware(self, node: TorusCoord, cls: FaultClass, since: int = 0) -> Optional[AwareRecord]:
        for r in self.records:
            if r.node == node and r.fault_class is cls and r.status is not Status.NORMAL and r.time >= since:
                return r
        return None

    def faulty(self) -> Dict[tuple, Status]:
        return {k: v for k, v in self.status.items() if v is not Status.NORMAL}


def supervisor_collect(world) -> SupervisorView:
    """Primary master's view of a world."""
    return world.views[world.scenario.master]
