"""Host Fault Manager: the software half of the mutual watchdog.

It writes the HWR with host health, reads (and invalidates) the DWR and
turns whatever it learns into diagnostics for the supervisor. Diagnostics
stay pending until acknowledged and are resent every ``t_read``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

from ..wire import Direction, HostWatchdogRegister, Status
from .bank import Actor, RegisterBank
from .dfm import ldm_classes
from .snet import PING_TIMEOUT_US, SnetMonitor, SnetState
from .taxonomy import (
    SENSOR_CLASSES,
    Diagnostic,
    FaultClass,
    Finding,
    make_finding,
    unmasked,
)

RELAYED_CLASSES = (FaultClass.HOST_BREAKDOWN, FaultClass.HOST_SNET,
                   FaultClass.HOST_MEMORY, FaultClass.HOST_PERIPHERAL)


@dataclass
class HfmOutput:
    hwr: Optional[int] = None
    outbox: List[Diagnostic] = field(default_factory=list)
    findings: List[Finding] = field(default_factory=list)

    def merge(self, other: "HfmOutput") -> "HfmOutput":
        if other.hwr is not None:
            self.hwr = other.hwr
        self.outbox.extend(other.outbox)
        self.findings.extend(other.findings)
        return self


class HostFaultManager:
    def __init__(self, bank: RegisterBank, node: str = "", start: int = 0,
                 write_phase: int = 0, read_phase: int = 0,
                 snet_timeout_us: int = PING_TIMEOUT_US):
        self.bank = bank
        self.node = node
        cfg = bank.timer
        self.next_write = start + write_phase
        self.next_read = start + read_phase + cfg.t_read_us
        self.memory = Status.NORMAL
        self.peripheral = Status.NORMAL
        self.snet = SnetMonitor(snet_timeout_us)
        self.send_ldm = False
        self.dnp_broken = False
        self.reads = 0
        self.missed_reads = 0
        self.conditions: Dict[tuple, Status] = {}
        self.pending: Dict[int, Diagnostic] = {}
        self._sent_at: Dict[int, int] = {}
        self._seq = 0
        bank.write_hwr(self._compose(), Actor.HFM)

    def next_due(self) -> int:
        return min(self.next_write, self.next_read)

    def tick(self, now: int, probes: Optional[Mapping[str, Status]] = None) -> HfmOutput:
        out = HfmOutput()
        if now >= self.next_write:
            out.merge(self.write(now, probes))
            while self.next_write <= now:
                self.next_write += self.bank.timer.t_write_us
        if now >= self.next_read:
            out.merge(self.read(now))
            while self.next_read <= now:
                self.next_read += self.bank.timer.t_read_us
        out.outbox.extend(self.retransmit(now, skip={d.seq for d in out.outbox}))
        return out

    def _emulated(self, cls: FaultClass, status: Status) -> Status:
        if self.bank.emulation >> cls.bit & 1 and status is Status.NORMAL:
            return Status.SICK
        return status

    def _compose(self) -> HostWatchdogRegister:
        return HostWatchdogRegister(
            valid=True,
            service_net=self.snet_status,
            memory=self._emulated(FaultClass.HOST_MEMORY, self.memory),
            peripheral=self._emulated(FaultClass.HOST_PERIPHERAL, self.peripheral),
            send_ldm=self.send_ldm,
        )

    @property
    def snet_status(self) -> Status:
        return self._emulated(FaultClass.HOST_SNET, self.snet.status)

    def _set(self, now: int, cls: FaultClass, status: Status, out: HfmOutput,
             direction: Optional[Direction] = None, relayed: bool = False, local: bool = False) -> None:
        key = (cls, direction)
        if self.conditions.get(key, Status.NORMAL) is status:
            return
        if status is Status.NORMAL:
            del self.conditions[key]
        else:
            self.conditions[key] = status
        if not unmasked(self.bank.mask, cls):
            return
        if local:
            out.findings.append(make_finding(now, self.node, cls, status, direction))
        # a newer report supersedes an unacked one about the same thing
        for seq in [s for s, d in self.pending.items() if d.key == key]:
            self.ack(seq)
        self._seq += 1
        diag = Diagnostic(self._seq, self.node, cls, status, now, direction, relayed)
        self.pending[diag.seq] = diag
        self._sent_at[diag.seq] = now
        out.outbox.append(diag)

    def write(self, now: int, probes: Optional[Mapping[str, Status]] = None) -> HfmOutput:
        out = HfmOutput()
        for name, st in (probes or {}).items():
            setattr(self, name, Status(st))
        hwr = self._compose()
        out.hwr = self.bank.write_hwr(hwr, Actor.HFM)
        self._set(now, FaultClass.HOST_MEMORY, hwr.memory, out, local=True)
        self._set(now, FaultClass.HOST_PERIPHERAL, hwr.peripheral, out, local=True)
        self._set(now, FaultClass.HOST_SNET, hwr.service_net, out, local=True)
        return out

    def read(self, now: int) -> HfmOutput:
        out = HfmOutput()
        self.reads += 1
        dwr = self.bank.read_dwr()
        if not dwr.valid:
            self.missed_reads += 1
            self.dnp_broken = True
            self._set(now, FaultClass.DNP_MELTDOWN, Status.BROKEN, out, local=True)
            return out
        self.bank.invalidate_dwr(Actor.HFM)
        self.dnp_broken = False
        self._set(now, FaultClass.DNP_MELTDOWN, Status.NORMAL, out, local=True)
        # reconcile only what is abnormal now or was abnormal before
        wanted: Dict[tuple, Status] = {}
        if dwr.dnp_core is not Status.NORMAL:
            wanted[(FaultClass.DNP_CORE_SICK, None)] = dwr.dnp_core
        for metric, cls in SENSOR_CLASSES.items():
            st = getattr(dwr, metric)
            if st is not Status.NORMAL:
                wanted[(cls, None)] = st
        rfd = self.bank.rfd
        for d in Direction:
            st = dwr.link(d)
            if st is Status.SICK:
                wanted[(FaultClass.LINK_SICK, d)] = st
            elif st is Status.BROKEN:
                wanted[(FaultClass.LINK_BROKEN, d)] = st
            remote = rfd.get(d)
            if remote is not None:
                seen = ldm_classes(remote)
            elif d in dwr.failed_neighbours:
                seen = {FaultClass.HOST_BREAKDOWN: Status.BROKEN}
            else:
                continue
            for cls, st in seen.items():
                wanted[(cls, d)] = st
        stale = [k for k in self.conditions if k not in wanted and self._from_dwr(k)]
        for key in list(wanted) + stale:
            cls, d = key
            self._set(now, cls, wanted.get(key, Status.NORMAL), out, d,
                      relayed=d is not None and cls in RELAYED_CLASSES)
        return out

    @staticmethod
    def _from_dwr(key: tuple) -> bool:
        cls, d = key
        if cls in RELAYED_CLASSES:
            return d is not None
        return cls is not FaultClass.DNP_MELTDOWN

    def retransmit(self, now: int, skip=()) -> List[Diagnostic]:
        period = self.bank.timer.t_read_us
        due = []
        for seq, diag in self.pending.items():
            if seq not in skip and now - self._sent_at[seq] >= period:
                self._sent_at[seq] = now
                due.append(diag)
        return due

    def ack(self, seq: int) -> bool:
        self._sent_at.pop(seq, None)
        return self.pending.pop(seq, None) is not None

    def snet_step(self, now: int, pong_received: bool) -> SnetState:
        return self.snet.step(now, pong_received)
