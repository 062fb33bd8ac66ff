"""DNP Fault Manager: the hardware half of the mutual watchdog.

It refreshes the DWR every ``t_write``, reads (and invalidates) the HWR
every ``t_read``, classifies sensors and links, and talks to neighbouring
DFMs with LiFaMa diagnostic messages.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

from ..wire import Direction, DnpWatchdogRegister, HostWatchdogRegister, LifamaDiagnosticMessage, Status
from .bank import Actor, RegisterBank
from .health import LinkCounters, LinkHealthState, MIN_SAMPLE, SICK_RATIO
from .taxonomy import (
    HOST_FIELD_CLASSES,
    SENSOR_CLASSES,
    FaultClass,
    Finding,
    link_class,
    make_finding,
    unmasked,
)

log = logging.getLogger(__name__)

HOST_FIELDS = ("service_net", "memory", "peripheral")


class InvalidLdm(ValueError):
    pass


@dataclass
class DfmOutput:
    dwr: Optional[int] = None
    ldm: Optional[LifamaDiagnosticMessage] = None
    findings: List[Finding] = field(default_factory=list)

    def merge(self, other: "DfmOutput") -> "DfmOutput":
        if other.dwr is not None:
            self.dwr = other.dwr
        if other.ldm is not None:
            self.ldm = other.ldm
        self.findings.extend(other.findings)
        return self


def is_host_breakdown(msg: LifamaDiagnosticMessage) -> bool:
    return all(getattr(msg, f) is Status.BROKEN for f in HOST_FIELDS)


def ldm_classes(msg: LifamaDiagnosticMessage) -> Dict[FaultClass, Status]:
    """Host-side fault classes carried by an LDM (non-normal ones only)."""
    if is_host_breakdown(msg):
        return {FaultClass.HOST_BREAKDOWN: Status.BROKEN}
    return {HOST_FIELD_CLASSES[f]: getattr(msg, f) for f in HOST_FIELDS if getattr(msg, f) is not Status.NORMAL}


class DnpFaultManager:
    def __init__(self, bank: RegisterBank, node: str = "", start: int = 0,
                 write_phase: int = 0, read_phase: int = 0,
                 sick_sets_neighbour: bool = False,
                 min_sample: int = MIN_SAMPLE, sick_ratio: float = SICK_RATIO):
        self.bank = bank
        self.node = node
        self.sick_sets_neighbour = sick_sets_neighbour
        cfg = bank.timer
        self.next_write = start + write_phase
        self.next_read = start + read_phase + cfg.t_read_us
        self.core_probe = Status.NORMAL
        self.readings: Dict[str, float] = bank.thresholds.nominal()
        self.sensor_status = {k: Status.NORMAL for k in SENSOR_CLASSES}
        self.links = {d: LinkHealthState(sick_ratio, min_sample) for d in Direction}
        self.neighbours: set = set()
        self.host_seen = HostWatchdogRegister(valid=True)
        self.host_broken = False
        self.reads = 0
        self.missed_reads = 0
        self.ldm_sent = 0
        self._ldm_active = False
        self._reported: Dict[tuple, Status] = {}
        bank.write_dwr(self._compose(), Actor.DFM)

    # scheduling

    def next_due(self) -> int:
        return min(self.next_write, self.next_read)

    def tick(self, now: int, sensors: Optional[Mapping[str, float]] = None,
             link_counters: Optional[Mapping[Direction, LinkCounters]] = None) -> DfmOutput:
        out = DfmOutput()
        if now >= self.next_write:
            out.merge(self.write(now, sensors, link_counters))
            while self.next_write <= now:
                self.next_write += self.bank.timer.t_write_us
        if now >= self.next_read:
            out.merge(self.read(now))
            while self.next_read <= now:
                self.next_read += self.bank.timer.t_read_us
        return out

    # DWR side

    def _emulated(self, cls: FaultClass, status: Status) -> Status:
        if self.bank.emulation >> cls.bit & 1 and status is Status.NORMAL:
            return Status.SICK
        return status

    def _compose(self) -> DnpWatchdogRegister:
        return DnpWatchdogRegister(
            valid=True,
            failed_neighbours=frozenset(self.neighbours),
            dnp_core=self._emulated(FaultClass.DNP_CORE_SICK, self.core_probe),
            current=self.sensor_status["current"],
            voltage=self.sensor_status["voltage"],
            temperature=self.sensor_status["temperature"],
            links=tuple(s.status for s in self.links.values()),   # Direction order
        )

    def _note(self, now: int, cls: FaultClass, status: Status, out: DfmOutput,
              direction: Optional[Direction] = None) -> None:
        key = (cls, direction)
        if self._reported.get(key, Status.NORMAL) is status:
            return
        self._reported[key] = status
        if unmasked(self.bank.mask, cls):
            out.findings.append(make_finding(now, self.node, cls, status, direction))

    def write(self, now: int, sensors: Optional[Mapping[str, float]] = None,
              link_counters: Optional[Mapping[Direction, LinkCounters]] = None) -> DfmOutput:
        out = DfmOutput()
        if sensors:
            self.readings.update(sensors)
        for metric, cls in SENSOR_CLASSES.items():
            st = self._emulated(cls, self.bank.thresholds.classify(metric, self.readings[metric]))
            self.sensor_status[metric] = st
            self._note(now, cls, st, out)
        for d, delta in (link_counters or {}).items():
            st = self.links[d].update(delta)
            self._note(now, FaultClass.LINK_SICK, st if st is Status.SICK else Status.NORMAL, out, d)
            self._note(now, FaultClass.LINK_BROKEN, st if st is Status.BROKEN else Status.NORMAL, out, d)
        core = self._emulated(FaultClass.DNP_CORE_SICK, self.core_probe)
        self._note(now, FaultClass.DNP_CORE_SICK, core, out)
        out.dwr = self.bank.write_dwr(self._compose(), Actor.DFM)
        return out

    # HWR side

    def read(self, now: int) -> DfmOutput:
        out = DfmOutput()
        self.reads += 1
        hwr = self.bank.read_hwr()
        reason = None
        if hwr.valid:
            self.bank.invalidate_hwr(Actor.DFM)
            self.host_seen = hwr
            if self.host_broken:
                self.host_broken = False
                self._note(now, FaultClass.HOST_BREAKDOWN, Status.NORMAL, out)
            if hwr.service_net is Status.BROKEN and unmasked(self.bank.mask, FaultClass.HOST_SNET):
                reason = "service_net"
            elif hwr.send_ldm:
                reason = "requested"
        else:
            # a whole read period went by without a fresh HWR
            self.missed_reads += 1
            if not self.host_broken:
                self.host_broken = True
                log.debug("%s: host missed HWR update at %d us", self.node, now)
            self._note(now, FaultClass.HOST_BREAKDOWN, Status.BROKEN, out)
            if unmasked(self.bank.mask, FaultClass.HOST_BREAKDOWN):
                reason = "host_broken"
        if reason is not None or self._ldm_active:
            out.ldm = self.build_ldm()
            self.ldm_sent += 1
        self._ldm_active = reason is not None
        return out

    def build_ldm(self) -> LifamaDiagnosticMessage:
        dwr = self._compose()
        if self.host_broken:
            host = dict.fromkeys(HOST_FIELDS, Status.BROKEN)
        else:
            host = {f: getattr(self.host_seen, f) for f in HOST_FIELDS}
        return LifamaDiagnosticMessage(
            dnp_core=dwr.dnp_core, current=dwr.current, voltage=dwr.voltage,
            temperature=dwr.temperature, links=dwr.links, valid=True, **host)

    # neighbours

    def _fails(self, msg: LifamaDiagnosticMessage) -> bool:
        mask = self.bank.mask
        bad = {Status.BROKEN, Status.SICK} if self.sick_sets_neighbour else {Status.BROKEN}
        if is_host_breakdown(msg):
            return unmasked(mask, FaultClass.HOST_BREAKDOWN)
        fields = {HOST_FIELD_CLASSES[f]: getattr(msg, f) for f in HOST_FIELDS}
        fields[FaultClass.DNP_CORE_SICK] = msg.dnp_core
        fields.update({cls: getattr(msg, m) for m, cls in SENSOR_CLASSES.items()})
        if any(unmasked(mask, c) and s in bad for c, s in fields.items()):
            return True
        return any(unmasked(mask, link_class(s)) and s in bad for s in msg.links)

    def apply_remote_ldm(self, direction: Direction, msg: LifamaDiagnosticMessage) -> None:
        if not msg.valid:
            raise InvalidLdm("LDM valid bit is clear")
        self.bank.rfd = self.bank.rfd.with_report(direction, msg)
        if self._fails(msg):
            self.neighbours.add(direction)
        else:
            self.neighbours.discard(direction)
        # reflect the new neighbour bit right away, leaving the valid bit as it is
        cur = DnpWatchdogRegister.from_word(self.bank.dwr)
        upd = DnpWatchdogRegister(cur.valid, frozenset(self.neighbours), cur.dnp_core, cur.current,
                                  cur.voltage, cur.temperature, cur.links, cur.lifama_busy)
        self.bank.write_dwr(upd, Actor.DFM)
