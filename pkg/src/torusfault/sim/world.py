"""Deterministic discrete-event simulation of a torus of (host, DNP) tiles.

Virtual time is integer microseconds. Events at the same instant run in
(priority, insertion) order: fault injections first, then message
deliveries, then manager timers, then supervisor checks.
"""

from __future__ import annotations

import heapq
import logging
import random
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional

from ..lofamo import (
    DnpFaultManager,
    FaultClass,
    Finding,
    HostFaultManager,
    LinkCounters,
    RegisterBank,
)
from ..lofamo.taxonomy import make_finding
from ..wire import Direction, Status, embed_ldm, extract_ldm, format_word, make_credit
from .ring import CommandRing
from .scenario import FaultEvent, FaultKind, FaultScenario, UnknownTarget
from .supervisor import SupervisorView
from .topology import Torus, TorusCoord

log = logging.getLogger(__name__)

DEFAULT_SEED = 20131
PRIO_INJECT, PRIO_DELIVERY, PRIO_TIMER, PRIO_CHECK = 0, 1, 2, 3
TRACE_HEADER = ["time_us", "node", "event_kind", "detail"]


@dataclass(frozen=True)
class TraceRecord:
    time_us: int
    node: str
    event_kind: str
    detail: str

    def as_row(self) -> list:
        return [self.time_us, self.node, self.event_kind, self.detail]


class Node:
    def __init__(self, coord: TorusCoord, sc: FaultScenario, rng: random.Random):
        self.coord = coord
        self.id = str(coord)
        wd = sc.watchdog
        self.bank = RegisterBank(timer=wd, thresholds=sc.thresholds, mask=sc.mask, emulation=sc.emulation)
        self.dfm = DnpFaultManager(self.bank, self.id, write_phase=rng.randrange(wd.t_write_us),
                                   read_phase=rng.randrange(wd.t_read_us),
                                   sick_sets_neighbour=sc.sick_sets_neighbour)
        self.hfm = HostFaultManager(self.bank, self.id, write_phase=rng.randrange(wd.t_write_us),
                                    read_phase=rng.randrange(wd.t_read_us), snet_timeout_us=sc.ping_timeout_us)
        self.ping_phase = rng.randrange(sc.ping_timeout_us)
        self.host_alive = True
        self.dnp_alive = True
        self.snet_alive = True
        self.snet_loss = 0.0
        self.ring = CommandRing()
        self.pong_seen = False
        self.pings = 0
        self.gen = {"dfm": 0, "hfm": 0, "ping": 0}
        self.probes: Dict[str, Status] = {}
        self.readings: Dict[str, float] = sc.thresholds.nominal()

    @property
    def snet_up(self) -> bool:
        return self.host_alive and self.snet_alive


class World:
    def __init__(self, scenario: FaultScenario, seed: Optional[int] = None):
        self.scenario = sc = scenario.validate()
        if seed is None:
            seed = sc.seed if sc.seed is not None else DEFAULT_SEED
        self.seed = seed
        self.rng = random.Random(seed)
        self.torus = Torus(sc.dims)
        self.nodes: Dict[TorusCoord, Node] = {c: Node(c, sc, self.rng) for c in self.torus.nodes()}
        self.cables: Dict[tuple, Status] = {}
        self.credit_lost: Dict[tuple, int] = {}
        grace = 2 * sc.watchdog.t_read_us + sc.snet_delay_us
        self.views = {m: SupervisorView(m, self.torus, grace) for m in sc.masters}
        self.now = 0
        self._q: list = []
        self._seq = 0
        self.trace: List[TraceRecord] = []
        self.findings: List[Finding] = []
        self.injections: List[FaultEvent] = []
        self.counts: Counter = Counter()
        self.processed = 0
        self._dead_reported: set = set()
        for ev in sc.events:
            self._push(ev.time_us, PRIO_INJECT, "inject", ev.target, ev)
        for c, n in self.nodes.items():
            self._schedule_dfm(n)
            self._schedule_hfm(n)
            self._push(n.ping_phase, PRIO_TIMER, "snet_ping", c, n.gen["ping"])

    # queue

    def _push(self, t: int, prio: int, kind: str, node: TorusCoord, payload=None) -> None:
        self._seq += 1
        heapq.heappush(self._q, (t, prio, self._seq, kind, node, payload))

    def _schedule_dfm(self, n: Node) -> None:
        self._push(n.dfm.next_due(), PRIO_TIMER, "dfm_tick", n.coord, n.gen["dfm"])

    def _schedule_hfm(self, n: Node) -> None:
        self._push(n.hfm.next_due(), PRIO_TIMER, "hfm_tick", n.coord, n.gen["hfm"])

    def _record(self, node: TorusCoord | str, kind: str, detail: str = "") -> None:
        self.trace.append(TraceRecord(self.now, str(node), kind, detail))
        self.counts[kind] += 1

    def _finding(self, f: Finding) -> None:
        self.findings.append(f)
        where = f" dir={f.direction.label}" if f.direction is not None else ""
        self._record(f.node, "finding", f"{f.detector} {f.fault_class.label}={f.status.name}{where} path={f.path}")

    # main loop

    def step(self) -> bool:
        """Process one event; False once the queue is drained or past the horizon."""
        while self._q:
            t, _, _, kind, coord, payload = heapq.heappop(self._q)
            if t > self.scenario.duration_us:
                self._q.clear()
                return False
            self.now = t
            if getattr(self, "_on_" + kind)(self.nodes[coord], payload) is not False:
                self.processed += 1
                return True
        return False

    def run(self) -> "World":
        while self.step():
            pass
        return self

    # timers

    def _on_dfm_tick(self, n: Node, gen) -> bool:
        if gen != n.gen["dfm"] or not n.dnp_alive:
            return False
        counters = None
        if self.now >= n.dfm.next_write:
            counters = {d: self._link_counters(n, d) for d in Direction}
        out = n.dfm.tick(self.now, n.readings, counters)
        parts = []
        if out.dwr is not None:
            parts.append(f"dwr={format_word(out.dwr)}")
        if out.ldm is not None:
            parts.append(f"ldm={format_word(out.ldm.to_word())}")
        self._record(n.coord, "dfm_tick", " ".join(parts) or "read")
        for f in out.findings:
            self._finding(f)
        if out.ldm is not None:
            self._broadcast_ldm(n, out.ldm)
        self._schedule_dfm(n)
        return True

    def _on_hfm_tick(self, n: Node, gen) -> bool:
        if gen != n.gen["hfm"] or not n.host_alive:
            return False
        probes = {}
        if self.now >= n.hfm.next_write:
            # probe results are sampled by the next HWR write
            probes, n.probes = n.probes, {}
        out = n.hfm.tick(self.now, probes)
        detail = f"hwr={format_word(out.hwr)}" if out.hwr is not None else "read"
        if out.outbox:
            detail += f" diags={len(out.outbox)}" + ("" if n.snet_alive else " dropped")
        self._record(n.coord, "hfm_tick", detail)
        for f in out.findings:
            self._finding(f)
        for diag in out.outbox:
            self._snet_send(n, "diag_rx", diag)
        self._schedule_hfm(n)
        return True

    def _on_snet_ping(self, n: Node, gen) -> bool:
        if gen != n.gen["ping"] or not n.host_alive:
            return False
        state = None
        if n.pings:
            state = n.hfm.snet_step(self.now, n.pong_seen)
        n.pong_seen = False
        n.pings += 1
        self._record(n.coord, "snet_ping", "" if state is None else state.value)
        self._snet_send(n, "ping_rx", None)
        self._push(self.now + self.scenario.ping_timeout_us, PRIO_TIMER, "snet_ping", n.coord, gen)
        return True

    # service network

    def _snet_lost(self, n: Node) -> bool:
        if not n.snet_up:
            return True
        return n.snet_loss > 0 and self.rng.random() < n.snet_loss

    def _snet_send(self, src: Node, kind: str, payload) -> None:
        if not src.snet_up:
            return
        for m in self.scenario.masters:
            if not self._snet_lost(src):
                self._push(self.now + self.scenario.snet_delay_us, PRIO_DELIVERY, kind, m, (src.coord, payload))

    def _on_ping_rx(self, master: Node, payload) -> bool:
        src, _ = payload
        if not master.snet_up:
            self._record(master.coord, "ping_drop", f"from={src}")
            return True
        self.views[master.coord].hear(self.now, src, "ping")
        self._record(master.coord, "ping_rx", f"from={src}")
        if not self._snet_lost(master):
            self._push(self.now + self.scenario.snet_delay_us, PRIO_DELIVERY, "pong_rx", src, master.coord)
        return True

    def _on_pong_rx(self, n: Node, master) -> bool:
        if not n.snet_up:
            self._record(n.coord, "pong_drop", f"from={master}")
            return True
        n.pong_seen = True
        self._record(n.coord, "pong_rx", f"from={master}")
        return True

    def _on_diag_rx(self, master: Node, payload) -> bool:
        src, diag = payload
        if not master.snet_up:
            self._record(master.coord, "diag_drop", f"from={src} {diag.describe()}")
            return True
        view = self.views[master.coord]
        rec, suspect = view.receive(self.now, src, diag)
        detail = f"from={src} {diag.describe()}"
        if rec is not None:
            detail += f" aware={rec.node}:{rec.fault_class.label}={rec.status.name} path={rec.path}"
        self._record(master.coord, "diag_rx", detail)
        if suspect is not None:
            self._push(self.now + view.grace_us, PRIO_CHECK, "infer_check", master.coord, suspect)
        if not self._snet_lost(master):
            self._push(self.now + self.scenario.snet_delay_us, PRIO_DELIVERY, "ack_rx", src,
                       (master.coord, diag.seq))
        return True

    def _on_ack_rx(self, n: Node, payload) -> bool:
        master, seq = payload
        if not n.snet_up:
            self._record(n.coord, "ack_drop", f"from={master} seq={seq}")
            return True
        n.hfm.ack(seq)
        self._record(n.coord, "ack_rx", f"from={master} seq={seq}")
        return True

    def _on_infer_check(self, master: Node, suspect: TorusCoord) -> bool:
        rec = self.views[master.coord].check_dead(self.now, suspect)
        self._record(master.coord, "infer_check", f"node={suspect} dead={rec is not None}")
        if rec is not None and suspect not in self._dead_reported:
            self._dead_reported.add(suspect)
            self._finding(make_finding(self.now, str(suspect), FaultClass.NODE_DEAD, Status.BROKEN))
        return True

    # torus links

    def _cable(self, c: TorusCoord, d: Direction) -> Status:
        return self.cables.get(self.torus.cable_key(c, d), Status.NORMAL)

    def _credits_flow(self, c: TorusCoord, d: Direction) -> bool:
        peer, _ = self.torus.peer_port(c, d)
        return self._cable(c, d) is not Status.BROKEN and self.nodes[peer].dnp_alive

    def _refresh_credit_state(self) -> None:
        for c in self.nodes:
            for d in Direction:
                if self._credits_flow(c, d):
                    self.credit_lost.pop((c, d), None)
                else:
                    self.credit_lost.setdefault((c, d), self.now)

    def _link_counters(self, n: Node, d: Direction) -> LinkCounters:
        lost = self.credit_lost.get((n.coord, d))
        if lost is not None:
            return LinkCounters(credit_timeout=self.now - lost >= self.scenario.credit_timeout_us)
        packets = self.scenario.packets_per_tick
        errors = 0
        if self._cable(n.coord, d) is Status.SICK:
            p = self.scenario.link_error_rate
            errors = sum(1 for _ in range(packets) if self.rng.random() < p)
        return LinkCounters(errors, packets, packets * 4096)

    def _broadcast_ldm(self, n: Node, ldm) -> None:
        for d in Direction:
            if self._cable(n.coord, d) is Status.BROKEN:
                continue
            peer, peer_dir = self.torus.peer_port(n.coord, d)
            credit = embed_ldm(ldm, make_credit(0))
            self._push(self.now + self.scenario.ldm_delay_us, PRIO_DELIVERY, "ldm_rx", peer,
                       (n.coord, peer_dir, credit))

    def _on_ldm_rx(self, n: Node, payload) -> bool:
        src, port, credit = payload
        if not n.dnp_alive:
            self._record(n.coord, "ldm_drop", f"from={src} port={port.label}")
            return True
        ldm = extract_ldm(credit)
        n.dfm.apply_remote_ldm(port, ldm)
        self._record(n.coord, "ldm_rx", f"from={src} port={port.label} ldm={format_word(ldm.to_word())}")
        return True

    # fault injection

    def _on_inject(self, n: Node, ev: FaultEvent) -> bool:
        self.inject_fault(ev, n)
        return True

    def inject_fault(self, ev: FaultEvent, n: Optional[Node] = None) -> None:
        n = n or self.nodes.get(ev.target)
        if n is None:
            raise UnknownTarget(f"no node {ev.target}")
        self.injections.append(ev)
        log.debug("t=%d inject %s at %s", self.now, ev.describe(), ev.target)
        self._record(n.coord, "inject", f"{ev.describe()} t={ev.time_us}")
        comp, kind = ev.component, ev.kind
        level = {FaultKind.BREAK: Status.BROKEN, FaultKind.SICK: Status.SICK, FaultKind.RESTORE: Status.NORMAL}[kind]
        if comp in ("host", "node"):
            if kind is FaultKind.BREAK:
                self._kill_host(n)
            elif kind is FaultKind.SICK:
                n.probes["memory"] = Status.SICK
            else:
                n.probes["memory"] = Status.NORMAL
                self._revive_host(n)
        if comp in ("dnp", "node"):
            if kind is FaultKind.BREAK:
                self._kill_dnp(n)
            elif kind is FaultKind.SICK:
                n.dfm.core_probe = Status.SICK
            else:
                n.dfm.core_probe = Status.NORMAL
                self._revive_dnp(n)
            self._dead_reported.discard(n.coord)
        if comp == "snet_iface":
            n.snet_alive = kind is not FaultKind.BREAK
            n.snet_loss = 0.5 if kind is FaultKind.SICK else 0.0
        elif comp in ("host_memory", "host_peripheral"):
            n.probes[comp.split("_", 1)[1]] = level
        elif comp == "dnp_core":
            n.dfm.core_probe = level
        elif comp in ("temperature", "voltage", "current"):
            t = self.scenario.thresholds.metrics[comp]
            n.readings[comp] = {
                Status.NORMAL: t.nominal,
                Status.SICK: (t.warning_high + t.alarm_high) / 2,
                Status.BROKEN: t.alarm_high + (t.alarm_high - t.warning_high),
            }[level]
        elif ev.direction is not None:
            key = self.torus.cable_key(n.coord, ev.direction)
            if level is Status.NORMAL:
                self.cables.pop(key, None)
            else:
                self.cables[key] = level
        self._refresh_credit_state()
        master_view = self.views.get(n.coord)
        if master_view is not None:
            master_view.frozen = not n.host_alive

    def _kill_host(self, n: Node) -> None:
        n.host_alive = False
        n.gen["hfm"] += 1
        n.gen["ping"] += 1

    def _revive_host(self, n: Node) -> None:
        if n.host_alive:
            return
        n.host_alive = True
        n.hfm.next_write = self.now
        n.hfm.next_read = self.now + self.scenario.watchdog.t_read_us
        self._schedule_hfm(n)
        n.pings = 0
        self._push(self.now, PRIO_TIMER, "snet_ping", n.coord, n.gen["ping"])

    def _kill_dnp(self, n: Node) -> None:
        n.dnp_alive = False
        n.gen["dfm"] += 1

    def _revive_dnp(self, n: Node) -> None:
        if n.dnp_alive:
            return
        n.dnp_alive = True
        n.dfm.next_write = self.now
        n.dfm.next_read = self.now + self.scenario.watchdog.t_read_us
        self._schedule_dfm(n)


def build_world(scenario: FaultScenario, seed: Optional[int] = None) -> World:
    return World(scenario, seed)


def run_scenario(scenario: FaultScenario, seed: Optional[int] = None) -> World:
    return World(scenario, seed).run()
