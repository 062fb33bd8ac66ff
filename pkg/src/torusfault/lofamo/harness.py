"""Lock-step harness that drives one DFM/HFM pair on a shared register bank
with explicit clock phases, used to check the watchdog liveness property."""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from typing import Optional

from ..wire import Status
from .bank import RegisterBank
from .config import WatchdogConfig
from .dfm import DnpFaultManager
from .hfm import HostFaultManager
from .taxonomy import FaultClass


@dataclass
class PairStats:
    reads: int = 0
    missed_reads: int = 0
    declarations: int = 0      # host or DNP declared broken
    writes: int = 0
    ticks: int = 0             # simulated time units covered
    first_declaration: Optional[int] = None   # us

    def add(self, other: "PairStats") -> "PairStats":
        for f in ("reads", "missed_reads", "declarations", "writes", "ticks"):
            setattr(self, f, getattr(self, f) + getattr(other, f))
        return self


def run_watchdog_pair(config: WatchdogConfig, dfm_phase: int = 0, hfm_phase: int = 0,
                      horizon: int = 100, jitter: int = 0, seed: int = 0,
                      unit_us: int = 1000, stop_host_at: int | None = None) -> PairStats:
    """Run both managers for ``horizon`` units (1 unit = ``unit_us``).

    Phases are in units. Each write lands ``randint(0, jitter)`` microseconds
    late; reads stay on their grid. ``stop_host_at`` silences the HFM from
    that unit on, for detection deadline checks.
    """
    if jitter and jitter >= (config.t_read_us - config.t_write_us):
        raise ValueError("jitter must stay below t_read - t_write")
    rng = random.Random(seed)
    bank = RegisterBank(timer=config)
    dfm = DnpFaultManager(bank, "dnp")
    hfm = HostFaultManager(bank, "host")
    end = horizon * unit_us
    stop = None if stop_host_at is None else stop_host_at * unit_us
    tw, tr = config.t_write_us, config.t_read_us
    # (time, order, kind, k)
    q = []
    for who, phase in (("dfm", dfm_phase), ("hfm", hfm_phase)):
        base = phase * unit_us
        heapq.heappush(q, (base + (rng.randint(0, jitter) if jitter else 0), 0, who, "write", 0))
        heapq.heappush(q, (base + tr, 1, who, "read", 1))
    stats = PairStats(ticks=horizon)
    while q:
        t, order, who, kind, k = heapq.heappop(q)
        if t > end:
            continue
        mgr = dfm if who == "dfm" else hfm
        if who == "hfm" and stop is not None and t >= stop:
            continue
        if kind == "write":
            out = mgr.write(t)
            stats.writes += 1
            nxt = (dfm_phase if who == "dfm" else hfm_phase) * unit_us + (k + 1) * tw
            heapq.heappush(q, (nxt + (rng.randint(0, jitter) if jitter else 0), 0, who, "write", k + 1))
        else:
            out = mgr.read(t)
            stats.reads += 1
            heapq.heappush(q, ((dfm_phase if who == "dfm" else hfm_phase) * unit_us + (k + 1) * tr,
                               1, who, "read", k + 1))
        for f in out.findings:
            if f.status is Status.BROKEN and f.fault_class in (FaultClass.HOST_BREAKDOWN, FaultClass.DNP_MELTDOWN):
                stats.declarations += 1
                if stats.first_declaration is None:
                    stats.first_declaration = t
    stats.missed_reads = dfm.missed_reads + hfm.missed_reads
    return stats


def liveness_sweep(max_write: int = 10, max_read: int = 20, horizon: int = 100,
                   jitter: bool = False, seed: int = 0) -> PairStats:
    """All t_write < t_read pairs, all integer phase offsets of both clocks."""
    total = PairStats()
    rng = random.Random(seed)
    for tw in range(1, max_write + 1):
        for tr in range(tw + 1, max_read + 1):
            cfg = WatchdogConfig(tw, tr)
            j = (tr - tw) * 1000 - 1 if jitter else 0
            for dp in range(tr):
                for hp in range(tw):
                    total.add(run_watchdog_pair(cfg, dp, hp, horizon, j, rng.getrandbits(32)))
    return total
