"""Analytic model of the torus link credit-based flow control.

Efficiency is the product of three factors:

* ``e1`` protocol overhead, ``S / (P + S)``
* ``e2`` credit stuffing, ``C / (C + 2)``: every ``C`` cycles the link
  spends two cycles on a credit
* ``e3`` stall waiting: after the receive FIFO crosses the red threshold
  the transmitter waits ``W = L_T + C`` cycles for fresh credits

All lengths are in 16-byte words and all latencies in link cycles.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional, Sequence


DEFAULT_RATES_GBPS = (28.0, 34.0)
DEFAULT_DEPTHS = (512, 1024, 2048, 4096)
RED_MARGIN = 6  # words between depth and T_RED (512 deep FIFO -> 506)

SWEEP_HEADER = ["depth", "e3", "e_t", "bw_28gbps_mbs", "bw_34gbps_mbs"]
CURVE_HEADER = ["size_bytes", "host_read_mbs", "bw_28gbps_mbs", "bw_34gbps_mbs"]


class LinkModelError(ValueError):
    pass


class ThresholdTooSmall(LinkModelError):
    pass


class DepthTooSmall(LinkModelError):
    pass


class ZeroMemory(LinkModelError):
    pass


class E3Mode(Enum):
    CTRL_LIMITED = "ctrl"        # only the link controller throttles
    ROUTER_LIMITED = "router"    # router admits whole max-size packets only


@dataclass(frozen=True)
class LinkParams:
    s_max: int = 4096            # bytes
    p_overhead: int = 64         # bytes
    word_bytes: int = 16
    l_r: int = 35                # remote latency, cycles
    l_l: int = 20                # local latency, cycles
    t_red: int = 506             # words
    t_yellow: int = 250          # words
    c_interval: int = 35         # cycles between credits
    fifo_depth: int = 512        # words
    line_rate_gbps: float = 28.0
    encoding_efficiency: float = 0.8

    def __post_init__(self):
        if self.s_max <= 0 or self.word_bytes <= 0 or self.s_max % self.word_bytes:
            raise LinkModelError("s_max must be a positive multiple of word_bytes")
        if self.p_overhead < 0 or self.l_r < 0 or self.l_l < 0:
            raise LinkModelError("overhead and latencies must be non-negative")
        # C=0 is allowed so the degenerate W=0 case can be expressed; e2 is 0 there
        if self.c_interval < 0:
            raise LinkModelError("c_interval must be >= 0")
        if not 0 <= self.t_yellow < self.t_red <= self.fifo_depth:
            raise LinkModelError("need t_yellow < t_red <= fifo_depth")
        if self.line_rate_gbps < 0 or not 0 < self.encoding_efficiency <= 1:
            raise LinkModelError("bad line rate or encoding efficiency")

    @property
    def s_max_words(self) -> int:
        return self.s_max // self.word_bytes

    @classmethod
    def for_depth(cls, depth: int, margin: int = RED_MARGIN, **kw) -> "LinkParams":
        """Params for a FIFO of ``depth`` words with T_RED = depth - margin."""
        t_red = depth - margin
        base = cls(**kw) if kw else cls()
        if t_red < base.s_max_words:
            raise DepthTooSmall(f"depth {depth} leaves T_RED={t_red} < {base.s_max_words} words")
        t_yellow = min(base.t_yellow, t_red - 1)
        return replace(base, fifo_depth=depth, t_red=t_red, t_yellow=t_yellow)


@dataclass(frozen=True)
class EfficiencyReport:
    e1: float
    e2: float
    e3: float
    e_t: float
    w: int
    l_t: int
    bw_l_max: float        # MB/s
    predicted_bw: float    # MB/s
    mode: E3Mode = E3Mode.ROUTER_LIMITED


def efficiency_e1(params: LinkParams) -> float:
    return params.s_max / (params.p_overhead + params.s_max)


def efficiency_e2(params: LinkParams) -> float:
    c = params.c_interval
    return c / (c + 2)


def wait_cycles(params: LinkParams) -> tuple[int, int]:
    """Return ``(l_t, w)``: round-trip latency and total stall wait."""
    l_t = 2 * params.l_r + 2 * params.l_l
    return l_t, l_t + params.c_interval


def packets_admitted(params: LinkParams) -> int:
    """Max-size packets the router lets through before the FIFO stalls."""
    return params.t_red // params.s_max_words


def efficiency_e3(params: LinkParams, mode: E3Mode = E3Mode.ROUTER_LIMITED) -> float:
    _, w = wait_cycles(params)
    if mode is E3Mode.CTRL_LIMITED:
        space = params.t_red
    else:
        n = packets_admitted(params)
        if n < 1:
            raise ThresholdTooSmall(
                f"t_red={params.t_red} words cannot hold one {params.s_max_words}-word packet")
        space = n * params.s_max_words
    if space + w == 0:
        return 1.0
    return space / (space + w)


def bw_link_max(params: LinkParams) -> float:
    """Raw link payload ceiling in MB/s after line encoding."""
    return params.line_rate_gbps * params.encoding_efficiency / 8 * 1000


def total_efficiency(params: LinkParams, mode: E3Mode = E3Mode.ROUTER_LIMITED) -> EfficiencyReport:
    e1, e2, e3 = efficiency_e1(params), efficiency_e2(params), efficiency_e3(params, mode)
    l_t, w = wait_cycles(params)
    e_t = e1 * e2 * e3
    bw = bw_link_max(params)
    return EfficiencyReport(e1, e2, e3, e_t, w, l_t, bw, e_t * bw, mode)


def optimize_credit_interval(params: Optional[LinkParams] = None,
                             c_range: tuple[int, int] = (0, 55),
                             mode: E3Mode = E3Mode.CTRL_LIMITED) -> tuple[int, float]:
    """Integer C in ``c_range`` (inclusive) maximising e_t; ties go to the smaller C."""
    params = params or LinkParams()
    lo, hi = c_range
    if lo > hi:
        raise ValueError("empty c_range")
    best_c, best = lo, -1.0
    for c in range(lo, hi + 1):
        e_t = total_efficiency(replace(params, c_interval=c), mode).e_t
        if e_t > best:
            best_c, best = c, e_t
    return best_c, best


def continuous_credit_optimum(params: Optional[LinkParams] = None) -> float:
    """Stationary point of C/(C+2) * T/(T+L_T+C) in controller-limited mode."""
    params = params or LinkParams()
    l_t, _ = wait_cycles(params)
    return math.sqrt(2 * (params.t_red + l_t))


@dataclass(frozen=True)
class SweepRow:
    depth: int
    e3: float
    e_t: float
    bw: dict = field(default_factory=dict)   # rate Gbps -> MB/s

    def as_csv(self, rates: Sequence[float]) -> list[str]:
        return [str(self.depth), f"{self.e3:.3f}", f"{self.e_t:.3f}"] + [f"{self.bw[r]:.1f}" for r in rates]


def fifo_sweep(depths: Iterable[int] = DEFAULT_DEPTHS,
               rates: Sequence[float] = DEFAULT_RATES_GBPS,
               margin: int = RED_MARGIN,
               base: Optional[LinkParams] = None) -> list[SweepRow]:
    base = base or LinkParams()
    rows = []
    for depth in depths:
        if depth - margin < base.s_max_words:
            raise DepthTooSmall(f"depth {depth} < {base.s_max_words + margin} words")
        t_red = depth - margin
        p = replace(base, fifo_depth=depth, t_red=t_red, t_yellow=min(base.t_yellow, t_red - 1))
        bws = {}
        for r in rates:
            bws[r] = total_efficiency(replace(p, line_rate_gbps=r)).predicted_bw
        rep = total_efficiency(p)
        rows.append(SweepRow(depth, rep.e3, rep.e_t, bws))
    return rows


def rate_column(rate: float) -> str:
    return f"bw_{rate:g}gbps_mbs"


def sweep_csv(rows: Sequence[SweepRow], rates: Sequence[float] = DEFAULT_RATES_GBPS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["depth", "e3", "e_t"] + [rate_column(r) for r in rates])
    for row in rows:
        w.writerow(row.as_csv(rates))
    return buf.getvalue()


# --- host read bandwidth and the predicted curve -------------------------

def _default_host_points() -> list[tuple[int, float]]:
    # latency-bound PCIe read: s / (t0 + s / plateau), t0 = 5 us, plateau 2.8 GB/s
    t0_us, plateau = 5.0, 2800.0
    pts = []
    for k in range(5, 23):  # 32 B .. 4 MB
        s = 1 << k
        pts.append((s, s / (t0_us + s / plateau)))
    return pts


class HostReadCurve:
    """Piecewise curve of host read bandwidth (MB/s) vs message size (bytes),
    interpolated linearly in log2(size) and clamped at the ends."""

    def __init__(self, points: Optional[Sequence[tuple[int, float]]] = None):
        pts = sorted(points if points is not None else _default_host_points())
        if not pts:
            raise ValueError("host read curve needs at least one point")
        if any(s <= 0 or bw < 0 for s, bw in pts):
            raise ValueError("sizes must be positive and bandwidths non-negative")
        self.sizes = [s for s, _ in pts]
        self.bws = [bw for _, bw in pts]

    def __call__(self, size: int) -> float:
        if size <= self.sizes[0]:
            return self.bws[0]
        if size >= self.sizes[-1]:
            return self.bws[-1]
        i = bisect.bisect_right(self.sizes, size)
        s0, s1 = self.sizes[i - 1], self.sizes[i]
        b0, b1 = self.bws[i - 1], self.bws[i]
        t = (math.log2(size) - math.log2(s0)) / (math.log2(s1) - math.log2(s0))
        return b0 + t * (b1 - b0)


def predicted_curve(sizes: Iterable[int], params: Optional[LinkParams] = None,
                    rates: Sequence[float] = DEFAULT_RATES_GBPS,
                    host: Optional[HostReadCurve] = None) -> list[tuple[int, float, dict]]:
    """For each size: (size, host read bw, {rate: min(host, e_t * bw_max)})."""
    params = params or LinkParams()
    host = host or HostReadCurve()
    out = []
    for s in sizes:
        h = host(s)
        caps = {r: total_efficiency(replace(params, line_rate_gbps=r)).predicted_bw for r in rates}
        out.append((s, h, {r: min(h, c) for r, c in caps.items()}))
    return out


def curve_csv(curve, rates: Sequence[float] = DEFAULT_RATES_GBPS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["size_bytes", "host_read_mbs"] + [rate_column(r) for r in rates])
    for size, h, per_rate in curve:
        w.writerow([size, f"{h:.1f}"] + [f"{per_rate[r]:.1f}" for r in rates])
    return buf.getvalue()


# --- memory efficiency metric --------------------------------------------

@dataclass(frozen=True)
class MemoryBlock:
    name: str
    used_mb: float
    peak_mbs: float
    f_real_mhz: float


MEMORY_TABLE = (
    MemoryBlock("TX", 0.105, 2800.0, 250.0),
    MemoryBlock("GPUTX", 0.088, 1500.0, 250.0),
    MemoryBlock("TORUS_LINK", 0.167, 9600.0, 175.0),
    MemoryBlock("NIOS", 0.402, 1200.0, 200.0),
)


def effective_frequency(peak_bw: float, used_mem: float, f_real: float) -> tuple[float, float]:
    """Return ``(f_eff MHz, O)`` for a block.

    ``peak_bw`` in MB/s, ``used_mem`` in MB, ``f_real`` in MHz. The metric is
    bandwidth over memory; the published figures correspond to GB/s per MB
    read as MHz, so f_eff = (peak_bw / 1000) / used_mem.
    """
    if used_mem <= 0:
        raise ZeroMemory("used memory must be positive")
    if f_real <= 0:
        raise ValueError("f_real must be positive")
    f_eff = (peak_bw / 1000.0) / used_mem
    o = f_eff / f_real
    if not 0 <= o <= 1:
        warnings.warn(f"O={o:.3f} outside [0, 1]", RuntimeWarning, stacklevel=2)
    return f_eff, o


# --- GPU prefetch admission ----------------------------------------------

def gpu_admission_check(w_req: int, w_wrt: int, w_new: int, w_free: int,
                        r_sent: int, r_done: int, r_max: int) -> bool:
    """Admit a new GPU read request only if its data fits the TX FIFO and the
    outstanding request window is not exhausted."""
    if min(w_req, w_wrt, w_new, w_free, r_sent, r_done, r_max) < 0:
        raise ValueError("counters must be non-negative")
    if r_done > r_sent:
        raise ValueError("r_done cannot exceed r_sent")
    return (w_req - w_wrt + w_new < w_free) and (r_sent - r_done < r_max)
