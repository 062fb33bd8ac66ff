"""Per-direction link health from CRC error ratios and credit timeouts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

from ..wire import Status

MIN_SAMPLE = 100
SICK_RATIO = 0.05


@dataclass(frozen=True)
class LinkCounters:
    """Counter increments since the previous update."""

    crc_errors: int = 0
    packets: int = 0
    bytes: int = 0
    credit_timeout: bool = False


@dataclass
class LinkHealthState:
    sick_ratio_threshold: float = SICK_RATIO
    min_sample: int = MIN_SAMPLE
    crc_errors: int = 0
    packets: int = 0
    bytes: int = 0
    credit_timeout: bool = False
    status: Status = Status.NORMAL
    crc_status: Status = Status.NORMAL
    # current evaluation window
    _win_errors: int = 0
    _win_packets: int = 0
    history: List[tuple] = field(default_factory=list)   # (ratio, status) per evaluated window

    def update(self, delta: LinkCounters) -> Status:
        if min(delta.crc_errors, delta.packets, delta.bytes) < 0:
            raise ValueError("counters are monotone, deltas must be non-negative")
        self.crc_errors += delta.crc_errors
        self.packets += delta.packets
        self.bytes += delta.bytes
        self._win_errors += delta.crc_errors
        self._win_packets += delta.packets
        if self._win_packets >= self.min_sample:
            ratio = self._win_errors / self._win_packets
            self.crc_status = Status.SICK if ratio >= self.sick_ratio_threshold else Status.NORMAL
            self.history.append((ratio, self.crc_status))
            self._win_errors = self._win_packets = 0
        self.credit_timeout = delta.credit_timeout
        self.status = Status.BROKEN if self.credit_timeout else self.crc_status
        return self.status


def link_health_update(state: LinkHealthState, delta: LinkCounters) -> Status:
    return state.update(delta)
