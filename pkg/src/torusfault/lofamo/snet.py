"""Service-network reachability check run by every HFM."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..wire import Status

PING_TIMEOUT_US = 3_000_000


class SnetState(Enum):
    NORMAL = "normal"
    WAITING_RETRY = "waiting_retry"
    BROKEN = "broken"


@dataclass
class SnetMonitor:
    """A ping goes out every ``timeout_us``. One window without a pong puts
    the monitor in WAITING_RETRY; a second one declares the net broken."""

    timeout_us: int = PING_TIMEOUT_US
    state: SnetState = SnetState.NORMAL
    misses: int = 0
    broken_since: int = -1

    def step(self, now: int, pong_received: bool) -> SnetState:
        if pong_received:
            self.misses = 0
            self.state = SnetState.NORMAL
            self.broken_since = -1
        else:
            self.misses += 1
            if self.misses >= 2:
                if self.state is not SnetState.BROKEN:
                    self.broken_since = now
                self.state = SnetState.BROKEN
            else:
                self.state = SnetState.WAITING_RETRY
        return self.state

    @property
    def status(self) -> Status:
        return Status.BROKEN if self.state is SnetState.BROKEN else Status.NORMAL


def snet_monitor_step(state: SnetMonitor, now: int, pong_received: bool) -> SnetState:
    return state.step(now, pong_received)
