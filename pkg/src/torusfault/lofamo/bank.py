"""The LO|FA|MO register bank shared by the two watchdog peers.

DWR and HWR live in the DNP. Each is written and validated by its owner;
the peer may only clear the valid bit after reading.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ..wire import DnpWatchdogRegister, HostWatchdogRegister, RemoteFaultDescriptor
from .config import SensorThresholds, WatchdogConfig
from .taxonomy import DEFAULT_MASK

VALID = 1


class Actor(Enum):
    DFM = "dfm"
    HFM = "hfm"


class OwnershipViolation(RuntimeError):
    pass


@dataclass
class RegisterBank:
    dwr: int = VALID
    hwr: int = VALID
    rfd: RemoteFaultDescriptor = field(default_factory=RemoteFaultDescriptor)
    mask: int = DEFAULT_MASK
    emulation: int = 0
    timer: WatchdogConfig = field(default_factory=WatchdogConfig)
    thresholds: SensorThresholds = field(default_factory=SensorThresholds)
    transitions: int = 0

    _OWNERS = {"dwr": Actor.DFM, "hwr": Actor.HFM}

    def _store(self, reg: str, word: int, actor: Actor) -> None:
        old = getattr(self, reg)
        if actor is not self._OWNERS[reg] and word != old & ~VALID:
            # the peer may only invalidate
            raise OwnershipViolation(f"{actor.value} may only clear the valid bit of {reg.upper()}")
        setattr(self, reg, word)
        self.transitions += 1

    def write_dwr(self, reg: DnpWatchdogRegister, actor: Actor = Actor.DFM) -> int:
        w = reg.to_word()
        self._store("dwr", w, actor)
        return w

    def write_hwr(self, reg: HostWatchdogRegister, actor: Actor = Actor.HFM) -> int:
        w = reg.to_word()
        self._store("hwr", w, actor)
        return w

    def invalidate_dwr(self, actor: Actor = Actor.HFM) -> None:
        self._store("dwr", self.dwr & ~VALID, actor)

    def invalidate_hwr(self, actor: Actor = Actor.DFM) -> None:
        self._store("hwr", self.hwr & ~VALID, actor)

    def read_dwr(self) -> DnpWatchdogRegister:
        return DnpWatchdogRegister.from_word(self.dwr)

    def read_hwr(self) -> HostWatchdogRegister:
        return HostWatchdogRegister.from_word(self.hwr)
