"""Fault classes with the component that detects them, where the diagnostic
lands and how it climbs to the supervisor."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..wire import Direction, Status

SERVICE_NET = "ServiceNet"
LIFAMA_3D = "LiFaMa3D"


class FaultClass(Enum):
    # value: (mask bit, detector, storage, path)
    LINK_SICK = (0, "LinkSelfTest->DFM", "DWR", SERVICE_NET)
    LINK_BROKEN = (1, "DFM", "DWR", SERVICE_NET)
    TEMPERATURE = (2, "Sensors->DFM", "DWR", SERVICE_NET)
    VOLTAGE = (3, "Sensors->DFM", "DWR", SERVICE_NET)
    CURRENT = (4, "Sensors->DFM", "DWR", SERVICE_NET)
    DNP_CORE_SICK = (5, "DFM", "DWR", SERVICE_NET)
    DNP_MELTDOWN = (6, "HFM", "DWR.valid", SERVICE_NET)
    HOST_MEMORY = (7, "HFM", "HWR", SERVICE_NET)
    HOST_PERIPHERAL = (8, "HFM", "HWR", SERVICE_NET)
    HOST_SNET = (9, "HFM", "HWR", LIFAMA_3D)
    HOST_BREAKDOWN = (10, "DFM", "HWR.valid", LIFAMA_3D)
    NODE_DEAD = (11, "Supervisor", "neighbour DWR", "inferred-dead")

    @property
    def bit(self) -> int:
        return self.value[0]

    @property
    def detector(self) -> str:
        return self.value[1]

    @property
    def storage(self) -> str:
        return self.value[2]

    @property
    def path(self) -> str:
        return self.value[3]

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "FaultClass":
        return cls[text.strip().upper()]


ALL_CLASSES_MASK = (1 << len(FaultClass)) - 1
DEFAULT_MASK = 0xFFFFFFFF   # every class signalled


def unmasked(mask: int, cls: FaultClass) -> bool:
    return bool(mask >> cls.bit & 1)


def mask_without(*classes: FaultClass, base: int = DEFAULT_MASK) -> int:
    for c in classes:
        base &= ~(1 << c.bit)
    return base


def link_class(status: Status) -> FaultClass:
    return FaultClass.LINK_BROKEN if status is Status.BROKEN else FaultClass.LINK_SICK


SENSOR_CLASSES = {
    "temperature": FaultClass.TEMPERATURE,
    "voltage": FaultClass.VOLTAGE,
    "current": FaultClass.CURRENT,
}

HOST_FIELD_CLASSES = {
    "service_net": FaultClass.HOST_SNET,
    "memory": FaultClass.HOST_MEMORY,
    "peripheral": FaultClass.HOST_PERIPHERAL,
}


@dataclass(frozen=True)
class Finding:
    """A local detection, as written to the findings trace."""

    time: int                      # us
    node: str
    detector: str
    fault_class: FaultClass
    status: Status
    path: str
    storage: str = ""
    direction: Optional[Direction] = None

    def as_row(self) -> list:
        cls = self.fault_class.label
        if self.direction is not None:
            cls = f"{cls}:{self.direction.label}"
        return [self.time, self.node, self.detector, cls, self.status.name, self.path]


FINDINGS_HEADER = ["time", "node", "detector", "fault_class", "status", "path"]


def make_finding(time: int, node: str, cls: FaultClass, status: Status,
                 direction: Optional[Direction] = None, path: Optional[str] = None) -> Finding:
    return Finding(time, node, cls.detector, cls, status, path or cls.path, cls.storage, direction)


@dataclass(frozen=True)
class Diagnostic:
    """Message an HFM sends to the supervisor over the service network."""

    seq: int
    origin: str
    fault_class: FaultClass
    status: Status
    time: int
    direction: Optional[Direction] = None   # set for faults seen on a neighbour
    relayed: bool = False                   # learnt through an LDM

    @property
    def key(self) -> tuple:
        return (self.fault_class, self.direction)

    @property
    def path(self) -> str:
        return LIFAMA_3D if self.relayed else SERVICE_NET

    def describe(self) -> str:
        where = f" dir={self.direction.label}" if self.direction is not None else ""
        via = " relayed" if self.relayed else ""
        return f"seq={self.seq} {self.fault_class.label}={self.status.name}{where}{via}"
