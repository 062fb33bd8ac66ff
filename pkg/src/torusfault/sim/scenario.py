"""Declarative fault scenarios (JSON) and their validation."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, List, Optional, Tuple

from ..lofamo import DEFAULT_MASK, FaultClass, PING_TIMEOUT_US, SensorThresholds, WatchdogConfig
from ..lofamo.config import ConfigError
from ..wire import Direction
from .topology import BadDims, Torus, TorusCoord

MS = 1000
BASIC_COMPONENTS = ("host", "dnp", "node", "snet_iface", "host_memory", "host_peripheral",
                    "dnp_core", "temperature", "voltage", "current")


class ParseError(ValueError):
    def __init__(self, msg: str, line: Optional[int] = None, field: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{msg} ({', '.join(where)})" if where else msg)
        self.msg = msg
        self.line = line
        self.field = field


class ValidationError(ValueError):
    pass


class UnknownTarget(ValidationError):
    pass


class FaultKind(Enum):
    BREAK = "break"
    SICK = "sick"
    RESTORE = "restore"


_CLASS_FOR = {
    ("host", FaultKind.BREAK): [FaultClass.HOST_BREAKDOWN],
    ("host", FaultKind.SICK): [FaultClass.HOST_MEMORY],
    ("dnp", FaultKind.BREAK): [FaultClass.DNP_MELTDOWN],
    ("dnp", FaultKind.SICK): [FaultClass.DNP_CORE_SICK],
    ("node", FaultKind.BREAK): [FaultClass.NODE_DEAD],
    ("node", FaultKind.SICK): [FaultClass.HOST_MEMORY, FaultClass.DNP_CORE_SICK],
    ("snet_iface", FaultKind.BREAK): [FaultClass.HOST_SNET],
    ("snet_iface", FaultKind.SICK): [],
    ("host_memory", None): [FaultClass.HOST_MEMORY],
    ("host_peripheral", None): [FaultClass.HOST_PERIPHERAL],
    ("dnp_core", None): [FaultClass.DNP_CORE_SICK],
    ("temperature", None): [FaultClass.TEMPERATURE],
    ("voltage", None): [FaultClass.VOLTAGE],
    ("current", None): [FaultClass.CURRENT],
}


def parse_component(text: str) -> str:
    text = text.strip().lower()
    if text == "snet":
        text = "snet_iface"
    if text.startswith("link:"):
        Direction.parse(text[5:].strip().upper())
        return "link:" + text[5:].strip().upper()
    if text not in BASIC_COMPONENTS:
        raise ValueError(f"unknown component {text!r}")
    return text


@dataclass(frozen=True)
class FaultEvent:
    time_us: int
    target: TorusCoord
    component: str
    kind: FaultKind

    @property
    def direction(self) -> Optional[Direction]:
        if self.component.startswith("link:"):
            return Direction.parse(self.component[5:])
        return None

    def expected_classes(self) -> List[FaultClass]:
        """Fault classes this injection should make the supervisor aware of."""
        if self.kind is FaultKind.RESTORE:
            return []
        if self.direction is not None:
            return [FaultClass.LINK_BROKEN if self.kind is FaultKind.BREAK else FaultClass.LINK_SICK]
        return list(_CLASS_FOR.get((self.component, self.kind)) or _CLASS_FOR.get((self.component, None), []))

    def describe(self) -> str:
        return f"{self.kind.value} {self.component}"


@dataclass(frozen=True)
class Assertion:
    kind: str                                   # aware | never_aware | inferred_dead | findings
    node: Optional[TorusCoord] = None
    fault_class: Optional[FaultClass] = None
    within_ms: Optional[float] = None
    count: Optional[int] = None


@dataclass
class FaultScenario:
    dims: Tuple[int, int, int] = (2, 2, 2)
    masters: Tuple[TorusCoord, ...] = (TorusCoord(0, 0, 0),)
    duration_us: int = 1000 * MS
    events: List[FaultEvent] = field(default_factory=list)
    watchdog: WatchdogConfig = field(default_factory=WatchdogConfig)
    thresholds: SensorThresholds = field(default_factory=SensorThresholds)
    snet_delay_us: int = 1 * MS
    ping_timeout_us: int = PING_TIMEOUT_US
    ldm_delay_us: int = 1
    credit_timeout_us: int = 1 * MS
    mask: int = DEFAULT_MASK
    emulation: int = 0
    sick_sets_neighbour: bool = False
    link_error_rate: float = 0.3
    packets_per_tick: int = 100
    seed: Optional[int] = None
    name: str = "scenario"
    assertions: List[Assertion] = field(default_factory=list)

    @property
    def master(self) -> TorusCoord:
        return self.masters[0]

    def validate(self) -> "FaultScenario":
        try:
            torus = Torus(self.dims)
        except BadDims as e:
            raise ValidationError(str(e)) from e
        if not self.masters:
            raise ValidationError("at least one master is required")
        for m in self.masters:
            if m not in torus:
                raise UnknownTarget(f"master {m} is outside dims {self.dims}")
        if self.duration_us <= 0:
            raise ValidationError("duration must be positive")
        last = -1
        for ev in self.events:
            if ev.time_us < 0:
                raise ValidationError("event times must be non-negative")
            if ev.time_us < last:
                raise ValidationError("events must be time-ordered")
            last = ev.time_us
            if ev.target not in torus:
                raise UnknownTarget(f"event target {ev.target} is outside dims {self.dims}")
        for a in self.assertions:
            if a.node is not None and a.node not in torus:
                raise UnknownTarget(f"assertion node {a.node} is outside dims {self.dims}")
        if not 0 <= self.link_error_rate <= 1:
            raise ValidationError("link_error_rate must be in [0, 1]")
        return self


# --- JSON loading ---------------------------------------------------------

def _time_us(obj: dict, stem: str, where: str, default: Optional[int] = None) -> int:
    if f"{stem}_us" in obj:
        return int(obj[f"{stem}_us"])
    if f"{stem}_ms" in obj:
        return round(float(obj[f"{stem}_ms"]) * MS)
    if f"{stem}_s" in obj:
        return round(float(obj[f"{stem}_s"]) * 1_000_000)
    if default is None:
        raise ParseError(f"missing {stem}_ms", field=f"{where}{stem}_ms")
    return default


def _coord(value: Any, where: str) -> TorusCoord:
    try:
        return TorusCoord.parse(value)
    except (TypeError, ValueError) as e:
        raise ParseError(f"bad coordinate {value!r}", field=where) from e


def _mask(value: Any) -> int:
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        return int(value, 0)
    raise ParseError("mask must be an integer or hex string", field="mask")


def scenario_from_dict(data: dict, name: str = "scenario") -> FaultScenario:
    if not isinstance(data, dict):
        raise ParseError("scenario must be a JSON object")
    known = {"name", "dims", "master", "masters", "duration_ms", "duration_us", "duration_s", "seed",
             "watchdog", "thresholds", "snet", "ldm_delay_us", "credit_timeout_ms", "credit_timeout_us",
             "mask", "masked", "emulation", "sick_sets_neighbour", "link_error_rate",
             "packets_per_tick", "events", "assertions"}
    for k in data:
        if k not in known:
            raise ParseError(f"unknown key {k!r}", field=k)
    sc = FaultScenario(name=str(data.get("name", name)))
    if "dims" in data:
        dims = data["dims"]
        if not isinstance(dims, list) or len(dims) != 3 or not all(isinstance(v, int) for v in dims):
            raise ParseError("dims must be a list of three integers", field="dims")
        sc.dims = tuple(dims)
    if "masters" in data:
        sc.masters = tuple(_coord(m, f"masters[{i}]") for i, m in enumerate(data["masters"]))
    elif "master" in data:
        sc.masters = (_coord(data["master"], "master"),)
    sc.duration_us = _time_us(data, "duration", "", default=sc.duration_us)
    if "seed" in data:
        sc.seed = int(data["seed"])
    wd = data.get("watchdog", {})
    try:
        sc.watchdog = WatchdogConfig(int(wd.get("t_write_ms", 10)), int(wd.get("t_read_ms", 20)))
        if "thresholds" in data:
            sc.thresholds = SensorThresholds.from_dict(data["thresholds"])
    except ConfigError as e:
        raise ValidationError(str(e)) from e
    snet = data.get("snet", {})
    sc.snet_delay_us = _time_us(snet, "delay", "snet.", default=sc.snet_delay_us)
    sc.ping_timeout_us = _time_us(snet, "ping_timeout", "snet.", default=sc.ping_timeout_us)
    sc.ldm_delay_us = int(data.get("ldm_delay_us", sc.ldm_delay_us))
    sc.credit_timeout_us = _time_us(data, "credit_timeout", "", default=sc.credit_timeout_us)
    if "mask" in data:
        sc.mask = _mask(data["mask"])
    for cls_name in data.get("masked", []):
        try:
            sc.mask &= ~(1 << FaultClass.parse(cls_name).bit)
        except KeyError as e:
            raise ParseError(f"unknown fault class {cls_name!r}", field="masked") from e
    if "emulation" in data:
        sc.emulation = _mask(data["emulation"])
    sc.sick_sets_neighbour = bool(data.get("sick_sets_neighbour", False))
    sc.link_error_rate = float(data.get("link_error_rate", sc.link_error_rate))
    sc.packets_per_tick = int(data.get("packets_per_tick", sc.packets_per_tick))
    for i, ev in enumerate(data.get("events", [])):
        where = f"events[{i}]."
        for key in ("node", "component", "kind"):
            if key not in ev:
                raise ParseError(f"missing {key}", field=where + key)
        try:
            comp = parse_component(ev["component"])
        except ValueError as e:
            raise ParseError(str(e), field=where + "component") from e
        try:
            kind = FaultKind(str(ev["kind"]).lower())
        except ValueError as e:
            raise ParseError(f"unknown kind {ev['kind']!r}", field=where + "kind") from e
        sc.events.append(FaultEvent(_time_us(ev, "time", where), _coord(ev.get("node"), where + "node"),
                                    comp, kind))
    for i, a in enumerate(data.get("assertions", [])):
        where = f"assertions[{i}]."
        kind = a.get("type")
        if kind not in ("aware", "never_aware", "inferred_dead", "findings"):
            raise ParseError(f"unknown assertion type {kind!r}", field=where + "type")
        try:
            cls = FaultClass.parse(a["fault_class"]) if "fault_class" in a else None
        except KeyError as e:
            raise ParseError(f"unknown fault class {a['fault_class']!r}", field=where + "fault_class") from e
        node = _coord(a["node"], where + "node") if "node" in a else None
        sc.assertions.append(Assertion(kind, node, cls, a.get("within_ms"), a.get("count")))
    return sc.validate()


def parse_scenario(text: str, name: str = "scenario") -> FaultScenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno) from e
    try:
        return scenario_from_dict(data, name)
    except ParseError as e:
        if e.line is None and e.field:
            key = e.field.rsplit(".", 1)[-1].split("[")[0]
            m = re.match(r"\w+\[(\d+)\]", e.field)
            skip = int(m.group(1)) if m else 0
            for n, line in enumerate(text.splitlines(), 1):
                if f'"{key}"' in line:
                    if skip == 0:
                        raise ParseError(e.msg, line=n, field=e.field) from e
                    skip -= 1
        raise


def load_scenario(path: str | Path) -> FaultScenario:
    p = Path(path)
    return parse_scenario(p.read_text(), name=p.stem)
