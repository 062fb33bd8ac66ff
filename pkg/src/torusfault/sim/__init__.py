"""Discrete-event simulation of a LO|FA|MO torus with a master-node supervisor."""

from .latency import (
    LATENCY_HEADER,
    AwarenessRecord,
    FaultNeverDetected,
    awareness_latency,
    check_assertions,
    latency_csv,
    never_detected,
    summary_line,
)
from .ring import CommandRing, RingFull
from .scenario import (
    Assertion,
    FaultEvent,
    FaultKind,
    FaultScenario,
    ParseError,
    UnknownTarget,
    ValidationError,
    load_scenario,
    parse_component,
    parse_scenario,
    scenario_from_dict,
)
from .supervisor import (
    PATH_DIRECT,
    PATH_INFERRED,
    PATH_RELAY,
    PATH_SNET_WATCHDOG,
    AwareRecord,
    SupervisorView,
    awareness_path,
    supervisor_collect,
)
from .topology import BadDims, Torus, TorusCoord, build_torus
from .world import DEFAULT_SEED, TRACE_HEADER, Node, TraceRecord, World, build_world, run_scenario
from .trace import FORMATS, findings_text, trace_text

__all__ = [name for name in dir() if not name.startswith("_")]
