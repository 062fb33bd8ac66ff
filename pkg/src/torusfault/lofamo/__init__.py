"""LO|FA|MO fault detection: the DNP and Host fault managers, their shared
register bank, sensor and link health classification, and the
service-network monitor."""

from .bank import Actor, OwnershipViolation, RegisterBank
from .config import ConfigError, MetricThresholds, SensorThresholds, WatchdogConfig, sensor_classify
from .dfm import DfmOutput, DnpFaultManager, InvalidLdm, is_host_breakdown, ldm_classes
from .harness import PairStats, liveness_sweep, run_watchdog_pair
from .health import LinkCounters, LinkHealthState, link_health_update
from .hfm import HfmOutput, HostFaultManager
from .snet import PING_TIMEOUT_US, SnetMonitor, SnetState, snet_monitor_step
from .taxonomy import (
    DEFAULT_MASK,
    FINDINGS_HEADER,
    LIFAMA_3D,
    SERVICE_NET,
    Diagnostic,
    FaultClass,
    Finding,
    mask_without,
    unmasked,
)

__all__ = [name for name in dir() if not name.startswith("_")]
