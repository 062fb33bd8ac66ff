"""Watchdog timing and sensor thresholds."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

from ..wire import Status

MS = 1000   # us per ms
TIMER_MIN_MS, TIMER_MAX_MS = 1, 65_000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WatchdogConfig:
    """Write/read periods in ms; the writer must be faster than the reader."""

    t_write_ms: int = 10
    t_read_ms: int = 20

    def __post_init__(self):
        for name in ("t_write_ms", "t_read_ms"):
            v = getattr(self, name)
            if not isinstance(v, int) or not TIMER_MIN_MS <= v <= TIMER_MAX_MS:
                raise ConfigError(f"{name}={v!r} must be an integer in {TIMER_MIN_MS}..{TIMER_MAX_MS} ms")
        if self.t_write_ms >= self.t_read_ms:
            raise ConfigError("t_write < t_read is required")

    @property
    def t_write_us(self) -> int:
        return self.t_write_ms * MS

    @property
    def t_read_us(self) -> int:
        return self.t_read_ms * MS

    def to_word(self) -> int:
        """Timer register image: t_write in the low half, t_read in the high half."""
        return self.t_write_ms | self.t_read_ms << 16

    @classmethod
    def from_word(cls, word: int) -> "WatchdogConfig":
        return cls(word & 0xFFFF, word >> 16 & 0xFFFF)


@dataclass(frozen=True)
class MetricThresholds:
    alarm_low: float
    warning_low: float
    warning_high: float
    alarm_high: float

    def __post_init__(self):
        if not self.alarm_low < self.warning_low < self.warning_high < self.alarm_high:
            raise ConfigError("need alarm_low < warning_low < warning_high < alarm_high")

    def classify(self, reading: float) -> Status:
        if self.warning_low <= reading <= self.warning_high:
            return Status.NORMAL
        if self.alarm_low <= reading <= self.alarm_high:
            return Status.WARNING
        return Status.ALARM

    @property
    def nominal(self) -> float:
        return (self.warning_low + self.warning_high) / 2


def _defaults() -> Dict[str, MetricThresholds]:
    return {
        "temperature": MetricThresholds(-10.0, 0.0, 70.0, 85.0),   # degC
        "voltage": MetricThresholds(0.85, 0.90, 1.10, 1.15),       # V
        "current": MetricThresholds(0.0, 0.5, 8.0, 10.0),          # A
    }


@dataclass(frozen=True)
class SensorThresholds:
    metrics: Dict[str, MetricThresholds] = field(default_factory=_defaults)

    def classify(self, metric: str, reading: float) -> Status:
        return self.metrics[metric].classify(reading)

    def nominal(self) -> Dict[str, float]:
        return {k: t.nominal for k, t in self.metrics.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "SensorThresholds":
        metrics = _defaults()
        for name, v in data.items():
            if name not in metrics:
                raise ConfigError(f"unknown sensor metric {name!r}")
            metrics[name] = MetricThresholds(**v) if isinstance(v, dict) else MetricThresholds(*v)
        return cls(metrics)


def sensor_classify(thresholds: MetricThresholds, reading: float) -> Status:
    return thresholds.classify(reading)
