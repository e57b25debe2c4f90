"""Runtime utilities."""

from .telemetry import NullTelemetry, TelemetryLog, read_events

__all__ = ["NullTelemetry", "TelemetryLog", "read_events"]
