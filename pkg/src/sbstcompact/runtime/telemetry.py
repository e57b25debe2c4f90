"""JSON Lines run telemetry."""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterator, List, Mapping, Optional


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


class TelemetryLog:
    """Appends one JSON object per event to ``<run_dir>/telemetry.jsonl``."""

    def __init__(self, run_dir: Path) -> None:
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.path = self.run_dir / "telemetry.jsonl"
        self._handle: Optional[IO[str]] = self.path.open("a", encoding="utf-8")

    def log_event(self, event: str, **fields: object) -> None:
        if self._handle is None:
            return
        payload = {"timestamp": _utc_now(), "event": event, **fields}
        json.dump(payload, self._handle, ensure_ascii=False, default=str)
        self._handle.write("\n")
        self._handle.flush()

    @contextmanager
    def stage(self, name: str, **fields: object) -> Iterator[None]:
        """Emit ``stage_started``/``stage_finished`` around a block."""
        self.log_event("stage_started", stage=name, **fields)
        started = time.perf_counter()
        try:
            yield
        finally:
            self.log_event("stage_finished", stage=name, elapsed_seconds=round(time.perf_counter() - started, 6))

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "TelemetryLog":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


class NullTelemetry(TelemetryLog):
    """Telemetry sink used when no run directory is configured."""

    def __init__(self) -> None:
        self.run_dir = None  # type: ignore[assignment]
        self.path = None  # type: ignore[assignment]
        self._handle = None


def read_events(path: Path) -> List[Mapping[str, object]]:
    events: List[Mapping[str, object]] = []
    if not Path(path).exists():
        return events
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError:
                continue
    return events


__all__ = ["NullTelemetry", "TelemetryLog", "read_events"]
