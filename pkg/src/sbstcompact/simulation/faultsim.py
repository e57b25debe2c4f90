"""Single fault simulation observed at the memory bus.

Each stuck-at fault gets its own faulty machine whose bus activity is compared
with the fault-free run cycle by cycle; the first differing cycle is the
detection cycle and the fault is dropped there.

Faulty runs do not restart from reset. The fault-free ALU patterns are
evaluated for every fault at once with :class:`PatternBatch`; a faulty machine
is only started at the first cycle whose execute-unit result differs, from the
fault-free state at that point, and is stopped again as soon as its
architectural state has rejoined the fault-free run.
"""

from __future__ import annotations

import bisect
import csv
import io
from collections import ChainMap
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from sbstcompact.circuit.batch import PatternBatch
from sbstcompact.circuit.netlist import Fault, Netlist, Pin, Polarity
from sbstcompact.errors import NonHaltingProgramError, SimulationError
from sbstcompact.program.asm import Program
from sbstcompact.simulation.iss import (
    DEFAULT_MAX_CYCLES,
    ExecuteUnit,
    Machine,
    Termination,
    TraceRecord,
    TraceReport,
)

FAULT_MODES = ("bus", "unit-output")


class SimulationCounter:
    """Running count of full-program fault simulations in one workflow."""

    def __init__(self) -> None:
        self.count = 0

    def increment(self) -> int:
        self.count += 1
        return self.count


@dataclass(frozen=True)
class GoldenRun:
    """Fault-free trace plus the snapshots needed to resume faulty runs."""

    trace: TraceReport
    registers: Tuple[Tuple[int, ...], ...]  # registers[c] holds the state after c cycles
    writes: Mapping[int, Tuple[Tuple[int, int], ...]]  # address -> ((cc, data), ...)
    alu_cycles: Tuple[int, ...]
    patterns: Tuple[str, ...]  # distinct patterns, first-use order
    alu_pattern_index: Tuple[int, ...]  # per ALU cycle, index into patterns

    @property
    def duration(self) -> int:
        return self.trace.duration

    def memory_before(self, cc: int) -> "GoldenMemoryView":
        return GoldenMemoryView(self.writes, cc)


class GoldenMemoryView(Mapping[int, int]):
    """Read-only view of fault-free memory as it was before cycle ``cc``."""

    def __init__(self, writes: Mapping[int, Tuple[Tuple[int, int], ...]], cc: int) -> None:
        self._writes = writes
        self._cc = cc

    def __getitem__(self, address: int) -> int:
        history = self._writes.get(address)
        if history:
            position = bisect.bisect_left(history, (self._cc, -1))
            if position:
                return history[position - 1][1]
        raise KeyError(address)

    def __iter__(self) -> Iterator[int]:
        return (address for address in self._writes if address in self)

    def __len__(self) -> int:
        return sum(1 for _ in self)

    def __contains__(self, address: object) -> bool:
        history = self._writes.get(address)  # type: ignore[arg-type]
        return bool(history) and history[0][0] < self._cc


def golden_run(program: Program, netlist: Netlist, max_cycles: int = DEFAULT_MAX_CYCLES) -> GoldenRun:
    """Run ``program`` fault-free, keeping per-cycle register snapshots."""
    machine = Machine(program, netlist)
    records: List[TraceRecord] = []
    registers: List[Tuple[int, ...]] = [tuple(machine.registers)]
    writes: Dict[int, List[Tuple[int, int]]] = {}
    alu_cycles: List[int] = []
    pattern_ids: Dict[str, int] = {}
    alu_pattern_index: List[int] = []

    while not machine.halted and machine.cycle < max_cycles:
        record = machine.step()
        records.append(record)
        registers.append(tuple(machine.registers))
        if record.pattern is not None:
            alu_cycles.append(record.cc)
            alu_pattern_index.append(pattern_ids.setdefault(record.pattern, len(pattern_ids)))
        event = record.bus_event
        if event is not None and event.is_write:
            writes.setdefault(event.address, []).append((record.cc, event.data))

    if not machine.halted:
        raise NonHaltingProgramError(program.name, max_cycles)
    trace = TraceReport(records=tuple(records), program_name=program.name, terminated=Termination.HALT)
    return GoldenRun(
        trace=trace,
        registers=tuple(registers),
        writes={address: tuple(history) for address, history in writes.items()},
        alu_cycles=tuple(alu_cycles),
        patterns=tuple(pattern_ids),
        alu_pattern_index=tuple(alu_pattern_index),
    )


@dataclass
class FaultSimReport:
    """Fault-simulation report: first-detection cycle per fault, counts per cycle."""

    total_faults: int
    detections: Dict[int, int]
    per_cycle: Dict[int, int]
    fault_sim_invocations: int = 1
    undetected_at_limit: FrozenSet[int] = frozenset()
    mode: str = "bus"
    faults: Tuple[Fault, ...] = field(default=(), repr=False)

    def detected_ids(self) -> FrozenSet[int]:
        return frozenset(self.detections)

    def check_consistency(self) -> None:
        if sum(self.per_cycle.values()) != len(self.detections):
            raise SimulationError("per-cycle counts do not add up to the detection count")
        if self.per_cycle != per_cycle_counts(self.detections):
            raise SimulationError("per-cycle counts are not derivable from detections")

    def to_dict(self) -> Dict[str, object]:
        by_id = {fault.id: fault for fault in self.faults}
        detections = []
        for fault_id in sorted(self.detections):
            fault = by_id.get(fault_id)
            detections.append(
                {
                    "fault_id": fault_id,
                    "site": fault.site if fault else None,
                    "polarity": fault.polarity.value if fault else None,
                    "cc": self.detections[fault_id],
                }
            )
        return {
            "total_faults": self.total_faults,
            "mode": self.mode,
            "fault_sim_invocations": self.fault_sim_invocations,
            "detections": detections,
            "per_cycle": [{"cc": cc, "count": count} for cc, count in sorted(self.per_cycle.items())],
            "undetected_at_limit": sorted(self.undetected_at_limit),
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, object]) -> "FaultSimReport":
        faults: List[Fault] = []
        detections: Dict[int, int] = {}
        for entry in payload.get("detections", []):  # type: ignore[union-attr]
            fault_id = int(entry["fault_id"])
            detections[fault_id] = int(entry["cc"])
            if entry.get("site"):
                gate, pin = str(entry["site"]).rsplit("/", 1)
                faults.append(Fault(fault_id, gate, Pin(pin), Polarity(entry["polarity"])))
        return cls(
            total_faults=int(payload["total_faults"]),  # type: ignore[arg-type]
            detections=detections,
            per_cycle={int(item["cc"]): int(item["count"]) for item in payload.get("per_cycle", [])},  # type: ignore[union-attr]
            fault_sim_invocations=int(payload.get("fault_sim_invocations", 1)),  # type: ignore[arg-type]
            undetected_at_limit=frozenset(int(x) for x in payload.get("undetected_at_limit", [])),  # type: ignore[union-attr]
            mode=str(payload.get("mode", "bus")),
            faults=tuple(faults),
        )

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["fault_id", "site", "polarity", "detect_cc"])
        for fault in self.faults:
            writer.writerow([fault.id, fault.site, fault.polarity.value, self.detections.get(fault.id, "")])
        return buffer.getvalue()


def per_cycle_counts(detections: Mapping[int, int]) -> Dict[int, int]:
    if not detections:
        return {}
    cycles, counts = np.unique(np.fromiter(detections.values(), dtype=np.int64), return_counts=True)
    return {int(cc): int(count) for cc, count in zip(cycles, counts)}


def fault_coverage(report: FaultSimReport) -> float:
    """Detected over total faults, in percent, rounded to two decimals."""
    if report.total_faults <= 0:
        raise SimulationError("fault coverage is undefined for an empty fault universe")
    return round(100.0 * len(report.detections) / report.total_faults, 2)


# ---------------------------------------------------------------------- #
# Per-fault simulation
# ---------------------------------------------------------------------- #
@dataclass
class _Context:
    program: Program
    netlist: Netlist
    golden: GoldenRun
    batch: PatternBatch
    alu_pattern_index: np.ndarray
    max_cycles: int
    mode: str


# Populated once per worker process by the pool initializer.
_WORKER_CONTEXT: Optional[_Context] = None


def _init_worker(context: _Context) -> None:
    global _WORKER_CONTEXT
    _WORKER_CONTEXT = context


def _run_chunk(faults: Sequence[Fault]) -> List[Tuple[int, Optional[int], bool]]:
    assert _WORKER_CONTEXT is not None
    return [(fault.id, *_simulate_fault(_WORKER_CONTEXT, fault)) for fault in faults]


def _simulate_fault(context: _Context, fault: Fault) -> Tuple[Optional[int], bool]:
    """Return ``(detection cc or None, stopped at cycle limit)``."""
    golden = context.golden
    if not golden.alu_cycles:
        return None, False
    differs = context.batch.detects(fault)[context.alu_pattern_index]
    candidates = np.flatnonzero(differs)
    if context.mode == "unit-output":
        return (golden.alu_cycles[int(candidates[0])], False) if candidates.size else (None, False)

    records = golden.trace.records
    duration = golden.duration
    unit = ExecuteUnit(context.netlist, context.program.word_width, fault)
    covered_until = 0
    for candidate in candidates:
        start = golden.alu_cycles[int(candidate)]
        if start <= covered_until:
            continue
        machine = Machine(
            context.program,
            context.netlist,
            fault,
            registers=golden.registers[start - 1],
            pc=records[start - 1].pc,
            cycle=start - 1,
            memory=ChainMap({}, golden.memory_before(start)),  # type: ignore[arg-type]
            unit=unit,
            validate=False,
        )
        while True:
            if machine.cycle >= duration:
                return None, _runs_into_limit(machine, context.max_cycles)
            record = machine.step()
            if record.bus_event != records[record.cc - 1].bus_event:
                return record.cc, False
            if machine.halted:
                # Stores the fault-free run still performs are now missing.
                for later in records[record.cc :]:
                    if later.bus_event is not None:
                        return later.cc, False
                return None, False
            if (
                record.cc < duration
                and machine.pc == records[record.cc].pc
                and tuple(machine.registers) == golden.registers[record.cc]
            ):
                covered_until = record.cc
                break
    return None, False


def _runs_into_limit(machine: Machine, max_cycles: int) -> bool:
    while not machine.halted and machine.cycle < max_cycles:
        machine.step()
    return not machine.halted


def _chunks(faults: Sequence[Fault], parts: int) -> List[List[Fault]]:
    size = max(1, -(-len(faults) // parts))
    return [list(faults[i : i + size]) for i in range(0, len(faults), size)]


def simulate_all(
    program: Program,
    netlist: Netlist,
    faults: Sequence[Fault],
    max_cycles: int = DEFAULT_MAX_CYCLES,
    *,
    mode: str = "bus",
    workers: int = 1,
    counter: Optional[SimulationCounter] = None,
    golden: Optional[GoldenRun] = None,
) -> FaultSimReport:
    """Fault-simulate ``program`` against every fault in ``faults``.

    The result does not depend on ``workers``: faults are partitioned into
    chunks and merged back by fault id.
    """
    if mode not in FAULT_MODES:
        raise SimulationError(f"unknown fault simulation mode {mode!r}")
    golden = golden or golden_run(program, netlist, max_cycles)
    invocations = counter.increment() if counter is not None else 1
    faults = tuple(faults)

    patterns = golden.patterns or ("0" * len(netlist.inputs),)
    context = _Context(
        program=program,
        netlist=netlist,
        golden=golden,
        batch=PatternBatch(netlist, patterns),
        alu_pattern_index=np.asarray(golden.alu_pattern_index, dtype=np.int64),
        max_cycles=max_cycles,
        mode=mode,
    )

    if workers > 1 and len(faults) > 1:
        outcomes: List[Tuple[int, Optional[int], bool]] = []
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(context,)) as pool:
            for chunk_result in pool.map(_run_chunk, _chunks(faults, workers * 4)):
                outcomes.extend(chunk_result)
    else:
        outcomes = [(fault.id, *_simulate_fault(context, fault)) for fault in faults]

    detections: Dict[int, int] = {}
    at_limit = set()
    for fault_id, detect_cc, limited in sorted(outcomes, key=lambda item: item[0]):
        if detect_cc is not None:
            detections[fault_id] = detect_cc
        elif limited:
            at_limit.add(fault_id)

    report = FaultSimReport(
        total_faults=len(faults),
        detections=detections,
        per_cycle=per_cycle_counts(detections),
        fault_sim_invocations=invocations,
        undetected_at_limit=frozenset(at_limit),
        mode=mode,
        faults=faults,
    )
    return report


__all__ = [
    "FAULT_MODES",
    "FaultSimReport",
    "GoldenMemoryView",
    "GoldenRun",
    "SimulationCounter",
    "fault_coverage",
    "golden_run",
    "per_cycle_counts",
    "simulate_all",
]
