"""Test-program compaction driven by a single fault simulation.

Stages: partition the program into basic blocks and find the admissible
region; trace the fault-free run; fault-simulate once; label every
instruction that owns a first-detection cycle as essential; drop admissible
blocks without essential instructions; reassemble; verify.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from sbstcompact.circuit.netlist import Fault, Netlist, enumerate_faults
from sbstcompact.compaction.report import CompactionReport, LibraryReport, ProgramFeatures
from sbstcompact.config import RunConfig
from sbstcompact.errors import CompactionError, InconsistentTraceError
from sbstcompact.program.asm import Program, emit_program, parse_program, rebuild_program
from sbstcompact.program.cfg import AdmissibleRegion, BasicBlock, find_admissible_region, partition_basic_blocks
from sbstcompact.runtime.telemetry import NullTelemetry, TelemetryLog
from sbstcompact.simulation.faultsim import (
    FaultSimReport,
    GoldenRun,
    SimulationCounter,
    fault_coverage,
    golden_run,
    simulate_all,
)
from sbstcompact.simulation.iss import TraceReport


class Label(str, Enum):
    ESSENTIAL = "essential"
    NOT_ESSENTIAL = "not-essential"


@dataclass(frozen=True)
class LabeledProgram:
    program: Program
    labels: Tuple[Label, ...]

    def essential_indices(self) -> FrozenSet[int]:
        return frozenset(index for index, label in enumerate(self.labels) if label is Label.ESSENTIAL)


@dataclass
class CompactionResult:
    original: Program
    compacted: Program
    removed_block_ids: FrozenSet[int]
    kept_indices: Tuple[int, ...]
    fault_sim_invocations: int
    original_duration_cc: int
    compacted_duration_cc: int
    algorithm: str = "proposed"
    labeled: Optional[LabeledProgram] = None
    original_report: Optional[FaultSimReport] = field(default=None, repr=False)
    verification_report: Optional[FaultSimReport] = field(default=None, repr=False)
    compacted_trace: Optional[TraceReport] = field(default=None, repr=False)

    @property
    def original_size(self) -> int:
        return len(self.original.instructions)

    @property
    def compacted_size(self) -> int:
        return len(self.compacted.instructions)


def label_instructions(program: Program, trace: TraceReport, fsr: FaultSimReport) -> LabeledProgram:
    """Mark each instruction that executes on a detecting cycle as essential."""
    labels = [Label.NOT_ESSENTIAL] * len(program.instructions)
    records = {record.cc: record for record in trace.records}
    for cc, count in sorted(fsr.per_cycle.items()):
        if count <= 0:
            continue
        record = records.get(cc)
        if record is None:
            raise InconsistentTraceError(cc, None, None, None)
        if not 0 <= record.pc < len(program.instructions):
            raise InconsistentTraceError(cc, record.pc, None, record.di)
        expected = program.instructions[record.pc].canonical()
        if record.di != expected:
            raise InconsistentTraceError(cc, record.pc, expected, record.di)
        labels[record.pc] = Label.ESSENTIAL
    return LabeledProgram(program=program, labels=tuple(labels))


def removable_blocks(lp: LabeledProgram, region: AdmissibleRegion, bbs: Sequence[BasicBlock]) -> Set[int]:
    essential = lp.essential_indices()
    return {
        block.id
        for block in bbs
        if block.id in region and not any(index in essential for index in block.indices())
    }


def reduce_program(
    lp: LabeledProgram,
    region: AdmissibleRegion,
    bbs: Sequence[BasicBlock],
) -> Tuple[Program, FrozenSet[int]]:
    """Keep every block outside the region and every region block with an essential instruction."""
    program = lp.program
    if len(lp.labels) != len(program.instructions):
        raise CompactionError("label count does not match the program")
    removed = removable_blocks(lp, region, bbs)
    keep = [True] * len(program.instructions)
    targets = program.branch_targets()
    for block in bbs:
        if block.id not in removed:
            continue
        if block.is_branch_target or any(index in targets for index in block.indices()):
            raise CompactionError(f"block {block.id} is a branch target and cannot be removed")
        for index in block.indices():
            keep[index] = False
    compacted = rebuild_program(program, keep, name=f"{program.name}.compact")
    return compacted, frozenset(removed)


def region_duration(trace: TraceReport, indices: Iterable[int]) -> int:
    members = set(indices)
    return sum(1 for record in trace.records if record.pc in members)


def _verify(
    original: Program,
    compacted: Program,
    netlist: Netlist,
    *,
    config: RunConfig,
    faults: Sequence[Fault],
    original_report: Optional[FaultSimReport],
    original_golden: Optional[GoldenRun],
    region_original: Optional[Sequence[int]],
    region_compacted: Optional[Sequence[int]],
    algorithm: str,
    fault_sim_invocations: int,
    compaction_time_seconds: float,
    removed_blocks: Iterable[int],
) -> Tuple[CompactionReport, FaultSimReport, FaultSimReport]:
    golden_original = original_golden or golden_run(original, netlist, config.max_cycles)
    if original_report is None:
        original_report = simulate_all(
            original,
            netlist,
            faults,
            config.max_cycles,
            mode=config.fault_mode,
            workers=config.workers,
            golden=golden_original,
        )
    golden_compacted = golden_run(compacted, netlist, config.max_cycles)
    compacted_report = simulate_all(
        compacted,
        netlist,
        faults,
        config.max_cycles,
        mode=config.fault_mode,
        workers=config.workers,
        golden=golden_compacted,
    )
    report = CompactionReport(
        name=original.name,
        algorithm=algorithm,
        original_size_instr=len(original.instructions),
        size_instr=len(compacted.instructions),
        original_duration_cc=golden_original.duration,
        duration_cc=golden_compacted.duration,
        total_faults=len(faults),
        detected_original=len(original_report.detections),
        detected_compacted=len(compacted_report.detections),
        fc_original_pct=fault_coverage(original_report) if faults else 0.0,
        fc_compacted_pct=fault_coverage(compacted_report) if faults else 0.0,
        fault_sim_invocations=fault_sim_invocations,
        removed_blocks=sorted(removed_blocks),
        region_size_original=None if region_original is None else len(region_original),
        region_size_compacted=None if region_compacted is None else len(region_compacted),
        region_duration_original_cc=(
            None if region_original is None else region_duration(golden_original.trace, region_original)
        ),
        region_duration_compacted_cc=(
            None if region_compacted is None else region_duration(golden_compacted.trace, region_compacted)
        ),
        compaction_time_seconds=compaction_time_seconds,
    )
    report.check_consistency()
    return report, original_report, compacted_report


def verify(
    original: Program,
    compacted: Program,
    netlist: Netlist,
    *,
    config: Optional[RunConfig] = None,
    faults: Optional[Sequence[Fault]] = None,
    original_report: Optional[FaultSimReport] = None,
    algorithm: str = "verify",
    fault_sim_invocations: int = 0,
    compaction_time_seconds: float = 0.0,
) -> CompactionReport:
    """Fault-simulate both programs and compare size, duration and coverage."""
    config = config or RunConfig()
    faults = list(faults) if faults is not None else enumerate_faults(netlist)
    report, _, _ = _verify(
        original,
        compacted,
        netlist,
        config=config,
        faults=faults,
        original_report=original_report,
        original_golden=None,
        region_original=None,
        region_compacted=None,
        algorithm=algorithm,
        fault_sim_invocations=fault_sim_invocations,
        compaction_time_seconds=compaction_time_seconds,
        removed_blocks=(),
    )
    return report


def compact(
    program: Program,
    netlist: Netlist,
    config: Optional[RunConfig] = None,
    *,
    faults: Optional[Sequence[Fault]] = None,
    telemetry: Optional[TelemetryLog] = None,
) -> Tuple[CompactionResult, CompactionReport]:
    """Compact ``program`` with exactly one fault simulation, then verify it."""
    config = config or RunConfig()
    telemetry = telemetry or NullTelemetry()
    faults = list(faults) if faults is not None else enumerate_faults(netlist)
    counter = SimulationCounter()
    started = time.perf_counter()

    with telemetry.stage("partition", program=program.name):
        bbs = partition_basic_blocks(program)
        region = find_admissible_region(program, bbs)
    with telemetry.stage("trace", program=program.name):
        golden = golden_run(program, netlist, config.max_cycles)
    with telemetry.stage("fault_simulation", program=program.name):
        fsr = simulate_all(
            program,
            netlist,
            faults,
            config.max_cycles,
            mode=config.fault_mode,
            workers=config.workers,
            counter=counter,
            golden=golden,
        )
    telemetry.log_event(
        "fault_simulation",
        program=program.name,
        faults=fsr.total_faults,
        detected=len(fsr.detections),
        invocations=counter.count,
    )
    with telemetry.stage("labeling", program=program.name):
        labeled = label_instructions(program, golden.trace, fsr)
    with telemetry.stage("reduction", program=program.name):
        reduced, removed = reduce_program(labeled, region, bbs)
    telemetry.log_event("blocks_removed", program=program.name, count=len(removed), blocks=sorted(removed))
    with telemetry.stage("reassembly", program=program.name):
        compacted = parse_program(emit_program(reduced), word_width=program.word_width, name=reduced.name)
    elapsed = time.perf_counter() - started

    removed_indices = {index for block in bbs if block.id in removed for index in block.indices()}
    kept = tuple(index for index in range(len(program.instructions)) if index not in removed_indices)
    region_original = region.instruction_indices(bbs)
    region_members = set(region_original)
    region_compacted = [position for position, index in enumerate(kept) if index in region_members]

    with telemetry.stage("verification", program=program.name):
        report, _, verification = _verify(
            program,
            compacted,
            netlist,
            config=config,
            faults=faults,
            original_report=fsr,
            original_golden=golden,
            region_original=region_original,
            region_compacted=region_compacted,
            algorithm="proposed",
            fault_sim_invocations=counter.count,
            compaction_time_seconds=elapsed,
            removed_blocks=removed,
        )
    result = CompactionResult(
        original=program,
        compacted=compacted,
        removed_block_ids=removed,
        kept_indices=kept,
        fault_sim_invocations=counter.count,
        original_duration_cc=golden.duration,
        compacted_duration_cc=report.duration_cc,
        algorithm="proposed",
        labeled=labeled,
        original_report=fsr,
        verification_report=verification,
    )
    return result, report


def describe_program(
    program: Program,
    netlist: Netlist,
    config: Optional[RunConfig] = None,
    *,
    faults: Optional[Sequence[Fault]] = None,
) -> ProgramFeatures:
    """Size, admissible share, duration and fault coverage of ``program``."""
    config = config or RunConfig()
    faults = list(faults) if faults is not None else enumerate_faults(netlist)
    bbs = partition_basic_blocks(program)
    region = find_admissible_region(program, bbs)
    golden = golden_run(program, netlist, config.max_cycles)
    fsr = simulate_all(
        program,
        netlist,
        faults,
        config.max_cycles,
        mode=config.fault_mode,
        workers=config.workers,
        golden=golden,
    )
    return ProgramFeatures(
        name=program.name,
        size_instr=len(program.instructions),
        admissible_pct=region.body_coverage_pct(bbs, program),
        duration_cc=golden.duration,
        fc_pct=fault_coverage(fsr) if faults else 0.0,
        total_faults=len(faults),
        detected=len(fsr.detections),
    )


def features_from_report(program: Program, report: CompactionReport) -> ProgramFeatures:
    """Features of the original program from figures a compaction run already has."""
    bbs = partition_basic_blocks(program)
    region = find_admissible_region(program, bbs)
    return ProgramFeatures(
        name=program.name,
        size_instr=report.original_size_instr,
        admissible_pct=region.body_coverage_pct(bbs, program),
        duration_cc=report.original_duration_cc,
        fc_pct=report.fc_original_pct,
        total_faults=report.total_faults,
        detected=report.detected_original,
    )


def compact_library(
    programs: Sequence[Program],
    netlist: Netlist,
    config: Optional[RunConfig] = None,
    *,
    name: str = "library",
    telemetry: Optional[TelemetryLog] = None,
) -> Tuple[List[CompactionResult], LibraryReport]:
    """Compact each program independently; coverage is the union over the library."""
    if not programs:
        raise CompactionError("library has no programs")
    config = config or RunConfig()
    faults = enumerate_faults(netlist)
    results: List[CompactionResult] = []
    reports: List[CompactionReport] = []
    detected_original: Set[int] = set()
    detected_compacted: Set[int] = set()
    for program in programs:
        result, report = compact(program, netlist, config, faults=faults, telemetry=telemetry)
        results.append(result)
        reports.append(report)
        assert result.original_report is not None and result.verification_report is not None
        detected_original |= result.original_report.detected_ids()
        detected_compacted |= result.verification_report.detected_ids()
    library = LibraryReport(
        name=name,
        programs=reports,
        total_faults=len(faults),
        detected_original=len(detected_original),
        detected_compacted=len(detected_compacted),
    )
    return results, library


__all__ = [
    "CompactionResult",
    "Label",
    "LabeledProgram",
    "compact",
    "compact_library",
    "describe_program",
    "features_from_report",
    "label_instructions",
    "reduce_program",
    "region_duration",
    "removable_blocks",
    "verify",
]
