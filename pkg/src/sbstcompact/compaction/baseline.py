"""Compaction by instruction removal (A0), the one-simulation-per-trial baseline."""

from __future__ import annotations

import time
from typing import List, Optional, Sequence, Tuple

from sbstcompact.circuit.netlist import Fault, Netlist, enumerate_faults
from sbstcompact.compaction.compactor import CompactionResult, region_duration
from sbstcompact.compaction.report import CompactionReport
from sbstcompact.config import RunConfig
from sbstcompact.errors import AsmError, NonHaltingProgramError
from sbstcompact.program.asm import Program, rebuild_program
from sbstcompact.program.cfg import AdmissibleRegion, find_admissible_region, partition_basic_blocks
from sbstcompact.runtime.telemetry import NullTelemetry, TelemetryLog
from sbstcompact.simulation.faultsim import SimulationCounter, fault_coverage, golden_run, simulate_all


def compact_a0(
    program: Program,
    netlist: Netlist,
    region: AdmissibleRegion,
    config: Optional[RunConfig] = None,
    *,
    faults: Optional[Sequence[Fault]] = None,
    telemetry: Optional[TelemetryLog] = None,
) -> CompactionResult:
    """Remove admissible instructions one at a time, keeping a removal only if no detection is lost.

    Trials run in program order; every trial is one full fault simulation and
    is counted in ``fault_sim_invocations``.
    """
    config = config or RunConfig()
    telemetry = telemetry or NullTelemetry()
    faults = list(faults) if faults is not None else enumerate_faults(netlist)
    bbs = partition_basic_blocks(program)

    def simulate(candidate: Program):
        golden = golden_run(candidate, netlist, config.max_cycles)
        report = simulate_all(
            candidate,
            netlist,
            faults,
            config.max_cycles,
            mode=config.fault_mode,
            workers=config.workers,
            golden=golden,
        )
        return golden, report

    original_golden, original_report = simulate(program)
    current_golden, current_report = original_golden, original_report
    current = program
    detected = len(original_report.detections)
    keep = [True] * len(program.instructions)
    counter = SimulationCounter()

    for index in region.instruction_indices(bbs):
        keep[index] = False
        accepted = False
        try:
            trial = rebuild_program(program, keep, name=f"{program.name}.a0")
        except AsmError:
            trial = None
        counter.increment()
        if trial is not None:
            try:
                trial_golden, trial_report = simulate(trial)
            except NonHaltingProgramError:
                trial_golden = None
            if trial_golden is not None and len(trial_report.detections) >= detected:
                accepted = True
                current, current_golden, current_report = trial, trial_golden, trial_report
                detected = len(trial_report.detections)
        if not accepted:
            keep[index] = True
        telemetry.log_event("a0_trial", program=program.name, index=index, accepted=accepted)

    kept = tuple(index for index, flag in enumerate(keep) if flag)
    removed_blocks = frozenset(
        block.id for block in bbs if all(not keep[index] for index in block.indices())
    )
    if current is program:
        current = rebuild_program(program, keep, name=f"{program.name}.a0")
    return CompactionResult(
        original=program,
        compacted=current,
        removed_block_ids=removed_blocks,
        kept_indices=kept,
        fault_sim_invocations=counter.count,
        original_duration_cc=original_golden.duration,
        compacted_duration_cc=current_golden.duration,
        algorithm="a0",
        original_report=original_report,
        verification_report=current_report,
        compacted_trace=current_golden.trace,
    )


def run_a0(
    program: Program,
    netlist: Netlist,
    config: Optional[RunConfig] = None,
    *,
    telemetry: Optional[TelemetryLog] = None,
) -> Tuple[CompactionResult, CompactionReport]:
    """A0 over the program's admissible region, reported like the proposed method."""
    config = config or RunConfig()
    faults = enumerate_faults(netlist)
    bbs = partition_basic_blocks(program)
    region = find_admissible_region(program, bbs)
    started = time.perf_counter()
    result = compact_a0(program, netlist, region, config, faults=faults, telemetry=telemetry)
    elapsed = time.perf_counter() - started

    assert result.original_report is not None and result.verification_report is not None
    region_original: List[int] = region.instruction_indices(bbs)
    members = set(region_original)
    region_compacted = [position for position, index in enumerate(result.kept_indices) if index in members]
    original_trace = golden_run(program, netlist, config.max_cycles).trace
    report = CompactionReport(
        name=program.name,
        algorithm="a0",
        original_size_instr=result.original_size,
        size_instr=result.compacted_size,
        original_duration_cc=result.original_duration_cc,
        duration_cc=result.compacted_duration_cc,
        total_faults=len(faults),
        detected_original=len(result.original_report.detections),
        detected_compacted=len(result.verification_report.detections),
        fc_original_pct=fault_coverage(result.original_report) if faults else 0.0,
        fc_compacted_pct=fault_coverage(result.verification_report) if faults else 0.0,
        fault_sim_invocations=result.fault_sim_invocations,
        removed_blocks=sorted(result.removed_block_ids),
        region_size_original=len(region_original),
        region_size_compacted=len(region_compacted),
        region_duration_original_cc=region_duration(original_trace, region_original),
        region_duration_compacted_cc=(
            region_duration(result.compacted_trace, region_compacted) if result.compacted_trace else None
        ),
        compaction_time_seconds=elapsed,
    )
    report.check_consistency()
    return result, report


__all__ = ["compact_a0", "run_a0"]
