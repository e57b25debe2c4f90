"""Instruction-set simulation and bus-level fault simulation."""

from .faultsim import FaultSimReport, GoldenRun, SimulationCounter, fault_coverage, golden_run, simulate_all
from .iss import BusEvent, Machine, Termination, TraceRecord, TraceReport, run

__all__ = [
    "BusEvent",
    "FaultSimReport",
    "GoldenRun",
    "Machine",
    "SimulationCounter",
    "Termination",
    "TraceRecord",
    "TraceReport",
    "fault_coverage",
    "golden_run",
    "run",
    "simulate_all",
]
