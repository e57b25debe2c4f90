"""Execute-unit netlists, the reference ALU and bit-parallel evaluation."""

from .alu import build_reference_alu, reference_alu_result
from .batch import PatternBatch, evaluate_patterns
from .netlist import (
    Fault,
    Gate,
    GateKind,
    Netlist,
    Pin,
    Polarity,
    build_netlist,
    dump_netlist,
    enumerate_faults,
    evaluate,
    fault_summary,
    load_netlist,
)

__all__ = [
    "Fault",
    "Gate",
    "GateKind",
    "Netlist",
    "PatternBatch",
    "Pin",
    "Polarity",
    "build_netlist",
    "build_reference_alu",
    "dump_netlist",
    "enumerate_faults",
    "evaluate",
    "evaluate_patterns",
    "fault_summary",
    "load_netlist",
    "reference_alu_result",
]
