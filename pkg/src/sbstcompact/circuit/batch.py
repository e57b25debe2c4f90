"""Bit-parallel evaluation of many input patterns with numpy.

Every net holds a boolean vector with one lane per pattern. A faulty
evaluation reuses the fault-free vectors and recomputes only the fanout cone
of the faulty gate.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from sbstcompact.circuit.netlist import Fault, GateKind, Netlist, Pin
from sbstcompact.errors import NetlistError

PatternInput = Union[np.ndarray, Sequence[str]]


def _apply(kind: GateKind, operands: List[np.ndarray]) -> np.ndarray:
    if kind is GateKind.AND:
        return operands[0] & operands[1]
    if kind is GateKind.OR:
        return operands[0] | operands[1]
    if kind is GateKind.NOT:
        return ~operands[0]
    if kind is GateKind.NAND:
        return ~(operands[0] & operands[1])
    if kind is GateKind.NOR:
        return ~(operands[0] | operands[1])
    if kind is GateKind.XOR:
        return operands[0] ^ operands[1]
    if kind is GateKind.XNOR:
        return ~(operands[0] ^ operands[1])
    return operands[0].copy()


def pattern_matrix(netlist: Netlist, patterns: PatternInput) -> np.ndarray:
    """Normalise patterns to a ``(count, len(netlist.inputs))`` boolean matrix.

    String patterns carry one character per input port, in ``netlist.inputs`` order.
    """
    if isinstance(patterns, np.ndarray):
        matrix = patterns.astype(bool, copy=False)
        if matrix.ndim == 1:
            matrix = matrix.reshape(1, -1)
    else:
        rows = list(patterns)
        for row in rows:
            if len(row) != len(netlist.inputs) or set(row) - {"0", "1"}:
                raise NetlistError(f"pattern {row!r} does not match {len(netlist.inputs)} input ports")
        matrix = np.array([[char == "1" for char in row] for row in rows], dtype=bool)
        matrix = matrix.reshape(len(rows), len(netlist.inputs))
    if matrix.shape[1] != len(netlist.inputs):
        raise NetlistError(f"pattern matrix has {matrix.shape[1]} columns, netlist has {len(netlist.inputs)} inputs")
    return matrix


class PatternBatch:
    """Fault-free net values for a fixed set of patterns, reused for every fault."""

    def __init__(self, netlist: Netlist, patterns: PatternInput) -> None:
        self.netlist = netlist
        self.matrix = pattern_matrix(netlist, patterns)
        self.size = int(self.matrix.shape[0])
        self._values: Dict[str, np.ndarray] = {
            port: self.matrix[:, column] for column, port in enumerate(netlist.inputs)
        }
        for gate in netlist.gates:
            self._values[gate.output] = _apply(gate.kind, [self._values[net] for net in gate.inputs])
        self._golden = self._stack(self._values)
        self._cones: Dict[str, Tuple[int, ...]] = {}

    def _stack(self, values: Dict[str, np.ndarray]) -> np.ndarray:
        if not self.netlist.outputs:
            return np.zeros((self.size, 0), dtype=bool)
        return np.column_stack([values[port] for port in self.netlist.outputs]).reshape(
            self.size, len(self.netlist.outputs)
        )

    def outputs(self, fault: Optional[Fault] = None) -> np.ndarray:
        """Output matrix ``(patterns, outputs)`` with ``fault`` injected."""
        if fault is None:
            return self._golden
        cone = self._cones.get(fault.gate)
        if cone is None:
            cone = self._cones[fault.gate] = self.netlist.fanout_cone(fault.gate)
        stuck = np.full(self.size, bool(fault.polarity.value_bit))
        changed: Dict[str, np.ndarray] = {}
        for index in cone:
            gate = self.netlist.gates[index]
            operands = [changed.get(net, self._values[net]) for net in gate.inputs]
            if gate.name == fault.gate:
                if fault.pin is Pin.IN1:
                    operands[0] = stuck
                elif fault.pin is Pin.IN2 and len(operands) > 1:
                    operands[1] = stuck
            result = _apply(gate.kind, operands)
            if gate.name == fault.gate and fault.pin is Pin.OUT:
                result = stuck
            changed[gate.output] = result
        merged = dict(self._values)
        merged.update(changed)
        return self._stack(merged)

    def detects(self, fault: Fault) -> np.ndarray:
        """Boolean lane mask: patterns whose outputs differ under ``fault``."""
        return np.any(self.outputs(fault) != self._golden, axis=1)

    def first_difference(self, fault: Fault) -> Optional[int]:
        hits = np.flatnonzero(self.detects(fault))
        return int(hits[0]) if hits.size else None

    def detection_matrix(self, faults: Sequence[Fault]) -> np.ndarray:
        """``(faults, patterns)`` boolean matrix of per-pattern detections."""
        if not faults:
            return np.zeros((0, self.size), dtype=bool)
        return np.vstack([self.detects(fault) for fault in faults])


def evaluate_patterns(netlist: Netlist, patterns: PatternInput, fault: Optional[Fault] = None) -> np.ndarray:
    """Evaluate every pattern at once; returns a ``(patterns, outputs)`` boolean matrix."""
    return PatternBatch(netlist, patterns).outputs(fault)


def bus_values(netlist: Netlist, outputs: np.ndarray, bus: str = "r") -> np.ndarray:
    """Integer value of ``bus`` per pattern row of an output matrix."""
    columns = [netlist.outputs.index(port) for port in netlist.buses[bus]]
    weights = np.array([1 << bit for bit in range(len(columns))], dtype=np.int64)
    if not columns:
        return np.zeros(outputs.shape[0], dtype=np.int64)
    return outputs[:, columns].astype(np.int64) @ weights


__all__ = ["PatternBatch", "bus_values", "evaluate_patterns", "pattern_matrix"]
