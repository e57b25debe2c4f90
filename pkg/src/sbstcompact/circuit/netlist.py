"""Gate-level combinational netlists and their stuck-at fault universe."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from sbstcompact.errors import NetlistError

_PORT_RE = re.compile(r"^(op|a|b|r)(\d+)$")
OP_BITS = 3


class GateKind(str, Enum):
    AND = "AND"
    OR = "OR"
    NOT = "NOT"
    NAND = "NAND"
    NOR = "NOR"
    XOR = "XOR"
    XNOR = "XNOR"
    BUF = "BUF"

    @property
    def fanin(self) -> int:
        return 1 if self in (GateKind.NOT, GateKind.BUF) else 2

    def apply(self, x: int, y: int = 0) -> int:
        if self is GateKind.AND:
            return x & y
        if self is GateKind.OR:
            return x | y
        if self is GateKind.NOT:
            return x ^ 1
        if self is GateKind.NAND:
            return (x & y) ^ 1
        if self is GateKind.NOR:
            return (x | y) ^ 1
        if self is GateKind.XOR:
            return x ^ y
        if self is GateKind.XNOR:
            return (x ^ y) ^ 1
        return x


class Pin(str, Enum):
    IN1 = "in1"
    IN2 = "in2"
    OUT = "out"


class Polarity(str, Enum):
    SA0 = "SA0"
    SA1 = "SA1"

    @property
    def value_bit(self) -> int:
        return 0 if self is Polarity.SA0 else 1


@dataclass(frozen=True)
class Gate:
    name: str
    kind: GateKind
    output: str
    inputs: Tuple[str, ...]


@dataclass(frozen=True)
class Fault:
    id: int
    gate: str
    pin: Pin
    polarity: Polarity

    @property
    def site(self) -> str:
        return f"{self.gate}/{self.pin.value}"

    def to_dict(self) -> Dict[str, object]:
        return {"fault_id": self.id, "site": self.site, "polarity": self.polarity.value}


@dataclass(frozen=True)
class Netlist:
    """Validated combinational netlist; ``gates`` are stored in topological order."""

    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]
    gates: Tuple[Gate, ...]
    width: int
    name: str = field(default="netlist", compare=False)

    @cached_property
    def gate_index(self) -> Dict[str, int]:
        return {gate.name: index for index, gate in enumerate(self.gates)}

    @cached_property
    def buses(self) -> Dict[str, Tuple[str, ...]]:
        groups: Dict[str, List[Tuple[int, str]]] = {"op": [], "a": [], "b": [], "r": []}
        for port in (*self.inputs, *self.outputs):
            match = _PORT_RE.match(port)
            if match:
                groups[match.group(1)].append((int(match.group(2)), port))
        return {bus: tuple(port for _, port in sorted(items)) for bus, items in groups.items()}

    @property
    def is_unit_mode(self) -> bool:
        """True when the netlist has no op bus and is driven by UNIT."""
        return not self.buses["op"]

    @cached_property
    def gate_graph(self) -> nx.DiGraph:
        return _gate_graph(self.gates)

    def fanout_cone(self, gate_name: str) -> Tuple[int, ...]:
        """Indices (topological order) of ``gate_name`` and every gate it can influence."""
        cone = nx.descendants(self.gate_graph, gate_name) | {gate_name}
        return tuple(sorted(self.gate_index[name] for name in cone))


# ---------------------------------------------------------------------- #
# Loading and validation
# ---------------------------------------------------------------------- #
def load_netlist(text: str, *, name: str = "netlist") -> Netlist:
    """Parse the line-based ``.nl`` format into a validated Netlist."""
    width: Optional[int] = None
    inputs: List[str] = []
    outputs: List[str] = []
    gates: List[Gate] = []
    gate_lines: Dict[str, int] = {}

    for line_no, raw in enumerate(text.splitlines(), start=1):
        statement = raw.split("#", 1)[0].strip()
        if not statement:
            continue
        tokens = statement.split()
        keyword = tokens[0].lower()
        if keyword == "width":
            if len(tokens) != 2 or not tokens[1].isdigit():
                raise NetlistError("width expects one integer", line=line_no)
            width = int(tokens[1])
        elif keyword == "input":
            inputs.extend(tokens[1:])
        elif keyword == "output":
            outputs.extend(tokens[1:])
        elif keyword == "gate":
            if len(tokens) < 5:
                raise NetlistError("gate expects: gate <name> <KIND> <out> <in1> [<in2>]", line=line_no)
            gate_name, kind_text, out_net, *in_nets = tokens[1:]
            try:
                kind = GateKind(kind_text.upper())
            except ValueError as exc:
                raise NetlistError(f"unknown gate kind {kind_text!r}", line=line_no) from exc
            if len(in_nets) != kind.fanin:
                raise NetlistError(
                    f"gate {gate_name} of kind {kind.value} needs {kind.fanin} input(s), got {len(in_nets)}",
                    line=line_no,
                )
            if gate_name in gate_lines:
                raise NetlistError(f"duplicate gate name {gate_name!r}", line=line_no)
            gate_lines[gate_name] = line_no
            gates.append(Gate(name=gate_name, kind=kind, output=out_net, inputs=tuple(in_nets)))
        else:
            raise NetlistError(f"unknown statement {tokens[0]!r}", line=line_no)

    return build_netlist(inputs, outputs, gates, width=width, name=name)


def build_netlist(
    inputs: Sequence[str],
    outputs: Sequence[str],
    gates: Sequence[Gate],
    *,
    width: Optional[int] = None,
    name: str = "netlist",
) -> Netlist:
    """Validate raw parts and return a topologically ordered Netlist."""
    inputs = tuple(inputs)
    outputs = tuple(outputs)
    if len(set(inputs)) != len(inputs):
        raise NetlistError("duplicate input port")
    if len(set(outputs)) != len(outputs):
        raise NetlistError("duplicate output port")
    if not outputs:
        raise NetlistError("netlist declares no outputs")

    drivers: Dict[str, str] = {}
    for gate in gates:
        if gate.output in inputs:
            raise NetlistError(f"gate {gate.name} drives primary input {gate.output!r}")
        if gate.output in drivers:
            raise NetlistError(f"net {gate.output!r} driven more than once")
        drivers[gate.output] = gate.name
    for gate in gates:
        for net in gate.inputs:
            if net not in drivers and net not in inputs:
                raise NetlistError(f"undriven net {net!r} used by gate {gate.name}")
    for port in outputs:
        if port not in drivers:
            raise NetlistError(f"undriven net {port!r} (output port)")

    graph = _gate_graph(gates)
    if not nx.is_directed_acyclic_graph(graph):
        cycle = nx.find_cycle(graph)
        members = " -> ".join(edge[0] for edge in cycle)
        raise NetlistError(f"combinational cycle detected: {members}")
    position = {gate.name: index for index, gate in enumerate(gates)}
    order = list(nx.lexicographical_topological_sort(graph, key=position.__getitem__))
    by_name = {gate.name: gate for gate in gates}
    ordered = tuple(by_name[gate_name] for gate_name in order)

    resolved_width = _check_ports(inputs, outputs, width)
    return Netlist(inputs=inputs, outputs=outputs, gates=ordered, width=resolved_width, name=name)


def _gate_graph(gates: Sequence[Gate]) -> nx.DiGraph:
    graph = nx.DiGraph()
    drivers = {gate.output: gate.name for gate in gates}
    for gate in gates:
        graph.add_node(gate.name)
    for gate in gates:
        for net in gate.inputs:
            driver = drivers.get(net)
            if driver is not None:
                graph.add_edge(driver, gate.name)
    return graph


def _check_ports(inputs: Tuple[str, ...], outputs: Tuple[str, ...], width: Optional[int]) -> int:
    groups: Dict[str, List[int]] = {"op": [], "a": [], "b": [], "r": []}
    for port in inputs:
        match = _PORT_RE.match(port)
        if not match or match.group(1) == "r":
            raise NetlistError(f"input port {port!r} is not part of an op/a/b bus")
        groups[match.group(1)].append(int(match.group(2)))
    for port in outputs:
        match = _PORT_RE.match(port)
        if not match or match.group(1) != "r":
            raise NetlistError(f"output port {port!r} is not part of the r bus")
        groups["r"].append(int(match.group(2)))

    for bus, indices in groups.items():
        if sorted(indices) != list(range(len(indices))):
            raise NetlistError(f"bus {bus} is not numbered contiguously from 0")
    if not groups["a"]:
        raise NetlistError("netlist needs an a bus")

    sizes = {bus: len(indices) for bus, indices in groups.items()}
    if sizes["op"]:
        if sizes["op"] != OP_BITS:
            raise NetlistError(f"op bus must have {OP_BITS} bits, found {sizes['op']}")
        data = {sizes["a"], sizes["b"], sizes["r"]}
        if len(data) != 1:
            raise NetlistError(f"port/width mismatch: a={sizes['a']} b={sizes['b']} r={sizes['r']}")
        bus_width = sizes["a"]
        if width is not None and width != bus_width:
            raise NetlistError(f"port/width mismatch: declared width {width}, buses are {bus_width} bits")
        return bus_width

    bus_width = max(sizes["a"], sizes["b"], sizes["r"])
    if width is not None and width < bus_width:
        raise NetlistError(f"port/width mismatch: declared width {width}, buses need {bus_width} bits")
    return width if width is not None else bus_width


def dump_netlist(netlist: Netlist) -> str:
    """Render a Netlist in the ``.nl`` format."""
    lines = [f"# {netlist.name}", f"width {netlist.width}"]
    lines.append("input " + " ".join(netlist.inputs))
    lines.append("output " + " ".join(netlist.outputs))
    for gate in netlist.gates:
        lines.append(f"gate {gate.name} {gate.kind.value} {gate.output} {' '.join(gate.inputs)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------- #
# Evaluation and faults
# ---------------------------------------------------------------------- #
def evaluate(netlist: Netlist, inputs: Mapping[str, int], fault: Optional[Fault] = None) -> Dict[str, int]:
    """Evaluate one input assignment, optionally with a single stuck-at fault."""
    values: Dict[str, int] = {}
    for port in netlist.inputs:
        if port not in inputs:
            raise NetlistError(f"missing input assignment for {port!r}")
        values[port] = int(inputs[port]) & 1

    for gate in netlist.gates:
        operands = [values[net] for net in gate.inputs]
        if fault is not None and fault.gate == gate.name:
            if fault.pin is Pin.IN1:
                operands[0] = fault.polarity.value_bit
            elif fault.pin is Pin.IN2 and len(operands) > 1:
                operands[1] = fault.polarity.value_bit
        result = gate.kind.apply(*operands)
        if fault is not None and fault.gate == gate.name and fault.pin is Pin.OUT:
            result = fault.polarity.value_bit
        values[gate.output] = result

    return {port: values[port] for port in netlist.outputs}


def gate_pins(gate: Gate) -> Tuple[Pin, ...]:
    if gate.kind.fanin == 1:
        return (Pin.IN1, Pin.OUT)
    return (Pin.IN1, Pin.IN2, Pin.OUT)


def enumerate_faults(netlist: Netlist) -> List[Fault]:
    """Uncollapsed pin-level universe: gate order, pin order, SA0 before SA1."""
    faults: List[Fault] = []
    for gate in netlist.gates:
        for pin in gate_pins(gate):
            for polarity in (Polarity.SA0, Polarity.SA1):
                faults.append(Fault(id=len(faults), gate=gate.name, pin=pin, polarity=polarity))
    return faults


def fault_summary(netlist: Netlist) -> Dict[str, int]:
    """Fault counts per gate kind plus the total."""
    counts: Counter[str] = Counter()
    for gate in netlist.gates:
        counts[gate.kind.value] += (gate.kind.fanin + 1) * 2
    summary = {kind: counts[kind] for kind in sorted(counts)}
    summary["total"] = sum(counts.values())
    return summary


__all__ = [
    "Fault",
    "Gate",
    "GateKind",
    "Netlist",
    "Pin",
    "Polarity",
    "build_netlist",
    "dump_netlist",
    "enumerate_faults",
    "evaluate",
    "fault_summary",
    "gate_pins",
    "load_netlist",
]
