"""Reference execute unit: an 8-function ALU built from primitive gates."""

from __future__ import annotations

from collections import Counter
from dataclasses import replace
from functools import reduce
from typing import Dict, List, Sequence, Tuple, Union

from sbstcompact.circuit.netlist import OP_BITS, Gate, GateKind, Netlist, build_netlist
from sbstcompact.errors import NetlistError

Signal = Union[str, int]

MIN_WIDTH = 1
MAX_WIDTH = 16


class _GateBuilder:
    """Emits gates while folding constant operands away."""

    def __init__(self, primary_inputs: Sequence[str]) -> None:
        self.gates: List[Gate] = []
        self.primary_inputs = set(primary_inputs)
        self._producer: Dict[str, int] = {}
        self._consumers: Counter[str] = Counter()
        self._inverted: Dict[str, str] = {}
        self._count = 0

    def emit(self, kind: GateKind, inputs: Sequence[str], out: str | None = None) -> str:
        self._count += 1
        net = out or f"n{self._count}"
        self.gates.append(Gate(name=f"g{self._count}", kind=kind, output=net, inputs=tuple(inputs)))
        self._producer[net] = len(self.gates) - 1
        self._consumers.update(inputs)
        return net

    def not_(self, x: Signal) -> Signal:
        if isinstance(x, int):
            return x ^ 1
        if x not in self._inverted:
            self._inverted[x] = self.emit(GateKind.NOT, [x])
        return self._inverted[x]

    def and_(self, x: Signal, y: Signal) -> Signal:
        if x == 0 or y == 0:
            return 0
        if x == 1:
            return y
        if y == 1 or x == y:
            return x
        return self.emit(GateKind.AND, [x, y])  # type: ignore[list-item]

    def or_(self, x: Signal, y: Signal) -> Signal:
        if x == 1 or y == 1:
            return 1
        if x == 0:
            return y
        if y == 0 or x == y:
            return x
        return self.emit(GateKind.OR, [x, y])  # type: ignore[list-item]

    def xor_(self, x: Signal, y: Signal) -> Signal:
        if isinstance(x, int) and isinstance(y, int):
            return x ^ y
        if isinstance(x, int):
            x, y = y, x
        if y == 0:
            return x
        if y == 1:
            return self.not_(x)
        if x == y:
            return 0
        return self.emit(GateKind.XOR, [x, y])  # type: ignore[list-item]

    def mux(self, sel: Signal, when0: Signal, when1: Signal) -> Signal:
        if isinstance(sel, int):
            return when1 if sel else when0
        if when0 == when1:
            return when0
        return self.or_(self.and_(self.not_(sel), when0), self.and_(sel, when1))

    def any_(self, terms: Sequence[Signal]) -> Signal:
        items = [term for term in terms if term != 0]
        if not items:
            return 0
        while len(items) > 1:
            paired = [self.or_(items[i], items[i + 1]) for i in range(0, len(items) - 1, 2)]
            if len(items) % 2:
                paired.append(items[-1])
            items = paired
        return items[0]

    def drive(self, port: str, signal: Signal, anchor: str) -> None:
        """Make ``port`` the output net of exactly one gate carrying ``signal``."""
        if isinstance(signal, int):
            kind = GateKind.XNOR if signal else GateKind.XOR
            self.emit(kind, [anchor, anchor], out=port)
            return
        index = self._producer.get(signal)
        if index is not None and self._consumers[signal] == 0 and signal not in self.primary_inputs:
            gate = self.gates[index]
            if not gate.output.startswith("r"):
                self.gates[index] = replace(gate, output=port)
                del self._producer[signal]
                self._producer[port] = index
                return
        self.emit(GateKind.BUF, [signal], out=port)


def _add(builder: _GateBuilder, x: Sequence[Signal], y: Sequence[Signal], carry: Signal) -> Tuple[List[Signal], Signal]:
    total: List[Signal] = []
    for xi, yi in zip(x, y):
        propagate = builder.xor_(xi, yi)
        total.append(builder.xor_(propagate, carry))
        carry = builder.or_(builder.and_(xi, yi), builder.and_(propagate, carry))
    return total, carry


def _constant_bits(value: int, width: int) -> List[Signal]:
    return [(value >> i) & 1 for i in range(width)]


def _shift_amount(builder: _GateBuilder, b: Sequence[Signal], width: int) -> List[Signal]:
    """Bits of ``b mod width``."""
    if width == 1:
        return []
    stages = (width - 1).bit_length()
    if width & (width - 1) == 0:
        return list(b[:stages])
    remainder: List[Signal] = list(b)
    for shift in reversed(range(width)):
        divisor = width << shift
        if divisor >= (1 << width):
            continue
        negated = [bit ^ 1 for bit in _constant_bits(divisor, width)]
        difference, no_borrow = _add(builder, remainder, negated, 1)
        remainder = [builder.mux(no_borrow, keep, sub) for keep, sub in zip(remainder, difference)]
    return remainder[:stages]


def _shift(builder: _GateBuilder, a: Sequence[Signal], amount: Sequence[Signal], *, left: bool) -> List[Signal]:
    width = len(a)
    value: List[Signal] = list(a)
    for stage, bit in enumerate(amount):
        step = 1 << stage
        if left:
            moved = [value[i - step] if i - step >= 0 else 0 for i in range(width)]
        else:
            moved = [value[i + step] if i + step < width else 0 for i in range(width)]
        value = [builder.mux(bit, keep, shifted) for keep, shifted in zip(value, moved)]
    return value


def build_reference_alu(width: int) -> Netlist:
    """Build the op/a/b -> r ALU: ADD, SUB, AND, OR, XOR, SLL, SRL, SLT (opcodes 0..7)."""
    if not MIN_WIDTH <= width <= MAX_WIDTH:
        raise NetlistError(f"ALU width {width} out of range {MIN_WIDTH}..{MAX_WIDTH}")

    op = [f"op{i}" for i in range(OP_BITS)]
    a = [f"a{i}" for i in range(width)]
    b = [f"b{i}" for i in range(width)]
    r = [f"r{i}" for i in range(width)]
    builder = _GateBuilder([*op, *a, *b])

    added, _ = _add(builder, a, b, 0)
    subtracted, _ = _add(builder, a, [builder.not_(bit) for bit in b], 1)
    anded = [builder.and_(x, y) for x, y in zip(a, b)]
    ored = [builder.or_(x, y) for x, y in zip(a, b)]
    xored = [builder.xor_(x, y) for x, y in zip(a, b)]
    amount = _shift_amount(builder, b, width)
    shifted_left = _shift(builder, a, amount, left=True)
    shifted_right = _shift(builder, a, amount, left=False)

    msb_a, msb_b, msb_d = a[-1], b[-1], subtracted[-1]
    overflow = builder.and_(builder.xor_(msb_a, msb_b), builder.xor_(msb_a, msb_d))
    less = builder.xor_(msb_d, overflow)
    set_less: List[Signal] = [less] + [0] * (width - 1)

    results = [added, subtracted, anded, ored, xored, shifted_left, shifted_right, set_less]
    selects: List[Signal] = []
    for code in range(len(results)):
        literals = [op[j] if (code >> j) & 1 else builder.not_(op[j]) for j in range(OP_BITS)]
        selects.append(reduce(builder.and_, literals))

    for i, port in enumerate(r):
        terms = [builder.and_(select, result[i]) for select, result in zip(selects, results)]
        builder.drive(port, builder.any_(terms), anchor=a[0])

    return build_netlist([*op, *a, *b], r, builder.gates, width=width, name=f"alu{width}")


def reference_alu_result(opcode: int, a: int, b: int, width: int) -> int:
    """Arithmetic model of the reference ALU."""
    mask = (1 << width) - 1
    a &= mask
    b &= mask
    amount = b % width
    if opcode == 0:
        return (a + b) & mask
    if opcode == 1:
        return (a - b) & mask
    if opcode == 2:
        return a & b
    if opcode == 3:
        return a | b
    if opcode == 4:
        return a ^ b
    if opcode == 5:
        return (a << amount) & mask
    if opcode == 6:
        return a >> amount
    if opcode == 7:
        sign = 1 << (width - 1)
        signed_a = a - (1 << width) if a & sign else a
        signed_b = b - (1 << width) if b & sign else b
        return 1 if signed_a < signed_b else 0
    raise ValueError(f"unknown opcode {opcode}")


__all__ = ["MAX_WIDTH", "MIN_WIDTH", "build_reference_alu", "reference_alu_result"]
