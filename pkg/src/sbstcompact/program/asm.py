"""Parser and emitter for the micro-ISA test-program assembly."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from sbstcompact.errors import AsmError

NUM_REGISTERS = 16
# Bus addresses are 16 bits regardless of the data word width.
ADDRESS_BITS = 16

_LABEL_RE = re.compile(r"^\s*([A-Za-z_.][\w.]*)\s*:(.*)$")
_REGISTER_RE = re.compile(r"^r(\d+)$", re.IGNORECASE)
_MEMORY_RE = re.compile(r"^(.*?)\(\s*(r\d+)\s*\)$", re.IGNORECASE)
_LABEL_NAME_RE = re.compile(r"^[A-Za-z_.][\w.]*$")
_HEADER_RE = re.compile(r"^#\s*\S+\s+\(word width (\d+)\)\s*$")
DEFAULT_WORD_WIDTH = 8


class Mnemonic(str, Enum):
    LI = "li"
    ADD = "add"
    SUB = "sub"
    AND = "and"
    OR = "or"
    XOR = "xor"
    SLL = "sll"
    SRL = "srl"
    SLT = "slt"
    UNIT = "unit"
    LW = "lw"
    SW = "sw"
    BEQ = "beq"
    BNE = "bne"
    J = "j"
    NOP = "nop"
    HALT = "halt"

    @property
    def is_alu(self) -> bool:
        return self in ALU_OPCODES

    @property
    def is_branch(self) -> bool:
        return self in (Mnemonic.BEQ, Mnemonic.BNE)

    @property
    def has_target(self) -> bool:
        return self in (Mnemonic.BEQ, Mnemonic.BNE, Mnemonic.J)

    @property
    def is_control_flow(self) -> bool:
        return self in (Mnemonic.BEQ, Mnemonic.BNE, Mnemonic.J, Mnemonic.HALT)

    @property
    def uses_execute_unit(self) -> bool:
        return self.is_alu or self is Mnemonic.UNIT


# Opcode values presented on the execute unit's op bus.
ALU_OPCODES: Dict[Mnemonic, int] = {
    Mnemonic.ADD: 0,
    Mnemonic.SUB: 1,
    Mnemonic.AND: 2,
    Mnemonic.OR: 3,
    Mnemonic.XOR: 4,
    Mnemonic.SLL: 5,
    Mnemonic.SRL: 6,
    Mnemonic.SLT: 7,
}

_SHAPES: Dict[Mnemonic, str] = {
    Mnemonic.LI: "rd,imm",
    Mnemonic.LW: "rd,mem",
    Mnemonic.SW: "rs1,mem",
    Mnemonic.BEQ: "rs1,rs2,target",
    Mnemonic.BNE: "rs1,rs2,target",
    Mnemonic.J: "target",
    Mnemonic.NOP: "",
    Mnemonic.HALT: "",
}
for _mnemonic in (*ALU_OPCODES, Mnemonic.UNIT):
    _SHAPES[_mnemonic] = "rd,rs1,rs2"


@dataclass(frozen=True)
class Instruction:
    """One decoded statement; ``source_line`` is carried but not compared."""

    mnemonic: Mnemonic
    rd: Optional[int] = None
    rs1: Optional[int] = None
    rs2: Optional[int] = None
    imm: Optional[int] = None
    target: Optional[str] = None
    source_line: Optional[int] = field(default=None, compare=False)

    def canonical(self) -> str:
        """Return the canonical text used by traces and the emitter."""
        name = self.mnemonic.value
        shape = _SHAPES[self.mnemonic]
        if shape == "rd,imm":
            return f"{name} r{self.rd}, {self.imm}"
        if shape == "rd,rs1,rs2":
            return f"{name} r{self.rd}, r{self.rs1}, r{self.rs2}"
        if shape == "rd,mem":
            return f"{name} r{self.rd}, {self.imm}(r{self.rs1})"
        if shape == "rs1,mem":
            return f"{name} r{self.rs1}, {self.imm}(r{self.rs2})"
        if shape == "rs1,rs2,target":
            return f"{name} r{self.rs1}, r{self.rs2}, {self.target}"
        if shape == "target":
            return f"{name} {self.target}"
        return name

    def source_registers(self) -> Tuple[int, ...]:
        shape = _SHAPES[self.mnemonic]
        if shape in ("rd,rs1,rs2", "rs1,rs2,target", "rs1,mem"):
            return (int(self.rs1), int(self.rs2))  # type: ignore[arg-type]
        if shape == "rd,mem":
            return (int(self.rs1),)  # type: ignore[arg-type]
        return ()

    def __str__(self) -> str:  # pragma: no cover - trivial
        return self.canonical()


@dataclass(frozen=True)
class Program:
    """An ordered test program with resolved labels."""

    instructions: Tuple[Instruction, ...]
    labels: Mapping[str, int] = field(default_factory=dict)
    word_width: int = 8
    name: str = field(default="program", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "instructions", tuple(self.instructions))
        object.__setattr__(self, "labels", dict(self.labels))

    def __len__(self) -> int:
        return len(self.instructions)

    def labels_at(self, index: int) -> List[str]:
        return [label for label, position in self.labels.items() if position == index]

    def target_index(self, label: str) -> int:
        try:
            return self.labels[label]
        except KeyError as exc:
            raise AsmError(None, f"unresolved label {label!r}") from exc

    def branch_targets(self) -> Set[int]:
        """Instruction indices that some branch or jump can transfer control to."""
        targets: Set[int] = set()
        for instruction in self.instructions:
            if instruction.mnemonic.has_target and instruction.target in self.labels:
                targets.add(self.labels[instruction.target])
        return targets

    def referenced_labels(self) -> Set[str]:
        return {ins.target for ins in self.instructions if ins.mnemonic.has_target and ins.target}


def immediate_range(mnemonic: Mnemonic, word_width: int) -> Tuple[int, int]:
    """Inclusive range of immediates accepted for ``mnemonic``."""
    if mnemonic in (Mnemonic.LW, Mnemonic.SW):
        return -(1 << (ADDRESS_BITS - 1)), (1 << ADDRESS_BITS) - 1
    return -(1 << (word_width - 1)), (1 << word_width) - 1


def header_word_width(text: str) -> Optional[int]:
    """Width recorded in an emitted header line, if the first non-blank line is one."""
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        match = _HEADER_RE.match(line)
        return int(match.group(1)) if match else None
    return None


def parse_program(
    text: str,
    *,
    word_width: Optional[int] = None,
    name: str = "program",
    check_halt: bool = True,
) -> Program:
    """Parse assembly source into a validated Program.

    Without an explicit ``word_width`` the width comes from the
    ``# name (word width N)`` header that ``emit_program`` writes, else 8.
    With ``check_halt=False`` only labels and operands are checked, which
    accepts fragments such as a bare self-loop.
    """
    if word_width is None:
        word_width = header_word_width(text) or DEFAULT_WORD_WIDTH
    if not 1 <= word_width <= 32:
        raise AsmError(None, f"word width {word_width} out of range 1..32")

    instructions: List[Instruction] = []
    labels: Dict[str, int] = {}
    pending: List[Tuple[str, int]] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        statement = raw.split("#", 1)[0].strip()
        while statement:
            match = _LABEL_RE.match(statement)
            if not match:
                break
            label = match.group(1)
            if label in labels or any(label == name_ for name_, _ in pending):
                raise AsmError(line_no, f"duplicate label {label!r}")
            pending.append((label, line_no))
            statement = match.group(2).strip()
        if not statement:
            continue
        instruction = _parse_statement(statement, line_no, word_width)
        for label, _ in pending:
            labels[label] = len(instructions)
        pending.clear()
        instructions.append(instruction)

    if pending:
        label, label_line = pending[0]
        raise AsmError(label_line, f"label {label!r} does not precede an instruction")

    program = Program(instructions=tuple(instructions), labels=labels, word_width=word_width, name=name)
    check_program(program, check_halt=check_halt)
    return program


def check_program(program: Program, *, check_halt: bool = True) -> None:
    """Validate label resolution and the single reachable HALT."""
    for instruction in program.instructions:
        if instruction.mnemonic.has_target and instruction.target not in program.labels:
            raise AsmError(instruction.source_line, f"unresolved label {instruction.target!r}")
    for label, index in program.labels.items():
        if not 0 <= index < len(program.instructions):
            raise AsmError(None, f"label {label!r} points outside the program")
    if not check_halt:
        return

    reachable = _reachable_indices(program)
    halts = [index for index in reachable if program.instructions[index].mnemonic is Mnemonic.HALT]
    if not halts:
        raise AsmError(None, "program has no reachable HALT")
    if len(halts) > 1:
        line = program.instructions[sorted(halts)[1]].source_line
        raise AsmError(line, "program has more than one reachable HALT")


def _reachable_indices(program: Program) -> Set[int]:
    size = len(program.instructions)
    if size == 0:
        return set()
    seen: Set[int] = set()
    worklist = [0]
    while worklist:
        index = worklist.pop()
        if index in seen:
            continue
        seen.add(index)
        instruction = program.instructions[index]
        successors: List[int] = []
        if instruction.mnemonic is Mnemonic.HALT:
            successors = []
        elif instruction.mnemonic is Mnemonic.J:
            successors = [program.labels[instruction.target]]  # type: ignore[index]
        else:
            if instruction.mnemonic.is_branch:
                successors.append(program.labels[instruction.target])  # type: ignore[index]
            if index + 1 >= size:
                raise AsmError(instruction.source_line, "control falls off the end of the program")
            successors.append(index + 1)
        worklist.extend(successors)
    return seen


def emit_program(program: Program) -> str:
    """Render a Program as assembly; labels sit on their own line."""
    by_index: Dict[int, List[str]] = {}
    for label, index in program.labels.items():
        by_index.setdefault(index, []).append(label)

    lines = [f"# {program.name} (word width {program.word_width})"]
    for index, instruction in enumerate(program.instructions):
        for label in by_index.get(index, []):
            lines.append(f"{label}:")
        lines.append(f"    {instruction.canonical()}")
    return "\n".join(lines) + "\n"


def rebuild_program(program: Program, keep: Sequence[bool], *, name: Optional[str] = None) -> Program:
    """Return ``program`` without the instructions whose ``keep`` flag is false.

    Labels on removed instructions are dropped; they must not be branch targets.
    """
    if len(keep) != len(program.instructions):
        raise ValueError("keep mask length must match the program")
    new_index: Dict[int, int] = {}
    kept: List[Instruction] = []
    for index, (instruction, flag) in enumerate(zip(program.instructions, keep)):
        if flag:
            new_index[index] = len(kept)
            kept.append(instruction)

    referenced = program.referenced_labels()
    labels: Dict[str, int] = {}
    for label, index in program.labels.items():
        if index in new_index:
            labels[label] = new_index[index]
        elif label in referenced:
            raise AsmError(None, f"removing instruction {index} would orphan label {label!r}")
    return Program(
        instructions=tuple(kept),
        labels=labels,
        word_width=program.word_width,
        name=name or program.name,
    )


# ---------------------------------------------------------------------- #
# Statement parsing
# ---------------------------------------------------------------------- #
def _parse_statement(statement: str, line_no: int, word_width: int) -> Instruction:
    parts = statement.split(None, 1)
    word = parts[0].lower()
    try:
        mnemonic = Mnemonic(word)
    except ValueError as exc:
        raise AsmError(line_no, f"unknown mnemonic {parts[0]!r}") from exc

    operand_text = parts[1] if len(parts) > 1 else ""
    operands = [item.strip() for item in operand_text.split(",")] if operand_text.strip() else []
    shape = _SHAPES[mnemonic]
    expected = [item for item in shape.split(",") if item]
    if len(operands) != len(expected):
        raise AsmError(
            line_no,
            f"{mnemonic.value} expects {len(expected)} operand(s) ({shape or 'none'}), got {len(operands)}",
        )

    fields: Dict[str, object] = {}
    for role, token in zip(expected, operands):
        if role in ("rd", "rs1", "rs2"):
            fields[role] = _parse_register(token, line_no)
        elif role == "imm":
            fields["imm"] = _parse_immediate(token, line_no, mnemonic, word_width)
        elif role == "target":
            if not _LABEL_NAME_RE.match(token):
                raise AsmError(line_no, f"invalid label reference {token!r}")
            fields["target"] = token
        elif role == "mem":
            match = _MEMORY_RE.match(token)
            if not match:
                raise AsmError(line_no, f"expected memory operand imm(rN), got {token!r}")
            offset_text = match.group(1).strip() or "0"
            fields["imm"] = _parse_immediate(offset_text, line_no, mnemonic, word_width)
            base = _parse_register(match.group(2), line_no)
            # SW keeps its base in rs2 (rs1 is the stored value); LW uses rs1.
            fields["rs2" if mnemonic is Mnemonic.SW else "rs1"] = base

    return Instruction(mnemonic=mnemonic, source_line=line_no, **fields)  # type: ignore[arg-type]


def _parse_register(token: str, line_no: int) -> int:
    match = _REGISTER_RE.match(token)
    if not match:
        raise AsmError(line_no, f"expected register r0..r{NUM_REGISTERS - 1}, got {token!r}")
    index = int(match.group(1))
    if index >= NUM_REGISTERS:
        raise AsmError(line_no, f"register {token!r} out of range")
    return index


def _parse_immediate(token: str, line_no: int, mnemonic: Mnemonic, word_width: int) -> int:
    text = token.strip().lower()
    negative = text.startswith("-")
    digits = text[1:] if negative else text
    try:
        value = int(digits, 16) if digits.startswith("0x") else int(digits, 10)
    except ValueError as exc:
        raise AsmError(line_no, f"invalid immediate {token!r}") from exc
    value = -value if negative else value
    low, high = immediate_range(mnemonic, word_width)
    if not low <= value <= high:
        raise AsmError(line_no, f"immediate {value} out of range [{low}, {high}] for {mnemonic.value}")
    return value


__all__ = [
    "ADDRESS_BITS",
    "ALU_OPCODES",
    "Instruction",
    "Mnemonic",
    "NUM_REGISTERS",
    "Program",
    "check_program",
    "emit_program",
    "header_word_width",
    "immediate_range",
    "parse_program",
    "rebuild_program",
]
