"""Unit-latency instruction-set simulator with a gate-level execute unit."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, MutableMapping, Optional, Sequence, Tuple

from sbstcompact.circuit.netlist import Fault, Netlist, evaluate
from sbstcompact.errors import SimulationError
from sbstcompact.program.asm import ADDRESS_BITS, ALU_OPCODES, NUM_REGISTERS, Instruction, Mnemonic, Program

ADDRESS_MASK = (1 << ADDRESS_BITS) - 1
DEFAULT_MAX_CYCLES = 1_000_000


class Termination(str, Enum):
    HALT = "HALT"
    CYCLE_LIMIT = "cycle-limit"


@dataclass(frozen=True)
class BusEvent:
    address: int
    data: int
    is_write: bool


@dataclass(frozen=True)
class TraceRecord:
    cc: int
    pc: int
    di: str
    pattern: Optional[str] = None
    bus_event: Optional[BusEvent] = None


@dataclass(frozen=True)
class TraceReport:
    records: Tuple[TraceRecord, ...]
    program_name: str
    terminated: Termination

    @property
    def duration(self) -> int:
        return len(self.records)

    def bus_events(self) -> Dict[int, BusEvent]:
        return {record.cc: record.bus_event for record in self.records if record.bus_event is not None}

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["cc", "pc", "di", "pattern", "bus_addr", "bus_data", "bus_we"])
        for record in self.records:
            event = record.bus_event
            writer.writerow(
                [
                    record.cc,
                    record.pc,
                    record.di,
                    record.pattern or "",
                    "" if event is None else event.address,
                    "" if event is None else event.data,
                    "" if event is None else int(event.is_write),
                ]
            )
        return buffer.getvalue()


def check_compatibility(program: Program, netlist: Netlist) -> None:
    """Reject program/netlist pairs the micro-architecture cannot execute."""
    uses = {instruction.mnemonic for instruction in program.instructions}
    if netlist.is_unit_mode:
        if netlist.width > program.word_width:
            raise SimulationError(
                f"width mismatch: unit netlist is {netlist.width} bits, program word width is {program.word_width}"
            )
        alu = sorted(mnemonic.value for mnemonic in uses if mnemonic.is_alu)
        if alu:
            raise SimulationError(f"netlist {netlist.name!r} has no op bus; cannot execute {', '.join(alu)}")
    else:
        if netlist.width != program.word_width:
            raise SimulationError(
                f"width mismatch: netlist is {netlist.width} bits, program word width is {program.word_width}"
            )
        if Mnemonic.UNIT in uses:
            raise SimulationError(f"UNIT needs a unit-mode netlist; {netlist.name!r} has an op bus")


class ExecuteUnit:
    """Drives the netlist ports for one instruction and memoises results per pattern."""

    def __init__(self, netlist: Netlist, word_width: int, fault: Optional[Fault] = None) -> None:
        self.netlist = netlist
        self.fault = fault
        self.word_mask = (1 << word_width) - 1
        self._results: Dict[str, int] = {}
        self._position = {port: index for index, port in enumerate(netlist.inputs)}

    def pattern(self, instruction: Instruction, a: int, b: int) -> str:
        bits = ["0"] * len(self.netlist.inputs)
        buses = self.netlist.buses
        if instruction.mnemonic.is_alu:
            opcode = ALU_OPCODES[instruction.mnemonic]
            for bit, port in enumerate(buses["op"]):
                bits[self._position[port]] = "1" if (opcode >> bit) & 1 else "0"
        for bit, port in enumerate(buses["a"]):
            bits[self._position[port]] = "1" if (a >> bit) & 1 else "0"
        for bit, port in enumerate(buses["b"]):
            bits[self._position[port]] = "1" if (b >> bit) & 1 else "0"
        return "".join(bits)

    def result(self, pattern: str) -> int:
        cached = self._results.get(pattern)
        if cached is not None:
            return cached
        assignment = {port: int(char) for port, char in zip(self.netlist.inputs, pattern)}
        outputs = evaluate(self.netlist, assignment, self.fault)
        value = sum(outputs[port] << bit for bit, port in enumerate(self.netlist.buses["r"]))
        value &= self.word_mask
        self._results[pattern] = value
        return value


class Machine:
    """Architectural state plus single-step execution.

    A machine can start from any state, which lets fault simulation resume a
    faulty run from a fault-free snapshot.
    """

    def __init__(
        self,
        program: Program,
        netlist: Netlist,
        fault: Optional[Fault] = None,
        *,
        registers: Optional[Sequence[int]] = None,
        pc: int = 0,
        cycle: int = 0,
        memory: Optional[MutableMapping[int, int]] = None,
        unit: Optional[ExecuteUnit] = None,
        validate: bool = True,
    ) -> None:
        if validate:
            check_compatibility(program, netlist)
        self.program = program
        self.unit = unit or ExecuteUnit(netlist, program.word_width, fault)
        self.registers: List[int] = list(registers) if registers is not None else [0] * NUM_REGISTERS
        self.pc = pc
        self.cycle = cycle
        self.memory: MutableMapping[int, int] = memory if memory is not None else {}
        self.halted = False
        self._word_mask = (1 << program.word_width) - 1

    def _write(self, register: Optional[int], value: int) -> None:
        if register:
            self.registers[register] = value & self._word_mask

    def step(self) -> TraceRecord:
        if self.halted:
            raise SimulationError("machine already halted")
        if not 0 <= self.pc < len(self.program.instructions):
            raise SimulationError(f"pc {self.pc} outside program {self.program.name!r}")
        pc = self.pc
        instruction = self.program.instructions[pc]
        mnemonic = instruction.mnemonic
        regs = self.registers
        self.cycle += 1
        next_pc = pc + 1
        pattern: Optional[str] = None
        event: Optional[BusEvent] = None

        if mnemonic is Mnemonic.LI:
            self._write(instruction.rd, int(instruction.imm))  # type: ignore[arg-type]
        elif mnemonic.uses_execute_unit:
            a = regs[int(instruction.rs1)]  # type: ignore[arg-type]
            b = regs[int(instruction.rs2)]  # type: ignore[arg-type]
            pattern = self.unit.pattern(instruction, a, b)
            self._write(instruction.rd, self.unit.result(pattern))
        elif mnemonic is Mnemonic.SW:
            address = (regs[int(instruction.rs2)] + int(instruction.imm)) & ADDRESS_MASK  # type: ignore[arg-type]
            data = regs[int(instruction.rs1)]  # type: ignore[arg-type]
            self.memory[address] = data
            event = BusEvent(address, data, True)
        elif mnemonic is Mnemonic.LW:
            address = (regs[int(instruction.rs1)] + int(instruction.imm)) & ADDRESS_MASK  # type: ignore[arg-type]
            data = self.memory.get(address, 0)
            self._write(instruction.rd, data)
            event = BusEvent(address, data, False)
        elif mnemonic.is_branch:
            equal = regs[int(instruction.rs1)] == regs[int(instruction.rs2)]  # type: ignore[arg-type]
            if equal == (mnemonic is Mnemonic.BEQ):
                next_pc = self.program.labels[str(instruction.target)]
        elif mnemonic is Mnemonic.J:
            next_pc = self.program.labels[str(instruction.target)]
        elif mnemonic is Mnemonic.HALT:
            self.halted = True
            next_pc = pc

        self.pc = next_pc
        return TraceRecord(cc=self.cycle, pc=pc, di=instruction.canonical(), pattern=pattern, bus_event=event)


def run(
    program: Program,
    netlist: Netlist,
    fault: Optional[Fault] = None,
    max_cycles: int = DEFAULT_MAX_CYCLES,
) -> TraceReport:
    """Execute ``program`` until HALT or ``max_cycles`` records."""
    if max_cycles < 1:
        raise SimulationError("max_cycles must be positive")
    machine = Machine(program, netlist, fault)
    records: List[TraceRecord] = []
    while not machine.halted and machine.cycle < max_cycles:
        records.append(machine.step())
    terminated = Termination.HALT if machine.halted else Termination.CYCLE_LIMIT
    return TraceReport(records=tuple(records), program_name=program.name, terminated=terminated)


__all__ = [
    "BusEvent",
    "ExecuteUnit",
    "Machine",
    "Termination",
    "TraceRecord",
    "TraceReport",
    "check_compatibility",
    "run",
]
