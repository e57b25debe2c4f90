from __future__ import annotations

import unittest

import tests._path  # noqa: F401

from sbstcompact.circuit.alu import build_reference_alu
from sbstcompact.circuit.netlist import enumerate_faults, load_netlist
from sbstcompact.errors import SimulationError
from sbstcompact.program.asm import parse_program
from sbstcompact.simulation.iss import BusEvent, Machine, Termination, run

SINGLE_AND = "input a0 b0\noutput r0\ngate g1 AND r0 a0 b0\n"
AND_PROGRAM = "li r1, 1\nli r2, 1\nunit r3, r1, r2\nsw r3, 0(r0)\nhalt\n"


class RunTests(unittest.TestCase):
    def setUp(self) -> None:
        self.unit_and = load_netlist(SINGLE_AND, name="and1")
        self.alu = build_reference_alu(8)

    def test_minimal_trace(self) -> None:
        trace = run(parse_program("li r1, 5\nhalt"), self.alu)
        self.assertEqual(trace.duration, 2)
        first = trace.records[0]
        self.assertEqual((first.cc, first.pc, first.di), (1, 0, "li r1, 5"))
        self.assertIsNone(first.bus_event)
        self.assertEqual(trace.terminated, Termination.HALT)

    def test_store_through_unit(self) -> None:
        trace = run(parse_program(AND_PROGRAM), self.unit_and)
        self.assertEqual(trace.records[3].bus_event, BusEvent(0, 1, True))
        self.assertEqual(trace.records[2].pattern, "11")

    def test_stuck_output_changes_the_store(self) -> None:
        fault = enumerate_faults(self.unit_and)[4]  # g1/out SA0
        trace = run(parse_program(AND_PROGRAM), self.unit_and, fault)
        self.assertEqual(trace.records[3].bus_event, BusEvent(0, 0, True))

    def test_deterministic(self) -> None:
        program = parse_program(AND_PROGRAM)
        self.assertEqual(run(program, self.unit_and), run(program, self.unit_and))

    def test_cycle_limit(self) -> None:
        program = parse_program("loop: j loop\nhalt\n", check_halt=False)
        trace = run(program, self.alu, max_cycles=10)
        self.assertEqual(trace.duration, 10)
        self.assertEqual(trace.terminated, Termination.CYCLE_LIMIT)
        with self.assertRaises(SimulationError):
            run(program, self.alu, max_cycles=0)

    def test_alu_program_semantics(self) -> None:
        source = """\
    li r1, 200
    li r2, 100
    add r3, r1, r2
    sub r4, r2, r1
    slt r5, r1, r2
    li r0, 7
    sw r3, 0x10(r0)
    sw r4, -1(r0)
    lw r6, 16(r0)
    bne r6, r3, bad
    sw r5, 2(r6)
    halt
bad:
    j bad
"""
        trace = run(parse_program(source), self.alu)
        events = [record.bus_event for record in trace.records if record.bus_event is not None]
        self.assertEqual(
            events,
            [
                BusEvent(0x10, 44, True),  # 300 mod 256
                BusEvent(0xFFFF, 156, True),  # -100 mod 256, address wraps
                BusEvent(0x10, 44, False),
                BusEvent(46, 1, True),  # 200 is negative as a signed byte
            ],
        )
        self.assertEqual(trace.duration, 12)

    def test_register_zero_is_hardwired(self) -> None:
        machine = Machine(parse_program("li r0, 9\nhalt"), self.alu)
        machine.step()
        self.assertEqual(machine.registers[0], 0)

    def test_width_compatibility(self) -> None:
        with self.assertRaises(SimulationError):
            run(parse_program("li r1, 1\nhalt", word_width=4), self.alu)
        with self.assertRaises(SimulationError):
            run(parse_program("add r1, r1, r1\nhalt"), self.unit_and)
        with self.assertRaises(SimulationError):
            run(parse_program(AND_PROGRAM), self.alu)

    def test_trace_csv(self) -> None:
        text = run(parse_program(AND_PROGRAM), self.unit_and).to_csv()
        lines = text.splitlines()
        self.assertEqual(lines[0], "cc,pc,di,pattern,bus_addr,bus_data,bus_we")
        self.assertEqual(lines[3], "3,2,\"unit r3, r1, r2\",11,,,")
        self.assertEqual(lines[4], "4,3,\"sw r3, 0(r0)\",,0,1,1")


if __name__ == "__main__":
    unittest.main()
