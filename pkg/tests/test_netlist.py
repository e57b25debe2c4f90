from __future__ import annotations

import itertools
import unittest

import tests._path  # noqa: F401

from sbstcompact.circuit.alu import build_reference_alu
from sbstcompact.circuit.netlist import (
    Fault,
    GateKind,
    Pin,
    Polarity,
    dump_netlist,
    enumerate_faults,
    evaluate,
    fault_summary,
    load_netlist,
)
from sbstcompact.errors import NetlistError

SINGLE_AND = "input a0 b0\noutput r0\ngate g1 AND r0 a0 b0\n"

# a0 + b0 + a1 (carry in) -> r0 (sum), r1 (carry out)
FULL_ADDER = """\
input a0 a1 b0
output r0 r1
gate x1 XOR n1 a0 b0
gate x2 XOR r0 n1 a1
gate g1 AND n2 a0 b0
gate g2 AND n3 n1 a1
gate o1 OR r1 n2 n3
"""


class LoadNetlistTests(unittest.TestCase):
    def test_single_gate(self) -> None:
        netlist = load_netlist(SINGLE_AND)
        self.assertEqual(len(netlist.gates), 1)
        self.assertTrue(netlist.is_unit_mode)
        self.assertEqual(netlist.width, 1)
        self.assertEqual(netlist.buses["a"], ("a0",))

    def test_definition_order_does_not_matter(self) -> None:
        netlist = load_netlist("input a0\noutput r0\ngate g1 BUF r0 x\ngate g2 NOT x a0\n")
        self.assertEqual([gate.name for gate in netlist.gates], ["g2", "g1"])

    def test_combinational_cycle(self) -> None:
        with self.assertRaises(NetlistError) as ctx:
            load_netlist("input a0 b0\noutput r0\ngate g1 AND r0 a0 r0\n")
        self.assertIn("cycle", str(ctx.exception))

    def test_malformed_netlists(self) -> None:
        cases = [
            "input a0\noutput r0\ngate g1 AND r0 a0 zz\n",  # undriven
            "input a0\noutput r0\ngate g1 BUF r0 a0\ngate g2 NOT r0 a0\n",  # double driver
            "input a0\noutput r0\ngate g1 MAJ r0 a0 a0\n",  # unknown kind
            "input a0\noutput r0\ngate g1 NOT r0 a0 a0\n",  # wrong fanin
            "input op0 op1 op2 a0 a1 b0\noutput r0 r1\ngate g1 BUF r0 a0\ngate g2 BUF r1 a1\n",
            "input a0 a2\noutput r0\ngate g1 BUF r0 a0\n",  # gap in bus
            "input a0\noutput r0\nwire w1\n",
        ]
        for text in cases:
            with self.subTest(text=text):
                with self.assertRaises(NetlistError):
                    load_netlist(text)

    def test_unknown_statement_reports_line(self) -> None:
        with self.assertRaises(NetlistError) as ctx:
            load_netlist("# header\ninput a0\nwire w1\n")
        self.assertEqual(ctx.exception.line, 3)

    def test_dump_round_trip(self) -> None:
        netlist = load_netlist(FULL_ADDER, name="fa")
        self.assertEqual(load_netlist(dump_netlist(netlist)), netlist)


class EvaluateTests(unittest.TestCase):
    def test_and_gate(self) -> None:
        netlist = load_netlist(SINGLE_AND)
        self.assertEqual(evaluate(netlist, {"a0": 1, "b0": 1}), {"r0": 1})
        fault = Fault(id=4, gate="g1", pin=Pin.OUT, polarity=Polarity.SA0)
        self.assertEqual(evaluate(netlist, {"a0": 1, "b0": 1}, fault), {"r0": 0})

    def test_full_adder_truth_table(self) -> None:
        netlist = load_netlist(FULL_ADDER)
        for x, y, carry_in in itertools.product((0, 1), repeat=3):
            outputs = evaluate(netlist, {"a0": x, "b0": y, "a1": carry_in})
            total = x + y + carry_in
            self.assertEqual(outputs, {"r0": total & 1, "r1": total >> 1})

    def test_missing_input(self) -> None:
        with self.assertRaises(NetlistError):
            evaluate(load_netlist(SINGLE_AND), {"a0": 1})

    def test_fanout_cone(self) -> None:
        netlist = load_netlist(FULL_ADDER)
        cone = [netlist.gates[index].name for index in netlist.fanout_cone("x1")]
        self.assertEqual(cone, ["x1", "x2", "g2", "o1"])


class FaultUniverseTests(unittest.TestCase):
    def test_single_and_has_six_faults(self) -> None:
        faults = enumerate_faults(load_netlist(SINGLE_AND))
        self.assertEqual(len(faults), 6)
        self.assertEqual([fault.id for fault in faults], list(range(6)))
        self.assertEqual(
            [(fault.pin, fault.polarity) for fault in faults[:2]],
            [(Pin.IN1, Polarity.SA0), (Pin.IN1, Polarity.SA1)],
        )
        self.assertEqual(faults[4].site, "g1/out")

    def test_single_not_has_four_faults(self) -> None:
        faults = enumerate_faults(load_netlist("input a0\noutput r0\ngate n1 NOT r0 a0\n"))
        self.assertEqual(len(faults), 4)

    def test_reference_alu_count_matches_gate_list(self) -> None:
        netlist = build_reference_alu(8)
        expected = sum((gate.kind.fanin + 1) * 2 for gate in netlist.gates)
        self.assertEqual(len(enumerate_faults(netlist)), expected)
        self.assertEqual(fault_summary(netlist)["total"], expected)

    def test_fault_summary_by_kind(self) -> None:
        summary = fault_summary(load_netlist(FULL_ADDER))
        self.assertEqual(summary, {"AND": 12, "OR": 6, "XOR": 12, "total": 30})
        self.assertEqual(GateKind.NOT.fanin, 1)


if __name__ == "__main__":
    unittest.main()
