from __future__ import annotations

import unittest

import tests._path  # noqa: F401

from sbstcompact.circuit.alu import build_reference_alu
from sbstcompact.circuit.netlist import enumerate_faults, load_netlist
from sbstcompact.compaction.compactor import (
    Label,
    LabeledProgram,
    compact,
    compact_library,
    describe_program,
    features_from_report,
    label_instructions,
    reduce_program,
    verify,
)
from sbstcompact.config import RunConfig
from sbstcompact.errors import InconsistentTraceError
from sbstcompact.generation.tpgen import GenConfig, gen_random_program
from sbstcompact.program.asm import emit_program, parse_program
from sbstcompact.program.cfg import find_admissible_region, partition_basic_blocks
from sbstcompact.simulation.faultsim import FaultSimReport, golden_run, simulate_all
from sbstcompact.simulation.iss import run

SINGLE_AND = "input a0 b0\noutput r0\ngate g1 AND r0 a0 b0\n"
AND_PROGRAM = "li r1, 1\nli r2, 1\nunit r3, r1, r2\nsw r3, 0(r0)\nhalt\n"

DUPLICATED = """\
    li r1, 0
    li r2, 0
bb0:
    li r1, 5
    li r2, 3
    add r3, r1, r2
    sw r3, 0(r0)
bb1:
    li r1, 5
    li r2, 3
    add r3, r1, r2
    sw r3, 1(r0)
done:
    halt
"""

LOOP_PROGRAM = """\
    li r1, 3
    li r2, 1
loop:
    sub r1, r1, r2
    or r3, r1, r2
    bne r1, r0, loop
    sw r3, 4(r0)
    halt
"""

MIXED = """\
    li r1, 0
    li r2, 0
bb0:
    li r1, 5
    li r2, 3
    add r3, r1, r2
    sw r3, 0(r0)
bb1:
    li r1, 5
    li r2, 3
    add r3, r1, r2
    sw r3, 1(r0)
bb2:
    li r1, 6
    li r2, 1
    srl r4, r1, r2
    sw r4, 2(r0)
    beq r4, r0, skip
    li r5, 2
    xor r6, r5, r1
    sw r6, 3(r0)
skip:
    slt r7, r2, r1
    sw r7, 4(r0)
bb4:
    li r1, 7
    li r2, 7
    and r3, r1, r2
    sw r3, 5(r0)
done:
    halt
"""


def _config() -> RunConfig:
    return RunConfig(word_width=4, max_cycles=10_000)


class LabelingTests(unittest.TestCase):
    def test_store_of_single_and_is_essential(self) -> None:
        netlist = load_netlist(SINGLE_AND)
        program = parse_program(AND_PROGRAM)
        fsr = simulate_all(program, netlist, enumerate_faults(netlist))
        labeled = label_instructions(program, run(program, netlist), fsr)
        self.assertEqual(labeled.essential_indices(), frozenset({3}))
        self.assertEqual(labeled.labels[0], Label.NOT_ESSENTIAL)

    def test_no_detections_means_nothing_is_essential(self) -> None:
        netlist = load_netlist(SINGLE_AND)
        program = parse_program(AND_PROGRAM)
        fsr = FaultSimReport(total_faults=6, detections={}, per_cycle={})
        labeled = label_instructions(program, run(program, netlist), fsr)
        self.assertEqual(labeled.essential_indices(), frozenset())

    def test_repeated_pc_is_tagged_once(self) -> None:
        netlist = build_reference_alu(4)
        program = parse_program(LOOP_PROGRAM, word_width=4)
        trace = run(program, netlist)
        self.assertEqual((trace.records[2].pc, trace.records[5].pc), (2, 2))
        fsr = FaultSimReport(total_faults=4, detections={0: 3, 1: 6}, per_cycle={3: 1, 6: 1})
        labeled = label_instructions(program, trace, fsr)
        self.assertEqual(labeled.essential_indices(), frozenset({2}))

    def test_inconsistent_trace(self) -> None:
        netlist = load_netlist(SINGLE_AND)
        program = parse_program(AND_PROGRAM)
        other = parse_program("li r1, 1\nli r2, 1\nunit r4, r1, r2\nsw r4, 0(r0)\nhalt\n")
        fsr = FaultSimReport(total_faults=6, detections={0: 4}, per_cycle={4: 1})
        with self.assertRaises(InconsistentTraceError):
            label_instructions(program, run(other, netlist), fsr)
        with self.assertRaises(InconsistentTraceError):
            label_instructions(program, run(program, netlist), FaultSimReport(6, {0: 99}, {99: 1}))


class ReductionTests(unittest.TestCase):
    def setUp(self) -> None:
        self.program = parse_program(DUPLICATED, word_width=4)
        self.bbs = partition_basic_blocks(self.program)
        self.region = find_admissible_region(self.program, self.bbs)

    def test_nothing_essential_leaves_only_framing(self) -> None:
        labeled = LabeledProgram(self.program, tuple([Label.NOT_ESSENTIAL] * len(self.program.instructions)))
        reduced, removed = reduce_program(labeled, self.region, self.bbs)
        self.assertEqual(removed, frozenset({1, 2}))
        self.assertEqual([ins.canonical() for ins in reduced.instructions], ["li r1, 0", "li r2, 0", "halt"])
        self.assertEqual(reduced.labels, {"done": 2})
        self.assertEqual(reduced.name, "program.compact")

    def test_one_essential_instruction_keeps_the_block(self) -> None:
        labels = [Label.NOT_ESSENTIAL] * len(self.program.instructions)
        labels[7] = Label.ESSENTIAL  # li r2, 3 in bb1
        reduced, removed = reduce_program(LabeledProgram(self.program, tuple(labels)), self.region, self.bbs)
        self.assertEqual(removed, frozenset({1}))
        self.assertEqual(len(reduced.instructions), 7)


class CompactTests(unittest.TestCase):
    def test_duplicated_block_is_removed_with_one_simulation(self) -> None:
        netlist = build_reference_alu(4)
        program = parse_program(DUPLICATED, word_width=4, name="dup")
        result, report = compact(program, netlist, _config())
        self.assertEqual(result.fault_sim_invocations, 1)
        self.assertEqual(report.fault_sim_invocations, 1)
        self.assertEqual(result.removed_block_ids, frozenset({2}))
        self.assertEqual(result.compacted_size, 7)
        self.assertEqual((report.original_duration_cc, report.duration_cc), (11, 7))
        self.assertEqual(report.detected_compacted, report.detected_original)
        self.assertEqual(report.diff_fc_pct, 0.0)
        self.assertEqual(report.size_reduction_pct, 36.36)
        self.assertEqual((report.region_size_original, report.region_size_compacted), (8, 4))
        self.assertEqual(result.verification_report.detected_ids(), result.original_report.detected_ids())
        self.assertEqual(result.compacted.name, "dup.compact")
        self.assertEqual(parse_program(emit_program(result.compacted), word_width=4), result.compacted)

    def test_program_without_admissible_blocks_is_unchanged(self) -> None:
        netlist = build_reference_alu(4)
        program = parse_program("li r1, 5\nli r2, 3\nadd r3, r1, r2\nsw r3, 0(r0)\nhalt", word_width=4)
        result, report = compact(program, netlist, _config())
        self.assertEqual(result.compacted.instructions, program.instructions)
        self.assertEqual(report.size_reduction_pct, 0.0)
        self.assertEqual(report.duration_reduction_pct, 0.0)
        self.assertEqual(report.to_dict()["diff_fc"], "0.00")

    def test_independent_blocks_lose_no_coverage(self) -> None:
        netlist = build_reference_alu(4)
        cfg = GenConfig(n_blocks=40, block_size=(3, 6), seed=42, word_width=4, independent=True)
        program = gen_random_program(cfg, netlist)
        result, report = compact(program, netlist, _config())
        self.assertEqual(report.diff_fc_pct, 0.0)
        self.assertEqual(report.detected_compacted, report.detected_original)
        self.assertLessEqual(result.compacted_size, result.original_size)
        self.assertGreater(len(result.removed_block_ids), 0)

    def test_verify_identity(self) -> None:
        netlist = load_netlist(SINGLE_AND)
        program = parse_program(AND_PROGRAM)
        report = verify(program, program, netlist)
        self.assertEqual(report.size_reduction_pct, 0.0)
        self.assertEqual(report.duration_reduction_pct, 0.0)
        self.assertEqual(report.diff_fc_pct, 0.0)
        self.assertEqual(report.fc_original_pct, 50.0)
        self.assertEqual(report.fault_sim_invocations, 0)

    def test_library_coverage_is_a_union(self) -> None:
        netlist = load_netlist(SINGLE_AND)
        ones = parse_program(AND_PROGRAM, name="ones")
        zeros = parse_program("li r1, 0\nli r2, 1\nunit r3, r1, r2\nsw r3, 0(r0)\nhalt\n", name="zeros")
        results, library = compact_library([ones, zeros], netlist, RunConfig())
        self.assertEqual(len(results), 2)
        self.assertEqual(library.total_faults, 6)
        # {in1 SA0, in2 SA0, out SA0} plus {in1 SA1, out SA1}
        self.assertEqual(library.detected_original, 5)
        self.assertEqual(library.fc_original_pct, 83.33)
        self.assertEqual(library.totals.fault_sim_invocations, 2)
        self.assertIn("Admissible region", library.render_text())

    def test_features(self) -> None:
        netlist = build_reference_alu(4)
        program = parse_program(DUPLICATED, word_width=4, name="dup")
        features = describe_program(program, netlist, _config())
        self.assertEqual(features.size_instr, 11)
        self.assertEqual(features.duration_cc, 11)
        self.assertEqual(features.admissible_pct, 100.0)
        _, report = compact(program, netlist, _config())
        self.assertEqual(features_from_report(program, report), features)

    def test_golden_durations_match_report(self) -> None:
        netlist = build_reference_alu(4)
        program = parse_program(DUPLICATED, word_width=4)
        result, _ = compact(program, netlist, _config())
        self.assertEqual(golden_run(result.compacted, netlist).duration, result.compacted_duration_cc)


class BruteForceTests(unittest.TestCase):
    def test_labeling_and_reduction_match_per_fault_runs(self) -> None:
        netlist = build_reference_alu(3)
        program = parse_program(MIXED, word_width=3)
        faults = enumerate_faults(netlist)[::2]
        self.assertLessEqual(len(program.instructions), 30)

        golden = run(program, netlist)
        essential = set()
        for fault in faults:
            faulty = run(program, netlist, fault, 200)
            for index, record in enumerate(golden.records):
                faulty_event = faulty.records[index].bus_event if index < faulty.duration else None
                if faulty_event != record.bus_event:
                    essential.add(record.pc)
                    break

        fsr = simulate_all(program, netlist, faults, 200)
        labeled = label_instructions(program, golden, fsr)
        self.assertEqual(set(labeled.essential_indices()), essential)

        bbs = partition_basic_blocks(program)
        region = find_admissible_region(program, bbs)
        expected_removed = {
            block.id for block in bbs if block.id in region and not essential.intersection(block.indices())
        }
        reduced, removed = reduce_program(labeled, region, bbs)
        self.assertEqual(set(removed), expected_removed)
        kept = [
            ins for index, ins in enumerate(program.instructions)
            if not any(index in block for block in bbs if block.id in removed)
        ]
        self.assertEqual(list(reduced.instructions), kept)
        self.assertEqual(parse_program(emit_program(reduced), word_width=3), reduced)


class MonotoneReductionTests(unittest.TestCase):
    def test_appending_a_duplicate_block_never_removes_fewer_blocks(self) -> None:
        netlist = build_reference_alu(4)
        for seed in range(5):
            program = gen_random_program(GenConfig(n_blocks=15, seed=seed, word_width=4, independent=True), netlist)
            lines = emit_program(program).splitlines()
            start, stop = lines.index("bb0:"), lines.index("bb1:")
            done = lines.index("done:")
            extended_text = "\n".join(lines[:done] + ["dup:"] + lines[start + 1 : stop] + lines[done:]) + "\n"
            extended = parse_program(extended_text, name="extended")
            with self.subTest(seed=seed):
                base, _ = compact(program, netlist, _config())
                grown, report = compact(extended, netlist, _config())
                self.assertGreaterEqual(len(grown.removed_block_ids), len(base.removed_block_ids))
                dup_start = extended.labels["dup"]
                dup_block = next(block for block in partition_basic_blocks(extended) if block.start == dup_start)
                self.assertIn(dup_block.id, grown.removed_block_ids)
                self.assertEqual(report.diff_fc_pct, 0.0)


if __name__ == "__main__":
    unittest.main()
