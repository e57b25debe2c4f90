from __future__ import annotations

import unittest
from collections import Counter

import tests._path  # noqa: F401

from sbstcompact.circuit.alu import build_reference_alu
from sbstcompact.circuit.batch import PatternBatch
from sbstcompact.circuit.netlist import enumerate_faults, load_netlist
from sbstcompact.errors import GeneratorError
from sbstcompact.generation.tpgen import (
    GenConfig,
    gen_atpg_program,
    gen_random_program,
    generate,
    parse_block_size,
    select_patterns,
)
from sbstcompact.program.asm import Mnemonic, emit_program
from sbstcompact.program.cfg import find_admissible_region, partition_basic_blocks
from sbstcompact.simulation.faultsim import fault_coverage, simulate_all

SINGLE_AND = "input a0 b0\noutput r0\ngate g1 AND r0 a0 b0\n"
PROLOGUE = 15


class RandomProgramTests(unittest.TestCase):
    def setUp(self) -> None:
        self.alu = build_reference_alu(8)

    def test_fixed_block_of_four(self) -> None:
        program = gen_random_program(GenConfig(n_blocks=1, block_size=(4, 4), seed=3), self.alu)
        block = program.instructions[program.labels["bb0"] : program.labels["done"]]
        kinds = Counter(
            "alu" if ins.mnemonic.is_alu else ins.mnemonic.value for ins in block
        )
        self.assertEqual(kinds, Counter({"li": 2, "alu": 1, "sw": 1}))
        self.assertEqual(block[-1].mnemonic, Mnemonic.SW)
        self.assertEqual(program.instructions[-1].mnemonic, Mnemonic.HALT)

    def test_same_seed_same_text(self) -> None:
        first = emit_program(gen_random_program(GenConfig(n_blocks=25, seed=9), self.alu))
        second = emit_program(gen_random_program(GenConfig(n_blocks=25, seed=9), self.alu))
        other = emit_program(gen_random_program(GenConfig(n_blocks=25, seed=10), self.alu))
        self.assertEqual(first, second)
        self.assertNotEqual(first, other)

    def test_reusing_one_config_repeats_the_program(self) -> None:
        cfg = GenConfig(n_blocks=5, seed=42)
        first = emit_program(gen_random_program(cfg, self.alu))
        second = emit_program(gen_random_program(cfg, self.alu))
        self.assertEqual(first, second)
        self.assertEqual(first, emit_program(gen_random_program(GenConfig(n_blocks=5, seed=42), self.alu)))

    def test_blocks_are_admissible_and_sized(self) -> None:
        program = gen_random_program(GenConfig(n_blocks=30, block_size=(3, 6), seed=5), self.alu)
        bbs = partition_basic_blocks(program)
        region = find_admissible_region(program, bbs)
        self.assertEqual(len(region), 30)
        self.assertEqual(region.body_coverage_pct(bbs, program), 100.0)
        sizes = {len(block) for block in bbs if block.id in region}
        self.assertTrue(sizes <= {3, 4, 5, 6})
        self.assertEqual(program.name, "random_bb_s5")

    def test_store_addresses_are_unique(self) -> None:
        program = gen_random_program(GenConfig(n_blocks=50, seed=1), self.alu)
        offsets = [ins.imm for ins in program.instructions if ins.mnemonic is Mnemonic.SW]
        self.assertEqual(offsets, list(range(50)))

    def test_dependent_blocks_chain_through_the_previous_result(self) -> None:
        cfg = GenConfig(n_blocks=4, block_size=(3, 3), seed=11, independent=False)
        program = gen_random_program(cfg, self.alu)
        ops = [ins for ins in program.instructions if ins.mnemonic.is_alu]
        stores = [ins for ins in program.instructions if ins.mnemonic is Mnemonic.SW]
        self.assertEqual(ops[0].rs2, 0)
        for index in range(1, 4):
            self.assertEqual(ops[index].rs2, stores[index - 1].rs1)

    def test_independent_blocks_use_zero_as_filler(self) -> None:
        program = gen_random_program(GenConfig(n_blocks=4, block_size=(3, 3), seed=11), self.alu)
        self.assertTrue(all(ins.rs2 == 0 for ins in program.instructions if ins.mnemonic.is_alu))

    def test_unit_netlist_uses_unit(self) -> None:
        netlist = load_netlist(SINGLE_AND)
        program = gen_random_program(GenConfig(n_blocks=3, seed=2), netlist)
        ops = {ins.mnemonic for ins in program.instructions[PROLOGUE:] if ins.mnemonic not in (Mnemonic.LI, Mnemonic.SW)}
        self.assertEqual(ops, {Mnemonic.UNIT, Mnemonic.HALT})

    def test_invalid_settings(self) -> None:
        for kwargs in (
            {"block_size": (2, 2)},
            {"block_size": (5, 4)},
            {"block_size": (17, 17)},
            {"block_size": (16, 16), "independent": False},
            {"mode": "exhaustive"},
            {"n_blocks": -1},
            {"word_width": 0},
        ):
            with self.subTest(kwargs=kwargs):
                with self.assertRaises(GeneratorError):
                    GenConfig(**kwargs)
        with self.assertRaises(GeneratorError):
            gen_random_program(GenConfig(word_width=4), self.alu)

    def test_parse_block_size(self) -> None:
        self.assertEqual(parse_block_size("4"), (4, 4))
        self.assertEqual(parse_block_size("3:6"), (3, 6))
        with self.assertRaises(GeneratorError):
            parse_block_size("three")


class AtpgProgramTests(unittest.TestCase):
    def setUp(self) -> None:
        self.netlist = load_netlist(SINGLE_AND)
        self.faults = enumerate_faults(self.netlist)

    def test_selected_patterns_cover_every_detectable_fault(self) -> None:
        selected = select_patterns(self.netlist, GenConfig(mode="atpg", atpg_budget=64, seed=4))
        self.assertTrue({(item.a, item.b) for item in selected} <= {(0, 0), (0, 1), (1, 0), (1, 1)})
        matrix = PatternBatch(self.netlist, [item.pattern for item in selected]).detection_matrix(self.faults)
        self.assertTrue(matrix.any(axis=1).all())
        self.assertEqual(sum(item.new_detections for item in selected), len(self.faults))

    def test_reusing_one_config_repeats_the_selection(self) -> None:
        cfg = GenConfig(mode="atpg", atpg_budget=64, seed=4)
        self.assertEqual(select_patterns(self.netlist, cfg), select_patterns(self.netlist, cfg))
        first = emit_program(gen_atpg_program(self.netlist, cfg))
        self.assertEqual(first, emit_program(gen_atpg_program(self.netlist, cfg)))

    def test_program_reaches_unit_level_coverage_at_the_bus(self) -> None:
        cfg = GenConfig(mode="atpg", atpg_budget=64, seed=4)
        program = generate(cfg, self.netlist)
        self.assertEqual(program.name, "atpg_s4")
        report = simulate_all(program, self.netlist, self.faults)
        self.assertEqual(fault_coverage(report), 100.0)

    def test_blocks_have_four_instructions(self) -> None:
        program = gen_atpg_program(build_reference_alu(4), GenConfig(mode="atpg", atpg_budget=32, word_width=4))
        bbs = partition_basic_blocks(program)
        region = find_admissible_region(program, bbs)
        self.assertTrue(all(len(block) == 4 for block in bbs if block.id in region))
        self.assertGreater(len(region), 0)

    def test_zero_budget(self) -> None:
        with self.assertRaises(GeneratorError):
            gen_atpg_program(self.netlist, GenConfig(mode="atpg", atpg_budget=0))


if __name__ == "__main__":
    unittest.main()
