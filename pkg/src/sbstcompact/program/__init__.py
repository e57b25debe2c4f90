"""Test-program representation: assembly and control-flow analysis."""

from .asm import Instruction, Mnemonic, Program, emit_program, parse_program, rebuild_program
from .cfg import AdmissibleRegion, BasicBlock, dump_cfg_csv, find_admissible_region, partition_basic_blocks

__all__ = [
    "AdmissibleRegion",
    "BasicBlock",
    "Instruction",
    "Mnemonic",
    "Program",
    "dump_cfg_csv",
    "emit_program",
    "find_admissible_region",
    "parse_program",
    "partition_basic_blocks",
    "rebuild_program",
]
