"""Seeded test-program generation."""

from .prng import SplitMix64
from .tpgen import GenConfig, gen_atpg_program, gen_random_program, generate, parse_block_size, select_patterns

__all__ = [
    "GenConfig",
    "SplitMix64",
    "gen_atpg_program",
    "gen_random_program",
    "generate",
    "parse_block_size",
    "select_patterns",
]
