"""Seeded test-program generators.

``random-bb`` programs are a register-zeroing prologue followed by straight-line
blocks of the form: load operands, chain ALU operations, store the result to a
block-private address. ``atpg`` programs encode greedily selected execute-unit
patterns, one block per pattern.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from sbstcompact.circuit.batch import PatternBatch
from sbstcompact.circuit.netlist import Netlist, enumerate_faults
from sbstcompact.errors import GeneratorError
from sbstcompact.generation.prng import SplitMix64
from sbstcompact.program.asm import ADDRESS_BITS, ALU_OPCODES, NUM_REGISTERS, Instruction, Mnemonic, Program, parse_program
from sbstcompact.simulation.iss import ExecuteUnit

GENERATOR_MODES = ("random-bb", "atpg")
MIN_BLOCK_SIZE = 3
MAX_BLOCK_SIZE = NUM_REGISTERS  # every non-store instruction needs its own register
_DATA_REGISTERS = tuple(range(1, NUM_REGISTERS))


def parse_block_size(text: str) -> Tuple[int, int]:
    """``"4"`` -> (4, 4); ``"3:6"`` -> (3, 6)."""
    try:
        if ":" in text:
            low, high = (int(part) for part in text.split(":", 1))
        else:
            low = high = int(text)
    except ValueError as exc:
        raise GeneratorError(f"block size {text!r} is not 'k' or 'lo:hi'") from exc
    return low, high


@dataclass
class GenConfig:
    mode: str = "random-bb"
    n_blocks: int = 100
    block_size: Tuple[int, int] = (3, 6)
    seed: int = 0
    word_width: int = 8
    independent: bool = True
    atpg_budget: int = 256

    def __post_init__(self) -> None:
        if isinstance(self.block_size, int):
            self.block_size = (self.block_size, self.block_size)
        low, high = self.block_size
        if self.mode not in GENERATOR_MODES:
            raise GeneratorError(f"unknown generator mode {self.mode!r}")
        if low < MIN_BLOCK_SIZE:
            raise GeneratorError(f"blocks need at least {MIN_BLOCK_SIZE} instructions (load, operate, store)")
        if high < low:
            raise GeneratorError(f"block size range {low}:{high} is empty")
        if high > MAX_BLOCK_SIZE:
            raise GeneratorError(
                f"block size {high} needs {high - 1} distinct registers, only {len(_DATA_REGISTERS)} available"
            )
        if not self.independent and high > MAX_BLOCK_SIZE - 1:
            raise GeneratorError(
                f"block size {high} leaves no register free for the previous block's result"
            )
        if self.n_blocks < 0:
            raise GeneratorError("n_blocks must not be negative")
        if self.n_blocks > (1 << ADDRESS_BITS):
            raise GeneratorError("more blocks than unique store addresses")
        if not 1 <= self.word_width <= 16:
            raise GeneratorError("word width must be between 1 and 16")


def _available_operations(netlist: Netlist) -> List[Mnemonic]:
    if netlist.is_unit_mode:
        return [Mnemonic.UNIT]
    return sorted(ALU_OPCODES, key=ALU_OPCODES.__getitem__)


def _check_width(cfg: GenConfig, netlist: Netlist) -> None:
    if netlist.is_unit_mode and netlist.width > cfg.word_width:
        raise GeneratorError(f"unit netlist is {netlist.width} bits, wider than word width {cfg.word_width}")
    if not netlist.is_unit_mode and netlist.width != cfg.word_width:
        raise GeneratorError(f"netlist is {netlist.width} bits, word width is {cfg.word_width}")


def _prologue() -> List[str]:
    return [f"    li r{register}, 0" for register in _DATA_REGISTERS]


def _epilogue() -> List[str]:
    return ["done:", "    halt"]


def gen_random_program(cfg: GenConfig, netlist: Netlist, *, name: Optional[str] = None) -> Program:
    """Pseudorandom straight-line blocks; the same seed always yields the same text."""
    _check_width(cfg, netlist)
    rng = SplitMix64(cfg.seed)
    operations = _available_operations(netlist)
    low, high = cfg.block_size
    data_limit = 1 << cfg.word_width
    lines = [f"# random-bb seed={cfg.seed} blocks={cfg.n_blocks} size={low}:{high}"]
    lines.extend(_prologue())
    previous_result = 0

    for block in range(cfg.n_blocks):
        size = rng.randint(low, high)
        body = size - 1
        loads = (body + 1) // 2
        pool = [register for register in _DATA_REGISTERS if cfg.independent or register != previous_result]
        registers = rng.sample(pool, body)
        load_registers, result_registers = registers[:loads], registers[loads:]
        fallback = 0 if cfg.independent else previous_result

        lines.append(f"bb{block}:")
        for register in load_registers:
            lines.append(f"    li r{register}, {rng.randbelow(data_limit)}")
        operands = list(load_registers)
        accumulator = operands.pop(0)
        for result in result_registers:
            second = operands.pop(0) if operands else fallback
            mnemonic = rng.choice(operations)
            lines.append(f"    {mnemonic.value} r{result}, r{accumulator}, r{second}")
            accumulator = result
        lines.append(f"    sw r{accumulator}, {block}(r0)")
        previous_result = accumulator

    lines.extend(_epilogue())
    text = "\n".join(lines) + "\n"
    return parse_program(text, word_width=cfg.word_width, name=name or f"random_bb_s{cfg.seed}")


@dataclass(frozen=True)
class SelectedPattern:
    mnemonic: Mnemonic
    a: int
    b: int
    pattern: str
    new_detections: int


def select_patterns(
    netlist: Netlist, cfg: GenConfig, rng: Optional[SplitMix64] = None
) -> List[SelectedPattern]:
    """Greedy random-pattern selection with detection at the netlist outputs.

    Draws from ``rng`` when given, otherwise from a fresh stream seeded with ``cfg.seed``.
    """
    if cfg.atpg_budget <= 0:
        raise GeneratorError("ATPG sample budget must be positive")
    _check_width(cfg, netlist)
    rng = rng if rng is not None else SplitMix64(cfg.seed)
    operations = _available_operations(netlist)
    a_limit = 1 << len(netlist.buses["a"])
    b_limit = 1 << len(netlist.buses["b"])
    unit = ExecuteUnit(netlist, cfg.word_width)

    candidates: List[Tuple[Mnemonic, int, int, str]] = []
    for _ in range(cfg.atpg_budget):
        mnemonic = rng.choice(operations)
        a = rng.randbelow(a_limit)
        b = rng.randbelow(b_limit)
        pattern = unit.pattern(Instruction(mnemonic, rd=3, rs1=1, rs2=2), a, b)
        candidates.append((mnemonic, a, b, pattern))

    faults = enumerate_faults(netlist)
    matrix = PatternBatch(netlist, [item[3] for item in candidates]).detection_matrix(faults)
    covered = np.zeros(len(faults), dtype=bool)
    selected: List[SelectedPattern] = []
    for column, (mnemonic, a, b, pattern) in enumerate(candidates):
        fresh = matrix[:, column] & ~covered
        count = int(fresh.sum())
        if count:
            covered |= matrix[:, column]
            selected.append(SelectedPattern(mnemonic, a, b, pattern, count))
    if not selected:
        raise GeneratorError(f"no sampled pattern detects a fault of {netlist.name!r}")
    return selected


def gen_atpg_program(netlist: Netlist, cfg: GenConfig, *, name: Optional[str] = None) -> Program:
    """One block per selected pattern: load both operands, apply, store."""
    rng = SplitMix64(cfg.seed)
    selected = select_patterns(netlist, cfg, rng)
    lines = [f"# atpg seed={cfg.seed} budget={cfg.atpg_budget} patterns={len(selected)}"]
    lines.extend(_prologue())
    for block, item in enumerate(selected):
        first, second, result = rng.sample(_DATA_REGISTERS, 3)
        lines.append(f"bb{block}:")
        lines.append(f"    li r{first}, {item.a}")
        lines.append(f"    li r{second}, {item.b}")
        lines.append(f"    {item.mnemonic.value} r{result}, r{first}, r{second}")
        lines.append(f"    sw r{result}, {block}(r0)")
    lines.extend(_epilogue())
    text = "\n".join(lines) + "\n"
    return parse_program(text, word_width=cfg.word_width, name=name or f"atpg_s{cfg.seed}")


def generate(cfg: GenConfig, netlist: Netlist, *, name: Optional[str] = None) -> Program:
    if cfg.mode == "atpg":
        return gen_atpg_program(netlist, cfg, name=name)
    return gen_random_program(cfg, netlist, name=name)


__all__ = [
    "GENERATOR_MODES",
    "GenConfig",
    "SelectedPattern",
    "gen_atpg_program",
    "gen_random_program",
    "generate",
    "parse_block_size",
    "select_patterns",
]
