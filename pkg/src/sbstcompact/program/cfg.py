"""Basic-block partitioning and admissible-region detection."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Sequence, Set

import networkx as nx

from sbstcompact.program.asm import Mnemonic, Program


@dataclass(frozen=True)
class BasicBlock:
    id: int
    start: int
    end: int  # inclusive
    is_branch_target: bool
    ends_in_control_flow: bool

    def __len__(self) -> int:
        return self.end - self.start + 1

    def indices(self) -> range:
        return range(self.start, self.end + 1)

    def __contains__(self, index: object) -> bool:
        return isinstance(index, int) and self.start <= index <= self.end

    def to_dict(self) -> Dict[str, object]:
        return {
            "id": self.id,
            "start": self.start,
            "end": self.end,
            "is_branch_target": self.is_branch_target,
            "ends_in_control_flow": self.ends_in_control_flow,
        }


@dataclass(frozen=True)
class AdmissibleRegion:
    block_ids: FrozenSet[int]

    def __contains__(self, block_id: object) -> bool:
        return block_id in self.block_ids

    def __len__(self) -> int:
        return len(self.block_ids)

    def instruction_count(self, bbs: Sequence[BasicBlock]) -> int:
        return sum(len(block) for block in bbs if block.id in self.block_ids)

    def instruction_indices(self, bbs: Sequence[BasicBlock]) -> List[int]:
        return [index for block in bbs if block.id in self.block_ids for index in block.indices()]

    def coverage_pct(self, bbs: Sequence[BasicBlock]) -> float:
        """Instructions in the region over all instructions, in percent."""
        total = sum(len(block) for block in bbs)
        if total == 0:
            return 0.0
        return round(100.0 * self.instruction_count(bbs) / total, 2)

    def body_coverage_pct(self, bbs: Sequence[BasicBlock], program: Program) -> float:
        """Region share of the program body, i.e. excluding entry and HALT framing blocks."""
        framing = framing_block_ids(program, bbs)
        body = sum(len(block) for block in bbs if block.id not in framing)
        if body == 0:
            return 0.0
        return round(100.0 * self.instruction_count(bbs) / body, 2)


def partition_basic_blocks(program: Program) -> List[BasicBlock]:
    """Split ``program`` into basic blocks.

    Leaders are index 0, branch/jump targets, labelled instructions and every
    instruction that follows a control-flow instruction.
    """
    size = len(program.instructions)
    if size == 0:
        return []
    targets = program.branch_targets()
    leaders: Set[int] = {0} | targets | set(program.labels.values())
    for index, instruction in enumerate(program.instructions):
        if instruction.mnemonic.is_control_flow and index + 1 < size:
            leaders.add(index + 1)

    ordered = sorted(index for index in leaders if 0 <= index < size)
    blocks: List[BasicBlock] = []
    for block_id, start in enumerate(ordered):
        end = ordered[block_id + 1] - 1 if block_id + 1 < len(ordered) else size - 1
        blocks.append(
            BasicBlock(
                id=block_id,
                start=start,
                end=end,
                is_branch_target=start in targets,
                ends_in_control_flow=program.instructions[end].mnemonic.is_control_flow,
            )
        )
    return blocks


def block_graph(program: Program, bbs: Sequence[BasicBlock]) -> nx.DiGraph:
    """Control-flow graph over block ids."""
    graph = nx.DiGraph()
    start_to_block = {block.start: block.id for block in bbs}
    for block in bbs:
        graph.add_node(block.id)
    for block in bbs:
        last = program.instructions[block.end]
        if last.mnemonic.has_target:
            target_block = start_to_block[program.labels[last.target]]  # type: ignore[index]
            graph.add_edge(block.id, target_block)
        if last.mnemonic not in (Mnemonic.J, Mnemonic.HALT) and block.id + 1 < len(bbs):
            graph.add_edge(block.id, block.id + 1)
    return graph


def framing_block_ids(program: Program, bbs: Sequence[BasicBlock]) -> Set[int]:
    """Entry block plus blocks terminated by HALT."""
    framing = {bbs[0].id} if bbs else set()
    for block in bbs:
        if program.instructions[block.end].mnemonic is Mnemonic.HALT:
            framing.add(block.id)
    return framing


def find_admissible_region(program: Program, bbs: Sequence[BasicBlock]) -> AdmissibleRegion:
    """Blocks that are straight-line, untargeted, outside framing and executed at most once."""
    if not bbs:
        return AdmissibleRegion(frozenset())
    graph = block_graph(program, bbs)
    start_of = {block.id: block.start for block in bbs}

    # Every cycle contains an edge that goes backwards in program order, so
    # everything reachable from such an edge's head may run more than once.
    repeated: Set[int] = set()
    for source, target in graph.edges:
        if start_of[target] <= start_of[source]:
            repeated.add(target)
            repeated.update(nx.descendants(graph, target))

    framing = framing_block_ids(program, bbs)
    admissible = {
        block.id
        for block in bbs
        if not block.ends_in_control_flow
        and not block.is_branch_target
        and block.id not in repeated
        and block.id not in framing
    }
    return AdmissibleRegion(frozenset(admissible))


def dump_cfg_csv(bbs: Iterable[BasicBlock], region: AdmissibleRegion) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["block_id", "start", "end", "admissible"])
    for block in bbs:
        writer.writerow([block.id, block.start, block.end, int(block.id in region)])
    return buffer.getvalue()


__all__ = [
    "AdmissibleRegion",
    "BasicBlock",
    "block_graph",
    "dump_cfg_csv",
    "find_admissible_region",
    "framing_block_ids",
    "partition_basic_blocks",
]
