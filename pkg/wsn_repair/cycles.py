"""
Cycle values shared by the BLOCK search, the brute-force oracle and the run
analysis: loop reports and the canonical key that lets cycles found by
different means be compared.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Iterable, Sequence

from wsn_repair.topology import LineId, NodeId

# source, interior..., source
Loop = tuple[NodeId, ...]
CycleKey = tuple[NodeId, ...]


class InvalidLoop(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class Block:
    second_node: NodeId
    starter_line: LineId
    loops: tuple[Loop, ...]
    # LECON of every loop of the block, merged
    lines: frozenset[LineId]


@dataclasses.dataclass(frozen=True)
class LoopReport:
    source: NodeId
    blocks: tuple[Block, ...]

    @property
    def nblock(self) -> int:
        return len(self.blocks)

    @property
    def loops(self) -> list[Loop]:
        return [loop for block in self.blocks for loop in block.loops]

    def canonical_cycles(self) -> set[CycleKey]:
        return {canonicalize(loop) for loop in self.loops}


def canonical_cycle(nodes: Sequence[NodeId]) -> CycleKey:
    """
    Rotation and reflection invariant key of a cycle given as its node
    sequence without the closing repetition: rotate the smallest node to the
    front, then keep the smaller of the two directions.
    """
    if len(nodes) < 2:
        raise InvalidLoop(f"a cycle needs at least 2 nodes, got {list(nodes)}")
    if len(set(nodes)) != len(nodes):
        raise InvalidLoop(f"cycle {list(nodes)} repeats a node")
    start = nodes.index(min(nodes))
    rotated = tuple(nodes[start:]) + tuple(nodes[:start])
    reflected = (rotated[0], *reversed(rotated[1:]))
    return min(rotated, reflected)


def canonicalize(loop: Sequence[NodeId]) -> CycleKey:
    if len(loop) < 4:
        raise InvalidLoop(
            f"a loop needs at least 3 distinct nodes, got {'->'.join(map(str, loop))}"
        )
    if loop[0] != loop[-1]:
        raise InvalidLoop(f"loop {'->'.join(map(str, loop))} does not close")
    return canonical_cycle(loop[:-1])


def all_cycles(reports: Iterable[LoopReport]) -> set[CycleKey]:
    return {key for report in reports for key in report.canonical_cycles()}
