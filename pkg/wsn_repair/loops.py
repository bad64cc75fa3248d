"""
BLOCK-based enumeration of the simple cycles through a source node.

The search walks the line-node incidence matrix (LNI) depth first. Loops
sharing the node right after the source form a BLOCK; each block starts
along one of the source's lines, which is then removed from the LNI so that
later blocks never close a loop through it again.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Sequence

from wsn_repair import log, template
from wsn_repair.cycles import Block, Loop, LoopReport
from wsn_repair.topology import (
    LineId,
    LniMatrix,
    NodeId,
    Topology,
    UnknownNode,
    build_lni,
    remove_line,
    remove_node_lines,
)


@dataclasses.dataclass
class SearchState:
    """
    Working memory of one block search.

    `row` is the partial loop being extended (K2 = its length) and
    `row_lines` the lines it travels. Completed loops are copied to
    `loop_rows` (K1 = their count) with their line sets in `lecon`.
    `lcon[node]` holds the lines already tried out of `node` at its current
    depth; it is cleared when the search backs out of the node.
    """

    source: NodeId
    row: list[NodeId]
    row_lines: list[LineId]
    loop_rows: list[Loop] = dataclasses.field(default_factory=list)
    lecon: list[frozenset[LineId]] = dataclasses.field(default_factory=list)
    lcon: dict[NodeId, set[LineId]] = dataclasses.field(default_factory=dict)
    level: int = 1
    nrestnode: NodeId | None = None
    itn: bool = False
    lbs1: NodeId | None = None
    lbs2: NodeId | None = None

    @property
    def k1(self) -> int:
        return len(self.loop_rows)

    @property
    def k2(self) -> int:
        return len(self.row)

    def advance(self, line: LineId, node: NodeId) -> None:
        self.row.append(node)
        self.row_lines.append(line)
        self.level += 1
        self.itn = False

    def record_loop(self, closing_line: LineId) -> None:
        self.loop_rows.append((*self.row, self.source))
        self.lecon.append(frozenset([*self.row_lines, closing_line]))

    def backtrack(self) -> None:
        node = self.row.pop()
        self.row_lines.pop()
        self.lcon.pop(node, None)
        self.level -= 1
        self.itn = True
        self.lbs1 = node
        self.lbs2 = self.row[-1] if self.row else None


def _search_block(
    lni: LniMatrix, source: NodeId, starter_line: LineId, second: NodeId
) -> SearchState:
    state = SearchState(source=source, row=[source, second], row_lines=[starter_line])

    while len(state.row) >= 2:
        node = state.row[-1]
        state.nrestnode = node
        tried = state.lcon.setdefault(node, set())
        for line, end_node in lni.row(node):
            if line in tried:
                continue
            tried.add(line)
            if end_node == source:
                if len(state.row) >= 3:
                    state.record_loop(closing_line=line)
                continue
            if end_node in state.row:
                continue
            state.advance(line, end_node)
            break
        else:
            state.backtrack()

    return state


def search_from_source(lni: LniMatrix, source: NodeId) -> LoopReport:
    """
    Run the block searches of `source` over `lni`. The first d-1 source
    lines (ascending LineId) start a block each; the last one can only close
    loops.
    """
    source_lines = list(lni.row(source))
    blocks: list[Block] = []
    for starter_line, second in source_lines[:-1]:
        lni = remove_line(lni, starter_line)
        state = _search_block(lni, source, starter_line, second)
        log.debug(
            f"Source {source}, block {second} (line {starter_line}): "
            f"{state.k1} loop(s)"
        )
        if not state.loop_rows:
            continue
        blocks.append(
            Block(
                second_node=second,
                starter_line=starter_line,
                loops=tuple(state.loop_rows),
                lines=frozenset().union(*state.lecon),
            )
        )
    return LoopReport(source=source, blocks=tuple(blocks))


def enumerate_loops_from_source(topology: Topology, source: NodeId) -> LoopReport:
    if source not in topology.nodes:
        raise UnknownNode(f"unknown node {source}")
    return search_from_source(build_lni(topology), source)


def enumerate_all_loops(topology: Topology) -> list[LoopReport]:
    """
    Successive sources in ascending id, each searched on the network reduced
    by all previous sources, until fewer than 3 nodes remain.
    """
    lni = build_lni(topology)
    node_ids = topology.node_ids
    reports = []
    for index, source in enumerate(node_ids):
        if len(node_ids) - index < 3:
            break
        reports.append(search_from_source(lni, source))
        lni = remove_node_lines(lni, source)
    return reports


def render_loop_reports(reports: Sequence[LoopReport], with_sources: bool) -> str:
    return template.render("loops.txt.j2", reports=reports, with_sources=with_sources)
