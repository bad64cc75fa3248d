"""
Brute-force cycle enumeration on top of networkx, used to check the BLOCK
search. Nothing here goes through the LNI.
"""

from __future__ import annotations

import itertools

import networkx as nx

from wsn_repair.cycles import Block, CycleKey, Loop, LoopReport, canonical_cycle
from wsn_repair.topology import NodeId, Topology, UnknownNode


def _loops_through(graph: nx.Graph, source: NodeId) -> list[Loop]:
    neighbors = sorted(graph.neighbors(source))
    rest = graph.subgraph(n for n in graph.nodes if n != source)
    loops: list[Loop] = []
    for first, last in itertools.combinations(neighbors, 2):
        for path in nx.all_simple_paths(rest, first, last):
            loops.append((source, *path, source))
    return sorted(loops)


def oracle_cycles_through(topology: Topology, source: NodeId) -> set[CycleKey]:
    if source not in topology.nodes:
        raise UnknownNode(f"unknown source node {source}")
    return {
        canonical_cycle(loop[:-1])
        for loop in _loops_through(topology.graph(), source)
    }


def oracle_all_cycles(topology: Topology) -> set[CycleKey]:
    return {
        canonical_cycle(cycle)
        for cycle in nx.simple_cycles(topology.graph())
        if len(cycle) >= 3
    }


def _report(graph: nx.Graph, source: NodeId) -> LoopReport:
    by_second: dict[NodeId, list[Loop]] = {}
    for loop in _loops_through(graph, source):
        by_second.setdefault(loop[1], []).append(loop)

    blocks = []
    for second, loops in sorted(by_second.items()):
        lines = frozenset(
            graph.edges[a, b]["line"] for loop in loops for a, b in itertools.pairwise(loop)
        )
        blocks.append(
            Block(
                second_node=second,
                starter_line=graph.edges[source, second]["line"],
                loops=tuple(loops),
                lines=lines,
            )
        )
    return LoopReport(source=source, blocks=tuple(blocks))


def oracle_report(topology: Topology, source: NodeId) -> LoopReport:
    """Oracle loops through `source`, grouped by their smaller source neighbor."""
    if source not in topology.nodes:
        raise UnknownNode(f"unknown source node {source}")
    return _report(topology.graph(), source)


def oracle_all_reports(topology: Topology) -> list[LoopReport]:
    graph = topology.graph()
    node_ids = topology.node_ids
    reports = []
    for index, source in enumerate(node_ids):
        if len(node_ids) - index < 3:
            break
        reports.append(_report(graph, source))
        graph = graph.subgraph(n for n in graph.nodes if n != source)
    return reports
