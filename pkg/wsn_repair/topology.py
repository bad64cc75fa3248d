"""
Physical network model: node placement, radio connectivity, explicit edge
lists, and the line-node incidence (LNI) structure the loop search walks.
"""

from __future__ import annotations

import dataclasses
import functools
import math
import pathlib
from collections.abc import Iterable, Mapping

import networkx as nx
import numpy as np

from wsn_repair import log, template

NodeId = int
LineId = int
Position = tuple[float, float]

MAX_GENERATION_ATTEMPTS = 1000


class TopologyError(ValueError):
    pass


class ParseError(TopologyError):
    def __init__(self, message: str, lineno: int | None = None, source: str = ""):
        self.message = message
        self.lineno = lineno
        self.source = source
        location = f"{source}:" if source else ""
        if lineno is not None:
            location += f"{lineno}:"
        super().__init__(f"{location} {message}" if location else message)


class UnknownLine(TopologyError):
    pass


class UnknownNode(TopologyError):
    pass


class GenerationFailed(TopologyError):
    pass


@dataclasses.dataclass(frozen=True)
class NodePlacement:
    id: NodeId
    x: float
    y: float
    range: float

    def __post_init__(self):
        if self.id < 0:
            raise TopologyError(f"node id must be non-negative, got {self.id}")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise TopologyError(f"node {self.id}: coordinates must be finite")
        if not (math.isfinite(self.range) and self.range > 0):
            raise TopologyError(f"node {self.id}: range must be > 0")

    @property
    def position(self) -> Position:
        return (self.x, self.y)


@dataclasses.dataclass(frozen=True)
class Topology:
    nodes: frozenset[NodeId]
    edges: Mapping[LineId, tuple[NodeId, NodeId]]
    base_station: NodeId
    placements: Mapping[NodeId, NodePlacement] | None = None

    def __post_init__(self):
        if self.base_station not in self.nodes:
            raise TopologyError(f"base station {self.base_station} is not a node")
        seen: dict[tuple[NodeId, NodeId], LineId] = {}
        for line, (a, b) in self.edges.items():
            if a == b:
                raise TopologyError(f"line {line} is a self-loop on node {a}")
            if a > b:
                raise TopologyError(f"line {line} endpoints must be ordered")
            if a not in self.nodes or b not in self.nodes:
                raise TopologyError(f"line {line} references an unknown node")
            if (a, b) in seen:
                raise TopologyError(
                    f"lines {seen[(a, b)]} and {line} both connect {a} and {b}"
                )
            seen[(a, b)] = line

    @property
    def node_ids(self) -> tuple[NodeId, ...]:
        return tuple(sorted(self.nodes))

    @property
    def is_placement_mode(self) -> bool:
        return self.placements is not None

    @functools.cached_property
    def adjacency(self) -> Mapping[NodeId, tuple[NodeId, ...]]:
        neighbors: dict[NodeId, set[NodeId]] = {node: set() for node in self.nodes}
        for a, b in self.edges.values():
            neighbors[a].add(b)
            neighbors[b].add(a)
        return {node: tuple(sorted(peers)) for node, peers in neighbors.items()}

    def neighbors(self, node: NodeId) -> tuple[NodeId, ...]:
        try:
            return self.adjacency[node]
        except KeyError:
            raise UnknownNode(f"unknown node {node}")

    def degree(self, node: NodeId) -> int:
        return len(self.neighbors(node))

    def position(self, node: NodeId) -> Position | None:
        if self.placements is None or node not in self.placements:
            return None
        return self.placements[node].position

    def graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.node_ids)
        for line, (a, b) in sorted(self.edges.items()):
            graph.add_edge(a, b, line=line)
        return graph


def explicit_topology(
    edges: Mapping[LineId, tuple[NodeId, NodeId]] | Iterable[tuple[NodeId, NodeId]],
    base_station: NodeId,
    nodes: Iterable[NodeId] = (),
) -> Topology:
    """
    Build an explicit-edge topology. `edges` is either a mapping LineId ->
    pair, or an iterable of pairs which are then numbered like unit-disk
    lines (ascending endpoint pair, starting at 1).
    """
    if isinstance(edges, Mapping):
        numbered = {line: (min(a, b), max(a, b)) for line, (a, b) in edges.items()}
    else:
        pairs = sorted({(min(a, b), max(a, b)) for a, b in edges})
        numbered = {line: pair for line, pair in enumerate(pairs, start=1)}
    all_nodes = {base_station, *nodes}
    for a, b in numbered.values():
        all_nodes.update((a, b))
    return Topology(
        nodes=frozenset(all_nodes), edges=numbered, base_station=base_station
    )


def build_unit_disk(
    placements: Iterable[NodePlacement], base_station: NodeId | None = None
) -> Topology:
    by_id: dict[NodeId, NodePlacement] = {}
    for placement in placements:
        if placement.id in by_id:
            raise TopologyError(f"duplicate node id {placement.id}")
        by_id[placement.id] = placement
    if not by_id:
        raise TopologyError("a topology needs at least one node")

    ids = sorted(by_id)
    pairs = []
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            pa, pb = by_id[a], by_id[b]
            if math.dist(pa.position, pb.position) <= min(pa.range, pb.range):
                pairs.append((a, b))

    return Topology(
        nodes=frozenset(ids),
        edges={line: pair for line, pair in enumerate(pairs, start=1)},
        base_station=ids[0] if base_station is None else base_station,
        placements=by_id,
    )


@dataclasses.dataclass(frozen=True)
class LniMatrix:
    """
    Line-node incidence: for every node, its incident lines (ascending
    LineId) paired with the node at the far end.
    """

    rows: Mapping[NodeId, tuple[tuple[LineId, NodeId], ...]]

    def row(self, node: NodeId) -> tuple[tuple[LineId, NodeId], ...]:
        try:
            return self.rows[node]
        except KeyError:
            raise UnknownNode(f"unknown node {node}")

    def degree(self, node: NodeId) -> int:
        return len(self.row(node))

    @property
    def lines(self) -> frozenset[LineId]:
        return frozenset(line for row in self.rows.values() for line, _ in row)

    @property
    def total_length(self) -> int:
        return sum(len(row) for row in self.rows.values())


def build_lni(topology: Topology) -> LniMatrix:
    rows: dict[NodeId, list[tuple[LineId, NodeId]]] = {n: [] for n in topology.nodes}
    for line, (a, b) in sorted(topology.edges.items()):
        rows[a].append((line, b))
        rows[b].append((line, a))
    return LniMatrix(rows={node: tuple(row) for node, row in sorted(rows.items())})


def remove_line(lni: LniMatrix, line: LineId) -> LniMatrix:
    endpoints = [
        node for node, row in lni.rows.items() if any(lid == line for lid, _ in row)
    ]
    if not endpoints:
        raise UnknownLine(f"unknown line {line}")
    rows = dict(lni.rows)
    for node in endpoints:
        # Remaining entries shift left, order preserved.
        rows[node] = tuple(entry for entry in rows[node] if entry[0] != line)
    return LniMatrix(rows=rows)


def remove_node_lines(lni: LniMatrix, node: NodeId) -> LniMatrix:
    for line, _ in lni.row(node):
        lni = remove_line(lni, line)
    return lni


def _parse_int(token: str, what: str, lineno: int, source: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {token!r}", lineno, source)
    if value < 0:
        raise ParseError(f"{what} must be non-negative, got {value}", lineno, source)
    return value


def _parse_float(token: str, what: str, lineno: int, source: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"{what} must be a number, got {token!r}", lineno, source)
    if not math.isfinite(value):
        raise ParseError(f"{what} must be finite, got {token}", lineno, source)
    return value


def parse_topology(text: str, source: str = "") -> Topology:
    """
    Parse the line-oriented topology format:

        # comment
        base 1
        node <id> <x> <y> <range>      (unit-disk mode)
        edge <line_id> <a> <b>         (explicit mode)

    A file uses either `node` or `edge` lines, never both.
    """
    placements: list[NodePlacement] = []
    placement_ids: dict[NodeId, int] = {}
    edges: dict[LineId, tuple[NodeId, NodeId]] = {}
    pairs: dict[tuple[NodeId, NodeId], int] = {}
    base: NodeId | None = None
    mode: str | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, *args = line.split()

        if keyword == "base":
            if len(args) != 1:
                raise ParseError("expected `base <id>`", lineno, source)
            if base is not None:
                raise ParseError("base station declared twice", lineno, source)
            base = _parse_int(args[0], "base id", lineno, source)

        elif keyword == "node":
            if mode == "edge":
                raise ParseError(
                    "`node` line in an explicit-edge file (unit-disk and explicit "
                    "modes cannot be mixed)",
                    lineno,
                    source,
                )
            mode = "node"
            if len(args) != 4:
                raise ParseError("expected `node <id> <x> <y> <range>`", lineno, source)
            node_id = _parse_int(args[0], "node id", lineno, source)
            if node_id in placement_ids:
                raise ParseError(
                    f"duplicate node id {node_id} (first declared on line "
                    f"{placement_ids[node_id]})",
                    lineno,
                    source,
                )
            placement_ids[node_id] = lineno
            x = _parse_float(args[1], "x", lineno, source)
            y = _parse_float(args[2], "y", lineno, source)
            radio_range = _parse_float(args[3], "range", lineno, source)
            try:
                placements.append(NodePlacement(node_id, x, y, radio_range))
            except TopologyError as exc:
                raise ParseError(str(exc), lineno, source) from exc

        elif keyword == "edge":
            if mode == "node":
                raise ParseError(
                    "`edge` line in a unit-disk file (unit-disk and explicit "
                    "modes cannot be mixed)",
                    lineno,
                    source,
                )
            mode = "edge"
            if len(args) != 3:
                raise ParseError("expected `edge <line_id> <a> <b>`", lineno, source)
            line_id = _parse_int(args[0], "line id", lineno, source)
            a = _parse_int(args[1], "node id", lineno, source)
            b = _parse_int(args[2], "node id", lineno, source)
            if line_id in edges:
                raise ParseError(f"duplicate line id {line_id}", lineno, source)
            if a == b:
                raise ParseError(f"line {line_id} is a self-loop", lineno, source)
            pair = (min(a, b), max(a, b))
            if pair in pairs:
                raise ParseError(
                    f"multi-edge between {a} and {b} (already on line {pairs[pair]})",
                    lineno,
                    source,
                )
            pairs[pair] = lineno
            edges[line_id] = pair

        else:
            raise ParseError(f"unknown directive {keyword!r}", lineno, source)

    if base is None:
        raise ParseError("missing `base <id>` line", None, source)

    try:
        if mode == "node":
            if base not in placement_ids:
                raise ParseError(
                    f"base station {base} is not a declared node", None, source
                )
            return build_unit_disk(placements, base_station=base)
        return explicit_topology(edges, base_station=base)
    except ParseError:
        raise
    except TopologyError as exc:
        raise ParseError(str(exc), None, source) from exc


def load_topology(path: pathlib.Path) -> Topology:
    log.debug(f"Reading topology from {path}")
    return parse_topology(path.read_text(), source=str(path))


def render_topology(topology: Topology, comment: str | None = None) -> str:
    return template.render(
        "topology.txt.j2",
        topology=topology,
        placements=(
            [topology.placements[n] for n in topology.node_ids]
            if topology.placements is not None
            else None
        ),
        edges=sorted(topology.edges.items()),
        comment=comment,
    )


def generate_topology(
    n: int, width: float, height: float, radio_range: float, seed: int
) -> Topology:
    """
    Uniform random placements in [0, width] x [0, height], node 0 being the
    base station. Resamples until the unit-disk graph is connected.
    """
    if n < 2:
        raise TopologyError(f"need at least 2 nodes, got {n}")
    if width <= 0 or height <= 0:
        raise TopologyError("width and height must be > 0")
    rng = np.random.default_rng(seed)
    for attempt in range(1, MAX_GENERATION_ATTEMPTS + 1):
        xs = np.round(rng.uniform(0, width, n), 2)
        ys = np.round(rng.uniform(0, height, n), 2)
        placements = [
            NodePlacement(i, float(x), float(y), float(radio_range))
            for i, (x, y) in enumerate(zip(xs, ys))
        ]
        topology = build_unit_disk(placements, base_station=0)
        if nx.is_connected(topology.graph()):
            log.debug(f"Connected topology found after {attempt} attempt(s)")
            return topology
    raise GenerationFailed(
        f"no connected placement of {n} nodes with range {radio_range} in "
        f"{width}x{height} after {MAX_GENERATION_ATTEMPTS} attempts"
    )
