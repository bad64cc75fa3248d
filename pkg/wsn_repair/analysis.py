"""
Post-run verification: parent-cycle detection, an independent reachability
oracle, delivery and message statistics, convergence times, and the
connectivity cycles that parent loops can form along.
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Mapping

import networkx as nx

from wsn_repair import (
    cycles,
    engine,
    log,
    loops,
    scenario as scenario_module,
    template,
)
from wsn_repair.messages import MessageKind
from wsn_repair.topology import NodeId, Topology
from wsn_repair.trace import RoutingSnapshot, Trace, parse_sample

DataKey = tuple[int, int]

_GRAY = 1
_BLACK = 2


@dataclasses.dataclass(frozen=True)
class FaultConvergence:
    description: str
    time: int
    # None when the run never settles after the fault
    duration: int | None


@dataclasses.dataclass(frozen=True)
class RunReport:
    delivery_ratio: float | None
    message_counts: Mapping[str, int]
    convergence: tuple[FaultConvergence, ...]
    transient_loops: tuple[tuple[int, cycles.CycleKey], ...]
    orphan_count: int
    generated: int
    delivered: int
    dropped: int
    buffered: int
    losses: int
    post_convergence_delivery_ratio: float | None
    quiescence_time: float
    truncated: bool


@dataclasses.dataclass(frozen=True)
class ConnectivityReport:
    reports: tuple[cycles.LoopReport, ...]
    candidates: frozenset[cycles.CycleKey]
    # parent cycles seen in the trace, 2-node ones included
    observed: frozenset[cycles.CycleKey]

    @property
    def observed_candidates(self) -> frozenset[cycles.CycleKey]:
        return self.observed & self.candidates

    @property
    def unexplained(self) -> frozenset[cycles.CycleKey]:
        """Observed cycles of 3+ nodes that are not connectivity cycles."""
        return frozenset(
            cycle for cycle in self.observed - self.candidates if len(cycle) >= 3
        )


def detect_parent_cycles(
    parents: RoutingSnapshot | Mapping[NodeId, NodeId], finite_only: bool = False
) -> list[cycles.CycleKey]:
    """
    Each node has at most one parent, so following pointers from every
    uncolored node finds each cycle exactly once.
    """
    if isinstance(parents, RoutingSnapshot):
        snapshot = parents
        parents = snapshot.parents()
        if finite_only:
            finite = snapshot.finite_hops_nodes()
            parents = {c: p for c, p in parents.items() if c in finite}

    color: dict[NodeId, int] = {}
    found = []
    for start in sorted(parents):
        if start in color:
            continue
        path = []
        node: NodeId | None = start
        while node is not None and node not in color:
            color[node] = _GRAY
            path.append(node)
            node = parents.get(node)
        if node is not None and color[node] == _GRAY:
            cycle = path[path.index(node) :]
            if len(cycle) >= 2:
                found.append(cycles.canonical_cycle(cycle))
        for visited in path:
            color[visited] = _BLACK
    return sorted(found)


def reachability_oracle(topology: Topology, dead: set[NodeId]) -> set[NodeId]:
    if topology.base_station in dead:
        return set()
    graph = topology.graph()
    alive = graph.subgraph(n for n in graph.nodes if n not in dead)
    return set(nx.node_connected_component(alive, topology.base_station))


def dead_nodes(trace: Trace) -> set[NodeId]:
    dead: set[NodeId] = set()
    for record in trace.events("fault"):
        if record.node is None:
            continue
        if record.details == "node_fail":
            dead.add(record.node)
        elif record.details == "recover":
            dead.discard(record.node)
    return dead


def _data_key(fields: Mapping[str, str]) -> DataKey:
    return int(fields["origin"]), int(fields["seq"])


def _ratio(delivered: int, generated: int) -> float | None:
    if not generated:
        return None
    return delivered / generated


def summarize(trace: Trace, scenario: scenario_module.Scenario) -> RunReport:
    simulation = scenario.simulation.resolve(scenario.protocol)
    assert simulation.settle_window is not None

    message_counts = {str(kind): 0 for kind in MessageKind}
    generated_at: dict[DataKey, int] = {}
    delivered: set[DataKey] = set()
    buffered: set[DataKey] = set()
    dropped: set[DataKey] = set()
    transient: list[tuple[int, cycles.CycleKey]] = []
    losses = 0

    for record in trace.records:
        match record.event:
            case "send":
                kind = record.message_kind
                assert kind is not None
                message_counts[kind] = message_counts.get(kind, 0) + 1
            case "loss":
                losses += 1
            case "data_gen":
                generated_at.setdefault(_data_key(record.fields()), record.time)
            case "data_deliver":
                delivered.add(_data_key(record.fields()))
            case "buffered":
                buffered.add(_data_key(record.fields()))
            case "data_drop":
                dropped.add(_data_key(record.fields()))
            case "sample":
                for cycle in detect_parent_cycles(parse_sample(record.details)):
                    transient.append((record.time, cycle))

    # An item raced along two paths counts once: delivered beats buffered,
    # buffered beats dropped.
    delivered &= set(generated_at)
    buffered = (buffered & set(generated_at)) - delivered
    dropped = (dropped & set(generated_at)) - delivered - buffered
    unaccounted = len(generated_at) - len(delivered) - len(buffered) - len(dropped)
    if unaccounted and not trace.truncated:
        log.warning(f"{unaccounted} DATA items have no delivery, drop or buffer record")

    convergence = []
    for fault in sorted(scenario.faults, key=lambda f: f.time):
        settled = engine.quiesce(trace, simulation.settle_window, after=fault.time)
        convergence.append(
            FaultConvergence(
                description=fault.describe(),
                time=fault.time,
                duration=None if settled == math.inf else int(settled) - fault.time,
            )
        )

    quiescence = engine.quiesce(trace, simulation.settle_window)
    if convergence:
        if any(c.duration is None for c in convergence):
            settled_at: float = math.inf
        else:
            settled_at = max(c.time + (c.duration or 0) for c in convergence)
    else:
        settled_at = quiescence

    late = {key for key, time in generated_at.items() if time >= settled_at}
    orphan_count = 0
    if trace.snapshot is not None:
        orphan_count = sum(
            1
            for row in trace.snapshot.rows
            if row.node != scenario.topology.base_station and row.hops == math.inf
        )

    return RunReport(
        delivery_ratio=_ratio(len(delivered), len(generated_at)),
        message_counts=message_counts,
        convergence=tuple(convergence),
        transient_loops=tuple(transient),
        orphan_count=orphan_count,
        generated=len(generated_at),
        delivered=len(delivered),
        dropped=len(dropped),
        buffered=len(buffered),
        losses=losses,
        post_convergence_delivery_ratio=_ratio(len(late & delivered), len(late)),
        quiescence_time=quiescence,
        truncated=trace.truncated,
    )


def observed_parent_cycles(trace: Trace) -> frozenset[cycles.CycleKey]:
    return frozenset(
        cycle
        for record in trace.events("sample")
        for cycle in detect_parent_cycles(parse_sample(record.details))
    )


def connectivity_loop_report(
    topology: Topology, trace: Trace | None = None
) -> ConnectivityReport:
    reports = loops.enumerate_all_loops(topology)
    return ConnectivityReport(
        reports=tuple(reports),
        candidates=frozenset(cycles.all_cycles(reports)),
        observed=observed_parent_cycles(trace) if trace else frozenset(),
    )


def render_report(report: RunReport, custom_template: str | None = None) -> str:
    return template.render_report(custom_template=custom_template, report=report)
