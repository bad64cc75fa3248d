"""
Deterministic discrete-event executor for a scenario.

Events sit in a heap ordered by (time, seq). The only randomness is the
scenario-seeded numpy generator used for losses and jitter, consumed in
event order, so a (scenario, seed) pair always produces the same trace.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
from collections.abc import Iterable

import numpy as np

from wsn_repair import log, protocol
from wsn_repair.messages import (
    INFINITY,
    REPAIR_KINDS,
    Message,
    MessageKind,
    NodeState,
    TimerKind,
    Transition,
)
from wsn_repair.scenario import (
    AreaFail,
    FaultSpec,
    NodeFail,
    NodeJoin,
    NodeRecover,
    Rebeacon,
    Scenario,
    ScenarioError,
)
from wsn_repair.settings import SimulationConfig
from wsn_repair.topology import NodeId, Topology, build_unit_disk
from wsn_repair.trace import (
    RoutingSnapshot,
    SnapshotRow,
    Trace,
    TraceRecord,
    format_sample,
)

# Repeating the same repair message this many times since the sender's last
# routing change makes it periodic background, not repair activity.
STEADY_REPEATS = 3
DATA_STAGGER = 1_000


@dataclasses.dataclass(frozen=True)
class Deliver:
    node: NodeId
    message: Message


@dataclasses.dataclass(frozen=True)
class TimerFire:
    node: NodeId
    kind: TimerKind
    token: int


@dataclasses.dataclass(frozen=True)
class Fault:
    spec: FaultSpec


@dataclasses.dataclass(frozen=True)
class GenerateData:
    node: NodeId


@dataclasses.dataclass(frozen=True)
class Sample:
    pass


EventPayload = Deliver | TimerFire | Fault | GenerateData | Sample


@dataclasses.dataclass(frozen=True, order=True)
class SimEvent:
    time: int
    seq: int
    payload: EventPayload = dataclasses.field(compare=False)


def _routing_fields(state: NodeState) -> tuple:
    return (state.parent, state.hops, state.broken_hops, state.pending)


def _describe_route(state: NodeState) -> str:
    parent = "-" if state.parent is None else state.parent
    hops = "inf" if state.hops == INFINITY else int(state.hops)
    return (
        f"parent={parent} hops={hops} broken_hops={state.broken_hops} "
        f"pending={int(state.pending)}"
    )


class Simulator:
    def __init__(self, scenario: Scenario, seed: int | None = None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.config = scenario.protocol
        self.simulation: SimulationConfig = scenario.simulation.resolve(
            scenario.protocol
        )
        self.topology: Topology = scenario.topology
        self.rng = np.random.default_rng(self.seed)
        self.now = 0
        self._queue: list[SimEvent] = []
        self._seq = 0
        self._tokens: dict[tuple[NodeId, TimerKind], int] = {}
        self.records: list[TraceRecord] = []
        self.states: dict[NodeId, NodeState] = {
            node: self._fresh_state(node) for node in self.topology.node_ids
        }

    # Setup

    def _fresh_state(self, node: NodeId) -> NodeState:
        neighbors = self.topology.neighbors(node)
        positions = {
            n: pos for n in neighbors if (pos := self.topology.position(n)) is not None
        }
        return NodeState(
            id=node,
            is_base_station=node == self.topology.base_station,
            neighbors=frozenset(neighbors),
            neighbor_positions=positions,
            position=self.topology.position(node),
        )

    def schedule(self, time: int, payload: EventPayload) -> None:
        heapq.heappush(self._queue, SimEvent(time, self._seq, payload))
        self._seq += 1

    def _schedule_data(self, node: NodeId, start: int) -> None:
        interval = self.scenario.data_interval(node)
        if interval <= 0 or node == self.topology.base_station:
            return
        first = start + interval + node * DATA_STAGGER
        if first < self._data_stop:
            self.schedule(first, GenerateData(node))

    @property
    def _data_stop(self) -> int:
        return self.scenario.horizon - self.simulation.data_cutoff

    def start(self) -> None:
        for fault in self.scenario.faults:
            self.schedule(fault.time, Fault(fault))
        for node in self.topology.node_ids:
            self._schedule_data(node, 0)
        assert self.simulation.sample_interval is not None
        self.schedule(self.simulation.sample_interval, Sample())

        base = self.topology.base_station
        self._apply(base, protocol.start_beacon(self.states[base], 0, self.config))

    # Trace

    def record(self, node: NodeId | None, event: str, details: str = "") -> None:
        self.records.append(TraceRecord(self.now, node, event, details))

    def record_drop(self, node: NodeId, data: Message, reason: str) -> None:
        self.record(
            node, "data_drop", f"origin={data.origin} seq={data.seq} reason={reason}"
        )

    # Transitions

    def _apply(self, node: NodeId, transition: Transition) -> None:
        before = self.states[node]
        after = transition.state
        self.states[node] = after

        for note in transition.notes:
            self.record(node, note.event, note.describe())
        if _routing_fields(before) != _routing_fields(after):
            self.record(node, "route", _describe_route(after))
        for timer in transition.timers:
            key = (node, timer.kind)
            if timer.deadline is None:
                self._tokens.pop(key, None)
            else:
                token = self._seq
                self._tokens[key] = token
                self.schedule(timer.deadline, TimerFire(node, timer.kind, token))
        for message in transition.messages:
            self._transmit(message)

    def _transmit(self, message: Message) -> None:
        self.record(message.src, "send", message.describe())
        sender = message.src
        if message.is_broadcast:
            recipients: Iterable[NodeId] = [
                n for n in self.topology.neighbors(sender) if self.states[n].alive
            ]
        elif message.dst in self.topology.neighbors(sender):
            recipients = [message.dst]
        else:
            log.debug(f"{message.describe()}: no link between {sender} and {message.dst}")
            recipients = []
            if message.kind == MessageKind.DATA:
                self.record_drop(sender, message, "no_link")

        for recipient in recipients:
            if self.simulation.loss_probability and (
                self.rng.random() < self.simulation.loss_probability
            ):
                self.record(recipient, "loss", message.describe())
                if message.kind == MessageKind.DATA:
                    self.record_drop(recipient, message, "loss")
                continue
            delay = self.simulation.base_latency
            if self.simulation.jitter:
                delay += int(self.rng.integers(0, self.simulation.jitter, endpoint=True))
            self.schedule(self.now + delay, Deliver(recipient, message))

    # Faults

    def inject_fault(self, spec: FaultSpec) -> Simulator:
        match spec:
            case NodeFail(node=node):
                self._require(node)
                self.record(node, "fault", "node_fail")
                self._fail(node)
            case AreaFail():
                if self.topology.placements is None:
                    raise ScenarioError("area failures need a unit-disk topology")
                victims = sorted(
                    node
                    for node, placement in self.topology.placements.items()
                    if spec.covers(placement) and self.states[node].alive
                )
                self.record(
                    None,
                    "fault",
                    f"area_fail cx={spec.cx} cy={spec.cy} radius={spec.radius} "
                    f"nodes={','.join(map(str, victims))}",
                )
                for node in victims:
                    self.record(node, "fault", "node_fail")
                    self._fail(node)
            case NodeRecover(node=node):
                self._require(node)
                if self.states[node].alive:
                    return self
                self.record(node, "fault", "recover")
                state = dataclasses.replace(self.states[node].reset(), alive=True)
                self.states[node] = state
                self._apply(node, protocol.start_orphan(state, self.now, self.config))
            case NodeJoin(node=node):
                self._join(spec)
            case Rebeacon():
                base = self.topology.base_station
                state = self.states[base]
                if not state.alive:
                    log.warning("Rebeacon skipped: the base station is down")
                    return self
                epoch = (state.beacon_epoch or 0) + 1
                self.record(base, "fault", f"rebeacon epoch={epoch}")
                self._apply(
                    base, protocol.start_beacon(state, self.now, self.config, epoch)
                )
        return self

    def _require(self, node: NodeId) -> None:
        if node not in self.states:
            raise ScenarioError(f"unknown node {node}")

    def _fail(self, node: NodeId) -> None:
        state = self.states[node]
        for data in state.data_buffer:
            self.record_drop(node, data, "node_failed")
        self.states[node] = dataclasses.replace(state, alive=False, data_buffer=())
        for key in [key for key in self._tokens if key[0] == node]:
            del self._tokens[key]

    def _join(self, spec: NodeJoin) -> None:
        if self.topology.placements is None:
            raise ScenarioError("joins need a unit-disk topology")
        if spec.node in self.states:
            raise ScenarioError(f"join: node {spec.node} already exists")
        self.topology = build_unit_disk(
            [*self.topology.placements.values(), spec.placement],
            base_station=self.topology.base_station,
        )
        self.record(
            spec.node,
            "fault",
            f"join x={spec.x} y={spec.y} range={spec.range}",
        )
        for neighbor in self.topology.neighbors(spec.node):
            self.states[neighbor] = protocol.learn_neighbor(
                self.states[neighbor], spec.node, spec.placement.position
            )
        self.states[spec.node] = self._fresh_state(spec.node)
        self._apply(
            spec.node,
            protocol.node_join(self.states[spec.node], self.now, self.config),
        )
        self._schedule_data(spec.node, self.now)

    # Main loop

    def _dispatch(self, payload: EventPayload) -> None:
        match payload:
            case Deliver(node=node, message=message):
                if self.states[node].alive:
                    self._apply(
                        node,
                        protocol.on_message(
                            self.states[node], message, self.now, self.config
                        ),
                    )
                elif message.kind == MessageKind.DATA:
                    self.record_drop(node, message, "node_failed")
            case TimerFire(node=node, kind=kind, token=token):
                if self._tokens.get((node, kind)) != token:
                    return
                del self._tokens[(node, kind)]
                self._apply(
                    node, protocol.on_timer(self.states[node], kind, self.now, self.config)
                )
            case Fault(spec=spec):
                self.inject_fault(spec)
            case GenerateData(node=node):
                self._apply(
                    node, protocol.generate_data(self.states[node], self.now, self.config)
                )
                interval = self.scenario.data_interval(node)
                if self.now + interval < self._data_stop:
                    self.schedule(self.now + interval, GenerateData(node))
            case Sample():
                parents = {
                    node: state.parent
                    for node, state in self.states.items()
                    if state.alive and state.parent is not None
                }
                self.record(None, "sample", format_sample(parents))
                assert self.simulation.sample_interval is not None
                next_sample = self.now + self.simulation.sample_interval
                if next_sample <= self.scenario.horizon:
                    self.schedule(next_sample, Sample())

    def run_until(self, time: int) -> None:
        while self._queue and self._queue[0].time <= time:
            event = heapq.heappop(self._queue)
            self.now = event.time
            self._dispatch(event.payload)
        self.now = time

    def snapshot(self) -> RoutingSnapshot:
        return RoutingSnapshot(
            time=self.now,
            rows=tuple(
                SnapshotRow(
                    node=node,
                    parent=state.parent,
                    hops=state.hops,
                    broken_hops=state.broken_hops,
                    pending=state.pending,
                )
                for node, state in sorted(self.states.items())
                if state.alive
            ),
        )

    def finish(self) -> Trace:
        """Close the run at the horizon: account for DATA still in flight or
        buffered, then take the final snapshot."""
        self.now = self.scenario.horizon
        in_flight = sorted(
            (event for event in self._queue if isinstance(event.payload, Deliver)),
        )
        for event in in_flight:
            assert isinstance(event.payload, Deliver)
            message = event.payload.message
            if message.kind == MessageKind.DATA:
                self.record_drop(event.payload.node, message, "horizon")
        for node, state in sorted(self.states.items()):
            if not state.alive:
                continue
            for data in state.data_buffer:
                self.record(node, "buffered", f"origin={data.origin} seq={data.seq}")
        return Trace(
            seed=self.seed,
            horizon=self.scenario.horizon,
            records=tuple(self.records),
            snapshot=self.snapshot(),
        )


def run(scenario: Scenario, seed: int | None = None) -> Trace:
    simulator = Simulator(scenario, seed=seed)
    log.info(
        f"Running {len(simulator.states)} nodes until {scenario.horizon}us "
        f"(seed {simulator.seed})"
    )
    simulator.start()
    simulator.run_until(scenario.horizon)
    return simulator.finish()


def activity_times(trace: Trace) -> list[int]:
    """
    Times of repair activity: routing changes, and repair messages that are
    not yet periodic (a sender repeating the same message more than
    STEADY_REPEATS times since its last routing change is in steady state).
    """
    repeats: dict[NodeId | None, dict[str, int]] = {}
    times = []
    for record in trace.records:
        if record.event == "route":
            repeats.pop(record.node, None)
            times.append(record.time)
        elif record.event == "send" and record.message_kind in REPAIR_KINDS:
            seen = repeats.setdefault(record.node, {})
            count = seen.get(record.details, 0)
            seen[record.details] = count + 1
            if count < STEADY_REPEATS:
                times.append(record.time)
    return times


def quiesce(trace: Trace, settle_window: int, after: int = 0) -> float:
    """
    First time at or after `after` that is followed by `settle_window` with
    no repair activity. INFINITY when the run never settles in its horizon.
    """
    last = after
    for time in activity_times(trace):
        if time < after:
            continue
        if time - last >= settle_window:
            return last
        last = time
    if last + settle_window <= trace.horizon:
        return last
    return math.inf
