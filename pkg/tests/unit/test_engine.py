from __future__ import annotations

import math

import pytest

from wsn_repair import engine
from wsn_repair.messages import Message, MessageKind
from wsn_repair.scenario import (
    AreaFail,
    NodeFail,
    NodeJoin,
    NodeRecover,
    Rebeacon,
    ScenarioError,
)
from wsn_repair.trace import Trace, TraceRecord


def make_trace(*records, horizon=60_000_000):
    return Trace(seed=0, horizon=horizon, records=tuple(records), snapshot=None)


def route(time, node=2):
    return TraceRecord(time, node, "route", "parent=1 hops=2 broken_hops=0 pending=0")


def request(time, node=2):
    return TraceRecord(time, node, "send", f"REQUEST {node}>*")


def test_activity_times__routing_changes():
    trace = make_trace(route(1), TraceRecord(2, 2, "send", "FORWARD 2>1"), route(3))

    assert engine.activity_times(trace) == [1, 3]


def test_activity_times__periodic_requests_fade_out():
    trace = make_trace(*(request(t) for t in range(1, 7)))

    assert engine.activity_times(trace) == [1, 2, 3]


def test_activity_times__route_change_restarts_count():
    trace = make_trace(request(1), request(2), request(3), request(4), route(5), request(6))

    assert engine.activity_times(trace) == [1, 2, 3, 5, 6]


def test_activity_times__counts_per_sender():
    trace = make_trace(*(request(t, node=t % 2) for t in range(1, 9)))

    assert engine.activity_times(trace) == [1, 2, 3, 4, 5, 6]


def test_quiesce():
    trace = make_trace(route(1_000_000), route(2_000_000), route(10_000_000))

    assert engine.quiesce(trace, settle_window=6_000_000) == 2_000_000
    assert engine.quiesce(trace, settle_window=9_000_000) == 10_000_000


def test_quiesce__after():
    trace = make_trace(route(1_000_000), route(22_000_000), route(25_000_000))

    assert engine.quiesce(trace, settle_window=6_000_000, after=20_000_000) == 25_000_000


def test_quiesce__nothing_happens():
    assert engine.quiesce(make_trace(), settle_window=6_000_000, after=5) == 5


def test_quiesce__never_settles():
    trace = make_trace(*(route(t) for t in range(0, 60_000_000, 1_000_000)))

    assert engine.quiesce(trace, settle_window=6_000_000) == math.inf


@pytest.fixture
def simulator(make_scenario, make_topology):
    scenario = make_scenario(make_topology([(0, 1), (1, 2)]), horizon_s=10)
    sim = engine.Simulator(scenario)
    sim.start()
    return sim


def test_simulator__no_link_drops_unicast(simulator):
    simulator._transmit(Message(MessageKind.FORWARD, src=0, dst=2))

    assert simulator.records[-1].details == "FORWARD 0>2"
    assert not any(
        isinstance(event.payload, engine.Deliver) and event.payload.node == 2
        and event.payload.message.src == 0
        for event in simulator._queue
    )


def test_simulator__recover_alive_node_is_noop(simulator):
    before = len(simulator.records)

    simulator.inject_fault(NodeRecover(node=1, time=0))

    assert len(simulator.records) == before


def test_simulator__fail_unknown_node(simulator):
    with pytest.raises(ScenarioError, match="unknown node 7"):
        simulator.inject_fault(NodeFail(node=7, time=0))


def test_simulator__area_fail_needs_placements(simulator):
    with pytest.raises(ScenarioError, match="unit-disk"):
        simulator.inject_fault(AreaFail(cx=0, cy=0, radius=1, time=0))


def test_simulator__join_needs_placements(simulator):
    with pytest.raises(ScenarioError, match="unit-disk"):
        simulator.inject_fault(NodeJoin(node=3, x=0, y=0, range=1, time=0))


def test_simulator__failed_node_drops_buffer(simulator):
    simulator.run_until(1_000_000)
    simulator.inject_fault(NodeFail(node=1, time=1_000_000))
    simulator.run_until(5_200_000)
    simulator.inject_fault(NodeFail(node=2, time=5_200_000))

    assert simulator.states[2].alive is False
    assert simulator.states[2].data_buffer == ()
    drops = [r for r in simulator.records if r.event == "data_drop"]
    assert [r.details for r in drops] == ["origin=2 seq=0 reason=node_failed"]


def test_simulator__rebeacon(simulator):
    simulator.run_until(3_000_000)

    simulator.inject_fault(Rebeacon(time=3_000_000))
    simulator.inject_fault(Rebeacon(time=3_000_000))
    simulator.run_until(3_100_000)

    assert [r.details for r in simulator.records if r.event == "fault"] == [
        "rebeacon epoch=1",
        "rebeacon epoch=2",
    ]
    assert {state.beacon_epoch for state in simulator.states.values()} == {2}
    assert simulator.states[2].parent == 1


def test_simulator__rebeacon_without_base_station(simulator, get_logs):
    simulator.inject_fault(NodeFail(node=0, time=0))

    simulator.inject_fault(Rebeacon(time=0))

    assert get_logs("WARNING", "base station is down")
    assert simulator.states[1].beacon_epoch is None


def test_run__explicit_seed_overrides(make_scenario, make_topology):
    scenario = make_scenario(make_topology([(0, 1)]), horizon_s=5, seed=3)

    assert engine.run(scenario).seed == 3
    assert engine.run(scenario, seed=8).seed == 8


def test_run__logs(make_scenario, make_topology, get_logs):
    engine.run(make_scenario(make_topology([(0, 1)]), horizon_s=5))

    assert get_logs("INFO", "Running 2 nodes")
