from __future__ import annotations

import math

import pytest

from wsn_repair import analysis, scenario
from wsn_repair.trace import RoutingSnapshot, SnapshotRow, Trace, TraceRecord


def row(node, parent, hops, pending=False):
    return SnapshotRow(
        node=node, parent=parent, hops=hops, broken_hops=0, pending=pending
    )


@pytest.mark.parametrize(
    "parents, expected",
    [
        ({2: 1, 3: 2, 4: 3}, []),
        ({1: 2, 2: 1}, [(1, 2)]),
        ({3: 2, 2: 4, 4: 3, 5: 3}, [(2, 3, 4)]),
        ({1: 2, 2: 1, 4: 5, 5: 6, 6: 4, 7: 6}, [(1, 2), (4, 5, 6)]),
        ({}, []),
    ],
)
def test_detect_parent_cycles(parents, expected):
    assert analysis.detect_parent_cycles(parents) == expected


def test_detect_parent_cycles__finite_only():
    snapshot = RoutingSnapshot(
        time=0,
        rows=(
            row(0, None, 0),
            row(1, 0, 1),
            row(2, 3, math.inf),
            row(3, 4, math.inf),
            row(4, 2, math.inf),
        ),
    )

    assert analysis.detect_parent_cycles(snapshot) == [(2, 3, 4)]
    assert analysis.detect_parent_cycles(snapshot, finite_only=True) == []


def test_reachability_oracle(five_node):
    assert analysis.reachability_oracle(five_node, dead={3}) == {1, 2, 4, 5}
    assert analysis.reachability_oracle(five_node, dead={2, 3, 5}) == {1}
    assert analysis.reachability_oracle(five_node, dead={1}) == set()


def test_reachability_oracle__cut_vertex(make_topology):
    line = make_topology([(0, 1), (1, 2), (2, 3)])

    assert analysis.reachability_oracle(line, dead={1}) == {0}
    assert analysis.reachability_oracle(line, dead=set()) == {0, 1, 2, 3}


def test_dead_nodes():
    result = Trace(
        seed=0,
        horizon=10,
        records=(
            TraceRecord(1, 3, "fault", "node_fail"),
            TraceRecord(1, 4, "fault", "node_fail"),
            TraceRecord(1, None, "fault", "area_fail cx=0 cy=0 radius=1 nodes=3,4"),
            TraceRecord(5, 3, "fault", "recover"),
        ),
        snapshot=None,
    )

    assert analysis.dead_nodes(result) == {4}


@pytest.fixture
def line_scenario(make_scenario, make_topology):
    return make_scenario(
        make_topology([(0, 1), (1, 2)]),
        horizon_s=100,
        faults=[scenario.NodeFail(node=2, time=20_000_000)],
    )


@pytest.fixture
def recorded():
    records = [
        TraceRecord(0, 0, "send", "BEACON 0>* hops=0"),
        TraceRecord(0, 0, "route", "parent=- hops=0 broken_hops=0 pending=0"),
        TraceRecord(10_000, 1, "route", "parent=0 hops=1 broken_hops=0 pending=0"),
        TraceRecord(5_000_000, 1, "data_gen", "origin=1 seq=0"),
        TraceRecord(5_010_000, 0, "data_deliver", "origin=1 seq=0 via=1"),
        TraceRecord(5_010_000, 2, "loss", "DATA 1>2 origin=1 seq=0"),
        TraceRecord(6_000_000, None, "sample", "1>0 2>4 3>2 4>3"),
        TraceRecord(20_000_000, 2, "fault", "node_fail"),
        TraceRecord(22_500_000, 1, "send", "REQUEST 1>*"),
        TraceRecord(22_500_000, 1, "route", "parent=- hops=inf broken_hops=1 pending=0"),
        TraceRecord(23_000_000, 1, "send", "REQUEST 1>*"),
        TraceRecord(30_000_000, 1, "data_gen", "origin=1 seq=1"),
        TraceRecord(30_000_000, 1, "data_buffer", "origin=1 seq=1"),
        TraceRecord(35_000_000, 1, "data_gen", "origin=1 seq=2"),
        TraceRecord(35_000_000, 1, "data_drop", "origin=1 seq=2 reason=ttl"),
    ]
    return Trace(
        seed=0,
        horizon=100_000_000,
        records=(
            *records,
            TraceRecord(100_000_000, 1, "buffered", "origin=1 seq=1"),
        ),
        snapshot=RoutingSnapshot(
            time=100_000_000,
            rows=(row(0, None, 0), row(1, None, math.inf)),
        ),
    )


def test_summarize(recorded, line_scenario):
    report = analysis.summarize(recorded, line_scenario)

    assert report.generated == 3
    assert report.delivered == 1
    assert report.buffered == 1
    assert report.dropped == 1
    assert report.delivery_ratio == pytest.approx(1 / 3)
    assert report.losses == 1
    assert report.message_counts["REQUEST"] == 2
    assert report.message_counts["BEACON"] == 1
    assert report.message_counts["PENDING"] == 0
    assert report.orphan_count == 1
    assert report.transient_loops == ((6_000_000, (2, 3, 4)),)
    assert report.truncated is False

    (fault,) = report.convergence
    assert fault.description == "node 2"
    assert fault.duration == 3_000_000
    # both later data items come after the settle point, neither delivered
    assert report.post_convergence_delivery_ratio == 0.0


def test_summarize__data_counted_once(line_scenario, get_logs):
    records = (
        TraceRecord(1_000_000, 1, "data_gen", "origin=1 seq=0"),
        TraceRecord(1_010_000, 0, "data_deliver", "origin=1 seq=0 via=1"),
        TraceRecord(1_010_000, 2, "data_drop", "origin=1 seq=0 reason=node_failed"),
        TraceRecord(2_000_000, 1, "data_gen", "origin=1 seq=1"),
        TraceRecord(2_000_000, 1, "data_drop", "origin=1 seq=1 reason=loss"),
        TraceRecord(2_000_000, 1, "data_drop", "origin=1 seq=1 reason=horizon"),
        TraceRecord(3_000_000, 1, "data_gen", "origin=1 seq=2"),
        TraceRecord(4_000_000, 1, "data_gen", "origin=1 seq=3"),
        TraceRecord(100_000_000, 1, "buffered", "origin=1 seq=3"),
    )
    result = Trace(
        seed=0,
        horizon=100_000_000,
        records=records,
        snapshot=RoutingSnapshot(time=100_000_000, rows=()),
    )

    report = analysis.summarize(result, line_scenario)

    assert (report.generated, report.delivered, report.dropped, report.buffered) == (
        4,
        1,
        1,
        1,
    )
    assert get_logs("WARNING", "1 DATA items have no delivery, drop or buffer record")


def test_summarize__never_settles(line_scenario):
    records = tuple(
        TraceRecord(t, 1, "route", f"parent=0 hops={t % 2 + 1} broken_hops=0 pending=0")
        for t in range(20_000_000, 100_000_000, 1_000_000)
    )
    noisy = Trace(seed=0, horizon=100_000_000, records=records, snapshot=None)

    report = analysis.summarize(noisy, line_scenario)

    assert report.convergence[0].duration is None
    assert report.truncated is True
    assert report.delivery_ratio is None
    assert report.post_convergence_delivery_ratio is None


def test_connectivity_loop_report(five_node):
    report = analysis.connectivity_loop_report(five_node)

    assert len(report.candidates) == 13
    assert report.observed == frozenset()


def test_connectivity_loop_report__observed(five_node):
    sampled = Trace(
        seed=0,
        horizon=10,
        records=(
            TraceRecord(2, None, "sample", "2>3 3>4 4>2"),
            TraceRecord(4, None, "sample", "2>3 3>2"),
            TraceRecord(6, None, "sample", "2>1 3>2 4>3"),
        ),
        snapshot=None,
    )

    report = analysis.connectivity_loop_report(five_node, sampled)

    assert report.observed == {(2, 3, 4), (2, 3)}
    assert report.observed_candidates == {(2, 3, 4)}
    assert report.unexplained == frozenset()


def test_connectivity_loop_report__tree(make_topology):
    report = analysis.connectivity_loop_report(make_topology([(0, 1), (1, 2)]))

    assert report.candidates == frozenset()


def test_render_report(recorded, line_scenario):
    text = analysis.render_report(analysis.summarize(recorded, line_scenario))

    lines = text.splitlines()
    assert "truncated 0" in lines
    assert "delivery_ratio 0.3333" in lines
    assert "post_convergence_delivery_ratio 0.0000" in lines
    assert "messages.REQUEST 2" in lines
    assert "fault.1 node 2 at=20 converged_after=3" in lines
    assert "transient_loops 1" in lines
    assert "transient_loop 6 2->3->4" in lines


def test_render_report__custom_template(recorded, line_scenario):
    custom = '{% extends "base" %}{% block messages %}{% endblock %}'

    text = analysis.render_report(
        analysis.summarize(recorded, line_scenario), custom_template=custom
    )

    assert "generated 3" in text
    assert "messages." not in text
