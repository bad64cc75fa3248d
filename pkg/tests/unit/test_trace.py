from __future__ import annotations

import math

import pytest

from wsn_repair import trace
from wsn_repair.trace import RoutingSnapshot, SnapshotRow, Trace, TraceRecord


@pytest.fixture
def small_trace():
    return Trace(
        seed=7,
        horizon=4_000_000,
        records=(
            TraceRecord(0, 1, "send", "BEACON 1>* hops=0"),
            TraceRecord(0, 1, "route", "parent=- hops=0 broken_hops=0 pending=0"),
            TraceRecord(10_000, 2, "send", "BEACON 2>* hops=1"),
            TraceRecord(2_000_000, None, "sample", "2>1 3>2"),
            TraceRecord(2_600_000, 3, "loss", "REPLY 2>3 hops=1 parent=1"),
        ),
        snapshot=RoutingSnapshot(
            time=4_000_000,
            rows=(
                SnapshotRow(node=1, parent=None, hops=0, broken_hops=0, pending=False),
                SnapshotRow(node=2, parent=1, hops=1, broken_hops=0, pending=False),
                SnapshotRow(
                    node=3, parent=2, hops=math.inf, broken_hops=2, pending=True
                ),
            ),
        ),
    )


def test_render(small_trace):
    lines = small_trace.render().splitlines()

    assert lines[:3] == ["# seed 7", "# horizon_us 4000000", "# time_us\tnode\tevent\tdetails"]
    assert lines[3] == "0\t1\tsend\tBEACON 1>* hops=0"
    assert lines[6] == "2000000\t-\tsample\t2>1 3>2"
    assert lines[8:] == [
        "# snapshot",
        "# node\tparent\thops\tbroken_hops\tpending",
        "1\t-\t0\t0\t0",
        "2\t1\t1\t0\t0",
        "3\t2\tinf\t2\t1",
    ]


def test_parse_trace__reads_rendered_form(small_trace):
    assert trace.parse_trace(small_trace.render()) == small_trace


def test_parse_trace__truncated(small_trace):
    text = small_trace.render().split(trace.SNAPSHOT_MARKER)[0]

    parsed = trace.parse_trace(text)

    assert parsed.truncated is True
    assert parsed.records == small_trace.records


@pytest.mark.parametrize(
    "text, lineno, match",
    [
        ("# seed 1\n# horizon_us 5\nabc\tsend\n", 3, "malformed record"),
        ("# seed 1\n# horizon_us 5\n1\t2\tsend\ta\tb\n", 3, "too many columns"),
        ("# seed 1\n# horizon_us 5\n5\t1\tsend\tx\n3\t1\tsend\ty\n", 4, "backwards"),
        ("# seed 1\n# horizon_us 5\n# snapshot\n1\t-\t0\n", 4, "malformed record"),
    ],
)
def test_parse_trace__errors(text, lineno, match):
    with pytest.raises(trace.TraceParseError, match=match) as exc_info:
        trace.parse_trace(text, source="run.tsv")

    assert exc_info.value.lineno == lineno


def test_parse_trace__missing_header():
    with pytest.raises(trace.TraceParseError, match="header"):
        trace.parse_trace("0\t1\tsend\tBEACON 1>* hops=0\n")


def test_trace_record__fields():
    record = TraceRecord(0, 2, "data_gen", "origin=2 seq=5")

    assert record.fields() == {"origin": "2", "seq": "5"}
    assert record.message_kind is None


@pytest.mark.parametrize(
    "event, expected", [("send", "REQUEST"), ("loss", "REQUEST"), ("route", None)]
)
def test_trace_record__message_kind(event, expected):
    assert TraceRecord(0, 2, event, "REQUEST 2>*").message_kind == expected


def test_events(small_trace):
    assert [r.time for r in small_trace.events("send", "loss")] == [
        0,
        10_000,
        2_600_000,
    ]


def test_snapshot_helpers(small_trace):
    snapshot = small_trace.snapshot

    assert snapshot.parents() == {2: 1, 3: 2}
    assert snapshot.finite_hops_nodes() == {1, 2}
    assert snapshot.row(3).pending is True
    assert snapshot.row(9) is None


def test_sample_format():
    assert trace.format_sample({3: 2, 2: 1}) == "2>1 3>2"
    assert trace.parse_sample("2>1 3>2") == {2: 1, 3: 2}
    assert trace.parse_sample("") == {}
