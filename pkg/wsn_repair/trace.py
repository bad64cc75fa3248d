"""
Run traces: the ordered audit records of a simulation, followed by the
routing snapshot taken at the horizon.

    # seed 7
    # horizon_us 60000000
    # time_us	node	event	details
    0	0	send	BEACON 0>* hops=0
    ...
    # snapshot
    # node	parent	hops	broken_hops	pending
    0	-	0	0	0
    1	0	1	0	0
"""

from __future__ import annotations

import dataclasses
from collections.abc import Iterator, Mapping

from wsn_repair import template
from wsn_repair.messages import INFINITY, Hops
from wsn_repair.topology import NodeId, ParseError

NO_NODE = "-"
SNAPSHOT_MARKER = "# snapshot"


class TraceParseError(ParseError):
    pass


@dataclasses.dataclass(frozen=True)
class TraceRecord:
    time: int
    node: NodeId | None
    event: str
    details: str = ""

    def fields(self) -> dict[str, str]:
        """`key=value` tokens of the details."""
        return dict(
            token.split("=", 1) for token in self.details.split() if "=" in token
        )

    @property
    def message_kind(self) -> str | None:
        if self.event not in ("send", "loss"):
            return None
        return self.details.split(" ", 1)[0]


@dataclasses.dataclass(frozen=True)
class SnapshotRow:
    node: NodeId
    parent: NodeId | None
    hops: Hops
    broken_hops: int
    pending: bool


@dataclasses.dataclass(frozen=True)
class RoutingSnapshot:
    time: int
    rows: tuple[SnapshotRow, ...]

    def parents(self) -> dict[NodeId, NodeId]:
        return {row.node: row.parent for row in self.rows if row.parent is not None}

    def finite_hops_nodes(self) -> set[NodeId]:
        return {row.node for row in self.rows if row.hops != INFINITY}

    def row(self, node: NodeId) -> SnapshotRow | None:
        for row in self.rows:
            if row.node == node:
                return row
        return None


@dataclasses.dataclass(frozen=True)
class Trace:
    seed: int
    horizon: int
    records: tuple[TraceRecord, ...]
    snapshot: RoutingSnapshot | None

    @property
    def truncated(self) -> bool:
        return self.snapshot is None

    def events(self, *names: str) -> Iterator[TraceRecord]:
        return (record for record in self.records if record.event in names)

    def render(self) -> str:
        return template.render("trace.tsv.j2", trace=self)


def format_sample(parents: Mapping[NodeId, NodeId]) -> str:
    return " ".join(f"{child}>{parent}" for child, parent in sorted(parents.items()))


def parse_sample(details: str) -> dict[NodeId, NodeId]:
    parents = {}
    for token in details.split():
        child, parent = token.split(">")
        parents[int(child)] = int(parent)
    return parents


def _parse_hops(token: str) -> Hops:
    return INFINITY if token == "inf" else int(token)


def _node(token: str) -> NodeId | None:
    return None if token == NO_NODE else int(token)


def parse_trace(text: str, source: str = "") -> Trace:
    seed: int | None = None
    horizon: int | None = None
    records: list[TraceRecord] = []
    rows: list[SnapshotRow] = []
    in_snapshot = False

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            words = line[1:].split()
            if line.strip() == SNAPSHOT_MARKER:
                in_snapshot = True
            elif len(words) == 2 and words[0] == "seed":
                seed = int(words[1])
            elif len(words) == 2 and words[0] == "horizon_us":
                horizon = int(words[1])
            continue

        columns = line.split("\t")
        try:
            if in_snapshot:
                node, parent, hops, broken_hops, pending = columns
                rows.append(
                    SnapshotRow(
                        node=int(node),
                        parent=_node(parent),
                        hops=_parse_hops(hops),
                        broken_hops=int(broken_hops),
                        pending=pending == "1",
                    )
                )
            else:
                time, node, event, *details = columns
                if len(details) > 1:
                    raise ValueError("too many columns")
                record = TraceRecord(
                    time=int(time),
                    node=_node(node),
                    event=event,
                    details=details[0] if details else "",
                )
                records.append(record)
        except ValueError as exc:
            raise TraceParseError(f"malformed record: {exc}", lineno, source) from exc
        if len(records) > 1 and records[-1].time < records[-2].time:
            raise TraceParseError("time goes backwards", lineno, source)

    if seed is None or horizon is None:
        raise TraceParseError("missing `# seed` or `# horizon_us` header", None, source)

    snapshot = RoutingSnapshot(time=horizon, rows=tuple(rows)) if in_snapshot else None
    return Trace(seed=seed, horizon=horizon, records=tuple(records), snapshot=snapshot)
