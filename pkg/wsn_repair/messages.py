from __future__ import annotations

import dataclasses
import enum
import math
from collections.abc import Mapping

from wsn_repair.topology import NodeId, Position

INFINITY = math.inf
BROADCAST: NodeId = -1

# int, or INFINITY when not connected
Hops = int | float


class MessageKind(enum.StrEnum):
    FORWARD = "FORWARD"
    BACK_Y = "BACK_Y"
    BACK_N = "BACK_N"
    REQUEST = "REQUEST"
    REPLY = "REPLY"
    PENDING = "PENDING"
    BEACON = "BEACON"
    DATA = "DATA"
    DATA_ACK = "DATA_ACK"
    JOIN_PROBE = "JOIN_PROBE"
    JOIN_INFO = "JOIN_INFO"


# Traffic that only exists while the network repairs itself.
REPAIR_KINDS = frozenset(
    {MessageKind.REQUEST, MessageKind.REPLY, MessageKind.PENDING, MessageKind.BACK_N}
)


class TimerKind(enum.StrEnum):
    PROBE = "probe"
    PPT = "ppt"
    REQUEST_RESEND = "request_resend"
    BACKN_BACKOFF = "backn_backoff"
    REPLY_WINDOW = "reply_window"
    PENDING_FORWARD = "pending_forward"
    JOIN_RETRY = "join_retry"
    SWITCH_RACE = "switch_race"


def format_value(value: object) -> str:
    match value:
        case float() if value == INFINITY:
            return "inf"
        case float() if value.is_integer():
            return str(int(value))
        case tuple():
            return ",".join(format_value(v) for v in value)
        case _:
            return str(value)


@dataclasses.dataclass(frozen=True)
class Message:
    kind: MessageKind
    src: NodeId
    dst: NodeId = BROADCAST
    hops: int | None = None
    broken_hops: int | None = None
    pending_hops: int | None = None
    parent: NodeId | None = None
    origin: NodeId | None = None
    seq: int | None = None
    via: NodeId | None = None
    route: tuple[NodeId, ...] | None = None
    # beacon flood generation, 0 for the initial one
    epoch: int | None = None
    position: Position | None = None

    @property
    def is_broadcast(self) -> bool:
        return self.dst == BROADCAST

    def payload(self) -> list[tuple[str, object]]:
        return [
            (field.name, value)
            for field in dataclasses.fields(self)[3:]
            if (value := getattr(self, field.name)) is not None
        ]

    def describe(self) -> str:
        """Trace form: kind, src>dst, then the payload in declaration order."""
        dst = "*" if self.is_broadcast else str(self.dst)
        parts = [str(self.kind), f"{self.src}>{dst}"]
        parts.extend(f"{name}={format_value(value)}" for name, value in self.payload())
        return " ".join(parts)

    def to(self, dst: NodeId) -> Message:
        return dataclasses.replace(self, dst=dst)


@dataclasses.dataclass(frozen=True)
class TimerRequest:
    kind: TimerKind
    # None cancels the timer
    deadline: int | None


@dataclasses.dataclass(frozen=True)
class Note:
    """Something worth a trace line that is not a message."""

    event: str
    fields: tuple[tuple[str, object], ...] = ()

    def describe(self) -> str:
        return " ".join(f"{k}={format_value(v)}" for k, v in self.fields)


@dataclasses.dataclass(frozen=True)
class ParentCandidate:
    neighbor: NodeId
    hops: Hops
    neighbor_parent: NodeId | None
    position: Position | None = None


@dataclasses.dataclass(frozen=True)
class SwitchRace:
    neighbor: NodeId
    neighbor_hops: Hops
    seq: int


@dataclasses.dataclass(frozen=True)
class NodeState:
    id: NodeId
    alive: bool = True
    is_base_station: bool = False
    parent: NodeId | None = None
    hops: Hops = INFINITY
    broken_hops: int = 0
    pending: bool = False
    pending_hops: int = 0
    neighbors: frozenset[NodeId] = frozenset()
    neighbor_positions: Mapping[NodeId, Position] = dataclasses.field(
        default_factory=dict
    )
    children: frozenset[NodeId] = frozenset()
    # last time each child sent FORWARD
    child_seen: Mapping[NodeId, int] = dataclasses.field(default_factory=dict)
    request_senders: frozenset[NodeId] = frozenset()
    position: Position | None = None
    recent_failed_neighbors: frozenset[NodeId] = frozenset()
    active_timers: frozenset[TimerKind] = frozenset()
    candidates: Mapping[NodeId, ParentCandidate] = dataclasses.field(
        default_factory=dict
    )
    data_buffer: tuple[Message, ...] = ()
    next_seq: int = 0
    # newest beacon flood taken part in, None before the first
    beacon_epoch: int | None = None
    joining: bool = False
    join_responses: Mapping[NodeId, Hops] = dataclasses.field(default_factory=dict)
    race: SwitchRace | None = None

    @property
    def is_connected(self) -> bool:
        return self.hops != INFINITY

    @property
    def can_serve(self) -> bool:
        """Connected and not flagged broken: may advertise its path."""
        return self.is_connected and not self.pending

    def reset(self) -> NodeState:
        """Blank routing state, keeping identity, neighborhood, the data
        sequence counter and the newest beacon epoch."""
        return NodeState(
            id=self.id,
            is_base_station=self.is_base_station,
            neighbors=self.neighbors,
            neighbor_positions=self.neighbor_positions,
            position=self.position,
            next_seq=self.next_seq,
            beacon_epoch=self.beacon_epoch,
        )


@dataclasses.dataclass(frozen=True)
class Transition:
    state: NodeState
    messages: tuple[Message, ...] = ()
    timers: tuple[TimerRequest, ...] = ()
    notes: tuple[Note, ...] = ()
