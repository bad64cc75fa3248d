"""
Per-node route discovery and repair state machine.

Every handler takes the node's current state (plus the triggering message
or timer and the current time) and returns a `Transition`: the new state,
the messages to send, the timers to arm or cancel, and trace notes. Handlers
never mutate their input and never look at a clock.
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Callable, Iterable

from wsn_repair import log
from wsn_repair.messages import (
    BROADCAST,
    INFINITY,
    Hops,
    Message,
    MessageKind,
    NodeState,
    Note,
    ParentCandidate,
    SwitchRace,
    TimerKind,
    TimerRequest,
    Transition,
)
from wsn_repair.settings import Metric, ProtocolConfig
from wsn_repair.topology import NodeId, Position


class _Effects:
    """Accumulates the outcome of one handler call."""

    def __init__(self, state: NodeState):
        self.state = state
        self.messages: list[Message] = []
        self.timers: list[TimerRequest] = []
        self.notes: list[Note] = []

    def update(self, **changes) -> None:
        self.state = dataclasses.replace(self.state, **changes)

    def send(self, kind: MessageKind, dst: NodeId = BROADCAST, **payload) -> None:
        self.messages.append(Message(kind=kind, src=self.state.id, dst=dst, **payload))

    def send_to_children(self, kind: MessageKind, **payload) -> None:
        for child in sorted(self.state.children):
            self.send(kind, child, **payload)

    def arm(self, kind: TimerKind, deadline: int) -> None:
        self.timers.append(TimerRequest(kind, deadline))
        self.update(active_timers=self.state.active_timers | {kind})

    def cancel(self, *kinds: TimerKind) -> None:
        for kind in kinds:
            if kind in self.state.active_timers:
                self.timers.append(TimerRequest(kind, None))
                self.update(active_timers=self.state.active_timers - {kind})

    def note(self, event: str, **fields: object) -> None:
        self.notes.append(Note(event, tuple(fields.items())))

    def done(self) -> Transition:
        return Transition(
            state=self.state,
            messages=tuple(self.messages),
            timers=tuple(self.timers),
            notes=tuple(self.notes),
        )


def _unchanged(state: NodeState) -> Transition:
    return Transition(state=state)


def _ignored(state: NodeState, message: Message, reason: str) -> Transition:
    log.debug(f"Node {state.id} ignores {message.describe()}: {reason}")
    effects = _Effects(state)
    effects.note("ignored", kind=message.kind, src=message.src, reason=reason)
    return effects.done()


def _learn(effects: _Effects, node: NodeId, position: Position | None) -> None:
    state = effects.state
    if node in state.neighbors and (position is None or node in state.neighbor_positions):
        return
    positions = dict(state.neighbor_positions)
    if position is not None:
        positions[node] = position
    effects.update(neighbors=state.neighbors | {node}, neighbor_positions=positions)


def _back_n_value(state: NodeState) -> int:
    return max(state.broken_hops, state.pending_hops, 1)


def _reply_payload(state: NodeState) -> dict:
    return {
        "hops": int(state.hops),
        "parent": state.parent,
        "position": state.position,
    }


def _flush_buffer(effects: _Effects) -> None:
    state = effects.state
    for data in state.data_buffer:
        effects.send(MessageKind.DATA, state.parent, **_data_payload(data))
    if state.data_buffer:
        effects.note("flush", count=len(state.data_buffer))
        effects.update(data_buffer=())


def _serve_request_senders(effects: _Effects) -> None:
    state = effects.state
    for sender in sorted(state.request_senders - {state.parent}):
        effects.send(MessageKind.REPLY, sender, **_reply_payload(state))
    effects.update(request_senders=frozenset())


def _connect(
    effects: _Effects,
    parent: NodeId,
    hops: int,
    now: int,
    config: ProtocolConfig,
) -> None:
    """Install a freshly selected parent and confirm it right away."""
    state = effects.state
    effects.update(
        parent=parent,
        hops=hops,
        children=state.children - {parent},
        child_seen={k: v for k, v in state.child_seen.items() if k != parent},
        pending=False,
        pending_hops=0,
        broken_hops=0,
        candidates={},
        recent_failed_neighbors=frozenset(),
    )
    effects.cancel(
        TimerKind.REQUEST_RESEND, TimerKind.BACKN_BACKOFF, TimerKind.REPLY_WINDOW
    )
    _serve_request_senders(effects)
    _flush_buffer(effects)
    effects.send(MessageKind.FORWARD, parent)
    effects.arm(TimerKind.PPT, now + config.timeout_ppt)
    effects.arm(TimerKind.PROBE, now + config.probe_interval)


def _broadcast_request(effects: _Effects, now: int, config: ProtocolConfig) -> None:
    effects.send(MessageKind.REQUEST)
    effects.arm(TimerKind.REQUEST_RESEND, now + config.request_resend_timeout)


# Bootstrap


def start_beacon(
    state: NodeState, now: int, config: ProtocolConfig, epoch: int = 0
) -> Transition:
    """
    Base station: start a beacon flood that builds the tree. Epoch 0 is the
    initial flood; a later epoch rebuilds shortest-hop routes over whatever
    the network has become.
    """
    effects = _Effects(state)
    effects.update(hops=0, parent=None, beacon_epoch=epoch)
    if epoch:
        effects.note("rebeacon", epoch=epoch)
    effects.send(MessageKind.BEACON, hops=0, epoch=epoch, position=state.position)
    return effects.done()


def _rebuild_from_beacon(effects: _Effects) -> None:
    """Drop the repair and join machinery of the previous tree."""
    effects.update(
        broken_hops=0,
        pending=False,
        pending_hops=0,
        children=frozenset(),
        child_seen={},
        candidates={},
        recent_failed_neighbors=frozenset(),
        joining=False,
        join_responses={},
        race=None,
    )
    effects.cancel(
        TimerKind.PPT,
        TimerKind.PROBE,
        TimerKind.REQUEST_RESEND,
        TimerKind.BACKN_BACKOFF,
        TimerKind.REPLY_WINDOW,
        TimerKind.PENDING_FORWARD,
        TimerKind.JOIN_RETRY,
        TimerKind.SWITCH_RACE,
    )


def init_from_beacon(
    state: NodeState, beacon: Message, now: int, config: ProtocolConfig
) -> Transition:
    """
    Take part in the first flood heard, and again in every strictly newer
    one. Repeats of the current flood are ignored.
    """
    effects = _Effects(state)
    _learn(effects, beacon.src, beacon.position)
    epoch = beacon.epoch or 0
    if state.is_base_station:
        return effects.done()
    if state.beacon_epoch is not None and epoch <= state.beacon_epoch:
        return effects.done()

    assert beacon.hops is not None
    hops = beacon.hops + 1
    if state.beacon_epoch is not None:
        effects.note("rebeacon", epoch=epoch, parent=beacon.src)
        _rebuild_from_beacon(effects)
    effects.update(parent=beacon.src, beacon_epoch=epoch)
    if hops >= config.max_hops:
        effects.update(hops=INFINITY, broken_hops=1)
        effects.note("max_hops", hops=hops)
    else:
        effects.update(hops=hops)
        effects.send(
            MessageKind.BEACON, hops=hops, epoch=epoch, position=state.position
        )
        _serve_request_senders(effects)
        _flush_buffer(effects)
    effects.arm(TimerKind.PROBE, now + config.probe_interval)
    return effects.done()


def start_orphan(state: NodeState, now: int, config: ProtocolConfig) -> Transition:
    """A node coming back with blank routing state looks for a parent."""
    effects = _Effects(state)
    effects.update(beacon_epoch=state.beacon_epoch or 0)
    if state.is_base_station:
        effects.update(hops=0, parent=None)
        return effects.done()
    _broadcast_request(effects, now, config)
    return effects.done()


def learn_neighbor(
    state: NodeState, node: NodeId, position: Position | None = None
) -> NodeState:
    effects = _Effects(state)
    _learn(effects, node, position)
    return effects.state


# Probing and failure detection


def probe_parent(state: NodeState, now: int, config: ProtocolConfig) -> Transition:
    if not state.alive:
        return _unchanged(state)
    effects = _Effects(state)

    horizon = now - 3 * config.probe_interval
    stale = {child for child, seen in state.child_seen.items() if seen < horizon}
    if stale:
        effects.update(
            children=state.children - stale,
            child_seen={k: v for k, v in state.child_seen.items() if k not in stale},
        )
        effects.note("children_pruned", nodes=tuple(sorted(stale)))

    if state.parent is None:
        if TimerKind.REQUEST_RESEND not in state.active_timers:
            _broadcast_request(effects, now, config)
        return effects.done()

    effects.send(MessageKind.FORWARD, state.parent)
    effects.arm(TimerKind.PPT, now + config.timeout_ppt)
    effects.arm(TimerKind.PROBE, now + config.probe_interval)
    repairing = {TimerKind.REQUEST_RESEND, TimerKind.BACKN_BACKOFF}
    if not state.is_connected and not (repairing & state.active_timers):
        _broadcast_request(effects, now, config)
    return effects.done()


def handle_forward(
    state: NodeState, message: Message, now: int, config: ProtocolConfig
) -> Transition:
    effects = _Effects(state)
    sender = message.src
    _learn(effects, sender, None)
    if sender != state.parent:
        effects.update(
            children=effects.state.children | {sender},
            child_seen={**state.child_seen, sender: now},
        )
    if state.can_serve:
        effects.send(MessageKind.BACK_Y, sender, hops=int(state.hops))
    else:
        effects.send(MessageKind.BACK_N, sender, broken_hops=_back_n_value(state))
    return effects.done()


def handle_back_y(
    state: NodeState, message: Message, now: int, config: ProtocolConfig
) -> Transition:
    if message.src != state.parent:
        return _ignored(state, message, "not_parent")
    assert message.hops is not None

    effects = _Effects(state)
    effects.cancel(TimerKind.PPT)
    hops = message.hops + 1
    if hops >= config.max_hops:
        effects.update(hops=INFINITY, broken_hops=max(state.broken_hops, 1))
        if state.is_connected:
            effects.note("max_hops", hops=hops)
        return effects.done()

    reconnected = not state.can_serve
    effects.update(
        hops=hops,
        pending=False,
        pending_hops=0,
        broken_hops=0,
        candidates={},
        recent_failed_neighbors=frozenset(),
    )
    effects.cancel(
        TimerKind.BACKN_BACKOFF, TimerKind.REQUEST_RESEND, TimerKind.REPLY_WINDOW
    )
    if reconnected:
        _serve_request_senders(effects)
        _flush_buffer(effects)
    return effects.done()


def handle_ppt_timeout(state: NodeState, now: int, config: ProtocolConfig) -> Transition:
    if state.parent is None:
        return _unchanged(state)
    effects = _Effects(state)
    failed = state.parent
    effects.note("parent_lost", parent=failed)
    effects.update(
        parent=None,
        hops=INFINITY,
        broken_hops=1,
        pending=False,
        pending_hops=0,
        candidates={},
        recent_failed_neighbors=state.recent_failed_neighbors | {failed},
    )
    effects.cancel(TimerKind.PROBE, TimerKind.BACKN_BACKOFF, TimerKind.REPLY_WINDOW)
    _broadcast_request(effects, now, config)
    effects.send_to_children(MessageKind.PENDING, pending_hops=1)
    return effects.done()


def handle_back_n(
    state: NodeState, message: Message, now: int, config: ProtocolConfig
) -> Transition:
    if message.src != state.parent:
        return _ignored(state, message, "not_parent")
    assert message.broken_hops is not None

    effects = _Effects(state)
    effects.cancel(TimerKind.PPT)
    effects.update(
        hops=INFINITY,
        broken_hops=min(message.broken_hops + 1, config.max_hops),
    )
    if state.is_connected:
        effects.send_to_children(MessageKind.PENDING, pending_hops=1)
    waiting = {TimerKind.BACKN_BACKOFF, TimerKind.REQUEST_RESEND}
    if not (waiting & state.active_timers):
        effects.arm(
            TimerKind.BACKN_BACKOFF,
            now + config.backn_backoff_base * message.broken_hops,
        )
    return effects.done()


def handle_backn_backoff_timeout(
    state: NodeState, now: int, config: ProtocolConfig
) -> Transition:
    if state.is_connected:
        return _unchanged(state)
    effects = _Effects(state)
    _broadcast_request(effects, now, config)
    return effects.done()


# New parent discovery


def handle_request(
    state: NodeState, message: Message, now: int, config: ProtocolConfig
) -> Transition:
    sender = message.src
    effects = _Effects(state)
    _learn(effects, sender, message.position)
    if sender in state.children or sender == state.parent:
        return effects.done()
    if state.can_serve:
        effects.send(MessageKind.REPLY, sender, **_reply_payload(state))
    else:
        effects.update(request_senders=state.request_senders | {sender})
    return effects.done()


def handle_reply(
    state: NodeState, message: Message, now: int, config: ProtocolConfig
) -> Transition:
    if state.is_connected:
        return _ignored(state, message, "connected")
    assert message.hops is not None

    effects = _Effects(state)
    _learn(effects, message.src, message.position)
    candidate = ParentCandidate(
        neighbor=message.src,
        hops=message.hops,
        neighbor_parent=message.parent,
        position=message.position,
    )
    effects.update(candidates={**state.candidates, message.src: candidate})
    if TimerKind.REPLY_WINDOW not in state.active_timers:
        effects.arm(TimerKind.REPLY_WINDOW, now + config.timeout_ppt)
    return effects.done()


def _rejection(
    state: NodeState, candidate: ParentCandidate, config: ProtocolConfig
) -> str | None:
    if candidate.neighbor_parent == state.id:
        return "two_node_loop"
    if candidate.neighbor_parent in state.children:
        return "three_node_loop"
    if candidate.hops + 1 >= config.max_hops:
        return "max_hops"
    return None


def select_new_parent(state: NodeState, now: int, config: ProtocolConfig) -> Transition:
    effects = _Effects(state)
    effects.cancel(TimerKind.REPLY_WINDOW)
    if state.is_connected:
        effects.update(candidates={})
        return effects.done()

    survivors = []
    for candidate in sorted(state.candidates.values(), key=lambda c: c.neighbor):
        if reason := _rejection(state, candidate, config):
            log.debug(f"Node {state.id} rejects parent {candidate.neighbor}: {reason}")
            effects.note("reject", candidate=candidate.neighbor, reason=reason)
        else:
            survivors.append(candidate)

    if not survivors:
        effects.update(candidates={})
        if TimerKind.REQUEST_RESEND not in effects.state.active_timers:
            effects.arm(TimerKind.REQUEST_RESEND, now + config.request_resend_timeout)
        return effects.done()

    best = min(
        survivors, key=lambda c: (metric_score(c, state, config), c.neighbor)
    )
    effects.note("select", parent=best.neighbor, hops=int(best.hops) + 1)
    _connect(effects, best.neighbor, int(best.hops) + 1, now, config)
    return effects.done()


def handle_request_resend_timeout(
    state: NodeState, now: int, config: ProtocolConfig
) -> Transition:
    if state.is_connected:
        return _unchanged(state)
    effects = _Effects(state)
    _broadcast_request(effects, now, config)
    return effects.done()


# Failure information propagation


def handle_pending(
    state: NodeState, message: Message, now: int, config: ProtocolConfig
) -> Transition:
    if message.src != state.parent:
        return _ignored(state, message, "not_parent")
    assert message.pending_hops is not None

    effects = _Effects(state)
    pending_hops = min(message.pending_hops + 1, config.max_hops)
    if state.pending:
        # Already flagged: forwarding again would circulate around a loop.
        effects.update(pending_hops=min(state.pending_hops, pending_hops))
        return effects.done()

    effects.update(pending=True, pending_hops=pending_hops)
    if state.children:
        effects.arm(TimerKind.PENDING_FORWARD, now + config.pending_forward_delay)
    return effects.done()


def handle_pending_forward_timeout(
    state: NodeState, now: int, config: ProtocolConfig
) -> Transition:
    if not state.pending:
        return _unchanged(state)
    effects = _Effects(state)
    effects.send_to_children(MessageKind.PENDING, pending_hops=state.pending_hops)
    return effects.done()


# Data


def _data_payload(message: Message) -> dict:
    return {"origin": message.origin, "seq": message.seq, "route": message.route}


def forward_data(
    state: NodeState, message: Message, now: int, config: ProtocolConfig
) -> Transition:
    effects = _Effects(state)
    route = (*(message.route or ()), state.id)
    data = dataclasses.replace(message, src=state.id, route=route)

    if state.is_base_station:
        via = route[1] if len(route) > 1 else state.id
        effects.note("data_deliver", origin=data.origin, seq=data.seq, via=via)
        if len(route) > 1:
            effects.send(
                MessageKind.DATA_ACK,
                route[-2],
                origin=data.origin,
                seq=data.seq,
                via=via,
                route=route,
            )
        return effects.done()

    if len(route) > config.max_hops:
        effects.note("data_drop", origin=data.origin, seq=data.seq, reason="ttl")
        return effects.done()

    if state.can_serve and state.parent is not None:
        effects.send(MessageKind.DATA, state.parent, **_data_payload(data))
        return effects.done()

    buffer = state.data_buffer
    if len(buffer) >= config.data_buffer_capacity:
        oldest, buffer = buffer[0], buffer[1:]
        effects.note(
            "data_drop", origin=oldest.origin, seq=oldest.seq, reason="buffer_full"
        )
    effects.update(data_buffer=(*buffer, data))
    effects.note("data_buffer", origin=data.origin, seq=data.seq)
    return effects.done()


def generate_data(state: NodeState, now: int, config: ProtocolConfig) -> Transition:
    if not state.alive or state.is_base_station:
        return _unchanged(state)
    seq = state.next_seq
    data = Message(MessageKind.DATA, src=state.id, dst=state.id, origin=state.id, seq=seq)
    transition = forward_data(
        dataclasses.replace(state, next_seq=seq + 1), data, now, config
    )
    note = Note("data_gen", (("origin", state.id), ("seq", seq)))
    return dataclasses.replace(transition, notes=(note, *transition.notes))


def handle_data_ack(
    state: NodeState, message: Message, now: int, config: ProtocolConfig
) -> Transition:
    route = message.route or ()
    if state.id not in route:
        return _ignored(state, message, "not_on_route")
    index = route.index(state.id)
    effects = _Effects(state)
    if index > 0:
        effects.send(
            MessageKind.DATA_ACK,
            route[index - 1],
            origin=message.origin,
            seq=message.seq,
            via=message.via,
            route=route,
        )
        return effects.done()

    race = state.race
    if race is None or message.origin != state.id or message.seq != race.seq:
        return effects.done()

    effects.cancel(TimerKind.SWITCH_RACE)
    effects.update(race=None)
    if message.via == race.neighbor and state.can_serve:
        hops = int(race.neighbor_hops) + 1
        effects.note("switch", old=state.parent, parent=race.neighbor, hops=hops)
        effects.update(
            parent=race.neighbor,
            hops=hops,
            children=state.children - {race.neighbor},
            child_seen={k: v for k, v in state.child_seen.items() if k != race.neighbor},
        )
    else:
        effects.note("switch_kept", parent=state.parent, neighbor=race.neighbor)
    return effects.done()


# Join and parent improvement


def node_join(state: NodeState, now: int, config: ProtocolConfig) -> Transition:
    effects = _Effects(state)
    effects.update(joining=True, join_responses={}, beacon_epoch=0)
    effects.send(MessageKind.JOIN_PROBE, position=state.position)
    effects.arm(TimerKind.JOIN_RETRY, now + config.timeout_ppt)
    return effects.done()


def handle_join_probe(
    state: NodeState, message: Message, now: int, config: ProtocolConfig
) -> Transition:
    effects = _Effects(state)
    _learn(effects, message.src, message.position)
    if state.can_serve:
        effects.send(
            MessageKind.JOIN_INFO,
            message.src,
            hops=int(state.hops),
            position=state.position,
        )
    return effects.done()


def handle_join_info(
    state: NodeState, message: Message, now: int, config: ProtocolConfig
) -> Transition:
    assert message.hops is not None
    effects = _Effects(state)
    _learn(effects, message.src, message.position)
    if state.joining:
        effects.update(
            join_responses={**state.join_responses, message.src: message.hops}
        )
        return effects.done()

    if (
        state.can_serve
        and not state.is_base_station
        and state.race is None
        and message.src != state.parent
        and message.hops + 1 < state.hops
    ):
        return consider_shorter_parent(
            effects.state, message.src, message.hops, now, config
        )
    return effects.done()


def handle_join_timeout(state: NodeState, now: int, config: ProtocolConfig) -> Transition:
    if not state.joining:
        return _unchanged(state)
    effects = _Effects(state)
    responders = [
        (hops, node)
        for node, hops in state.join_responses.items()
        if hops + 1 < config.max_hops
    ]
    if not responders:
        effects.update(join_responses={})
        effects.send(MessageKind.JOIN_PROBE, position=state.position)
        effects.arm(TimerKind.JOIN_RETRY, now + config.request_resend_timeout)
        return effects.done()

    hops, parent = min(responders)
    effects.update(joining=False, join_responses={})
    effects.note("join", parent=parent, hops=int(hops) + 1)
    _connect(effects, parent, int(hops) + 1, now, config)
    effects.send(
        MessageKind.JOIN_INFO, hops=int(hops) + 1, position=state.position
    )
    return effects.done()


def consider_shorter_parent(
    state: NodeState,
    neighbor: NodeId,
    neighbor_hops: Hops,
    now: int,
    config: ProtocolConfig,
) -> Transition:
    """
    Race one DATA item along two paths, through `neighbor` and through the
    current parent. The parent is only switched if the copy through
    `neighbor` is acknowledged first.
    """
    if (
        not state.can_serve
        or state.parent is None
        or neighbor == state.parent
        or not neighbor_hops + 1 < state.hops
    ):
        return _unchanged(state)

    effects = _Effects(state)
    seq = state.next_seq
    effects.update(
        next_seq=seq + 1,
        race=SwitchRace(neighbor=neighbor, neighbor_hops=neighbor_hops, seq=seq),
    )
    effects.note("data_gen", origin=state.id, seq=seq)
    effects.note("switch_race", neighbor=neighbor, seq=seq)
    for via in (neighbor, state.parent):
        effects.send(
            MessageKind.DATA, via, origin=state.id, seq=seq, route=(state.id,)
        )
    effects.arm(TimerKind.SWITCH_RACE, now + config.request_resend_timeout)
    return effects.done()


def handle_switch_timeout(
    state: NodeState, now: int, config: ProtocolConfig
) -> Transition:
    if state.race is None:
        return _unchanged(state)
    effects = _Effects(state)
    effects.note("switch_abandoned", neighbor=state.race.neighbor)
    effects.update(race=None)
    return effects.done()


# Metric


def _bearing(origin: Position, target: Position) -> float:
    return math.atan2(target[1] - origin[1], target[0] - origin[0])


def _mean_bearing(origin: Position, targets: Iterable[Position]) -> float | None:
    xs = ys = 0.0
    for target in targets:
        angle = _bearing(origin, target)
        xs += math.cos(angle)
        ys += math.sin(angle)
    if math.isclose(xs, 0.0, abs_tol=1e-9) and math.isclose(ys, 0.0, abs_tol=1e-9):
        return None
    return math.atan2(ys, xs)


def metric_score(
    candidate: ParentCandidate, state: NodeState, config: ProtocolConfig
) -> float:
    """Lower is better. HOP ranks by hops; LOCATION adds a penalty to
    candidates lying towards the neighbors that recently failed."""
    score = float(candidate.hops)
    if config.metric == Metric.HOP or not state.recent_failed_neighbors:
        return score

    failed_positions = [
        state.neighbor_positions[n]
        for n in sorted(state.recent_failed_neighbors)
        if n in state.neighbor_positions
    ]
    candidate_position = candidate.position or state.neighbor_positions.get(
        candidate.neighbor
    )
    if state.position is None or candidate_position is None or not failed_positions:
        log.warning(
            f"Node {state.id}: location metric needs positions, falling back to hops"
        )
        return score

    failed_bearing = _mean_bearing(state.position, failed_positions)
    if failed_bearing is None:
        return score
    offset = _bearing(state.position, candidate_position) - failed_bearing
    # wrap into [-pi, pi]
    offset = math.atan2(math.sin(offset), math.cos(offset))
    if abs(math.degrees(offset)) <= config.location_cone_degrees:
        return score + config.location_penalty
    return score


# Dispatch

_MessageHandler = Callable[[NodeState, Message, int, ProtocolConfig], Transition]
_TimerHandler = Callable[[NodeState, int, ProtocolConfig], Transition]

MESSAGE_HANDLERS: dict[MessageKind, _MessageHandler] = {
    MessageKind.BEACON: init_from_beacon,
    MessageKind.FORWARD: handle_forward,
    MessageKind.BACK_Y: handle_back_y,
    MessageKind.BACK_N: handle_back_n,
    MessageKind.REQUEST: handle_request,
    MessageKind.REPLY: handle_reply,
    MessageKind.PENDING: handle_pending,
    MessageKind.DATA: forward_data,
    MessageKind.DATA_ACK: handle_data_ack,
    MessageKind.JOIN_PROBE: handle_join_probe,
    MessageKind.JOIN_INFO: handle_join_info,
}

TIMER_HANDLERS: dict[TimerKind, _TimerHandler] = {
    TimerKind.PROBE: probe_parent,
    TimerKind.PPT: handle_ppt_timeout,
    TimerKind.REQUEST_RESEND: handle_request_resend_timeout,
    TimerKind.BACKN_BACKOFF: handle_backn_backoff_timeout,
    TimerKind.REPLY_WINDOW: select_new_parent,
    TimerKind.PENDING_FORWARD: handle_pending_forward_timeout,
    TimerKind.JOIN_RETRY: handle_join_timeout,
    TimerKind.SWITCH_RACE: handle_switch_timeout,
}


def on_message(
    state: NodeState, message: Message, now: int, config: ProtocolConfig
) -> Transition:
    if not state.alive:
        return _unchanged(state)
    return MESSAGE_HANDLERS[message.kind](state, message, now, config)


def on_timer(
    state: NodeState, kind: TimerKind, now: int, config: ProtocolConfig
) -> Transition:
    """A timer fired: it is no longer active, then the handler runs."""
    if not state.alive:
        return _unchanged(state)
    fired = dataclasses.replace(state, active_timers=state.active_timers - {kind})
    return TIMER_HANDLERS[kind](fired, now, config)
