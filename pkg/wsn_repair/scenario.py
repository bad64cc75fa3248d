"""
Scenario files: which topology to run, for how long, with which settings,
and which faults to inject when.

    topology grid.txt
    seed 7
    horizon 60
    set timeout_ppt 0.5
    fault node 12 20
    fault area 50 50 15 20
    recover 12 40
    join 30 55.5 10 12 25
    rebeacon 45
    data 4 every 2
    data default every 5
"""

from __future__ import annotations

import dataclasses
import math
import pathlib
from collections.abc import Mapping

from wsn_repair import log, settings
from wsn_repair.topology import (
    NodeId,
    NodePlacement,
    ParseError,
    Topology,
    TopologyError,
    build_unit_disk,
    load_topology,
)

MAX_SEED = 2**64 - 1


class ScenarioError(ParseError):
    pass


@dataclasses.dataclass(frozen=True)
class NodeFail:
    node: NodeId
    time: int

    def describe(self) -> str:
        return f"node {self.node}"


@dataclasses.dataclass(frozen=True)
class AreaFail:
    cx: float
    cy: float
    radius: float
    time: int

    def describe(self) -> str:
        return f"area {self.cx},{self.cy} r={self.radius}"

    def covers(self, placement: NodePlacement) -> bool:
        return math.dist((self.cx, self.cy), placement.position) <= self.radius


@dataclasses.dataclass(frozen=True)
class NodeRecover:
    node: NodeId
    time: int

    def describe(self) -> str:
        return f"recover {self.node}"


@dataclasses.dataclass(frozen=True)
class NodeJoin:
    node: NodeId
    x: float
    y: float
    range: float
    time: int

    def describe(self) -> str:
        return f"join {self.node}"

    @property
    def placement(self) -> NodePlacement:
        return NodePlacement(self.node, self.x, self.y, self.range)


@dataclasses.dataclass(frozen=True)
class Rebeacon:
    """The base station floods a fresh BEACON and every node it reaches
    rebuilds its route from it."""

    time: int

    def describe(self) -> str:
        return "rebeacon"


FaultSpec = NodeFail | AreaFail | NodeRecover | NodeJoin | Rebeacon


@dataclasses.dataclass(frozen=True, kw_only=True)
class Scenario:
    topology: Topology
    horizon: int
    seed: int = 0
    protocol: settings.ProtocolConfig = dataclasses.field(
        default_factory=settings.ProtocolConfig
    )
    simulation: settings.SimulationConfig = dataclasses.field(
        default_factory=settings.SimulationConfig
    )
    faults: tuple[FaultSpec, ...] = ()
    # per-node DATA cadence overriding simulation.data_interval, 0 disables
    data_intervals: Mapping[NodeId, int] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.horizon <= 0:
            raise ScenarioError("horizon must be > 0")
        if not 0 <= self.seed <= MAX_SEED:
            raise ScenarioError(f"seed must be in [0, 2^64), got {self.seed}")
        validate_faults(self.topology, self.faults)

    def data_interval(self, node: NodeId) -> int:
        return self.data_intervals.get(node, self.simulation.data_interval)

    def with_seed(self, seed: int) -> Scenario:
        return dataclasses.replace(self, seed=seed)


def validate_faults(topology: Topology, faults: tuple[FaultSpec, ...]) -> None:
    known = set(topology.nodes)
    for fault in sorted(faults, key=lambda f: f.time):
        if fault.time < 0:
            raise ScenarioError(f"{fault.describe()}: time must be >= 0")
        match fault:
            case NodeFail(node=node) | NodeRecover(node=node) if node not in known:
                raise ScenarioError(f"{fault.describe()}: unknown node {node}")
            case AreaFail() if not topology.is_placement_mode:
                raise ScenarioError("area failures need a unit-disk topology")
            case NodeJoin(node=node):
                if not topology.is_placement_mode:
                    raise ScenarioError("joins need a unit-disk topology")
                if node in known:
                    raise ScenarioError(f"join: node {node} already exists")
                known.add(node)


def final_topology(scenario: Scenario) -> Topology:
    """The topology once every scheduled join has happened."""
    joins = [f for f in scenario.faults if isinstance(f, NodeJoin)]
    if not joins:
        return scenario.topology
    assert scenario.topology.placements is not None
    return build_unit_disk(
        [*scenario.topology.placements.values(), *(j.placement for j in joins)],
        base_station=scenario.topology.base_station,
    )


def _float(token: str, what: str, lineno: int, source: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ScenarioError(f"{what} must be a number, got {token!r}", lineno, source)
    if not math.isfinite(value):
        raise ScenarioError(f"{what} must be finite, got {token}", lineno, source)
    return value


def _int(token: str, what: str, lineno: int, source: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ScenarioError(f"{what} must be an integer, got {token!r}", lineno, source)
    if value < 0:
        raise ScenarioError(f"{what} must be non-negative, got {value}", lineno, source)
    return value


def _time(token: str, lineno: int, source: str) -> int:
    try:
        return settings.non_negative_duration(token)
    except settings.InvalidSetting as exc:
        raise ScenarioError(f"time: {exc}", lineno, source) from exc


def _expect(args: list[str], count: int, usage: str, lineno: int, source: str):
    if len(args) != count:
        raise ScenarioError(f"expected `{usage}`", lineno, source)


def parse_scenario(
    text: str, base_dir: pathlib.Path = pathlib.Path("."), source: str = ""
) -> Scenario:
    topology: Topology | None = None
    seed = 0
    horizon: int | None = None
    protocol_values: dict[str, str] = {}
    simulation_values: dict[str, str] = {}
    faults: list[FaultSpec] = []
    data_intervals: dict[NodeId, int] = {}
    data_lines: dict[NodeId, int] = {}

    protocol_keys = settings.ProtocolConfig.field_names()
    simulation_keys = settings.SimulationConfig.field_names()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, *args = line.split()

        match keyword:
            case "topology":
                _expect(args, 1, "topology <path>", lineno, source)
                path = base_dir / args[0]
                try:
                    topology = load_topology(path)
                except OSError as exc:
                    raise ScenarioError(
                        f"cannot read topology {path}: {exc.strerror}", lineno, source
                    ) from exc
            case "seed":
                _expect(args, 1, "seed <u64>", lineno, source)
                seed = _int(args[0], "seed", lineno, source)
                if seed > MAX_SEED:
                    raise ScenarioError("seed must fit in 64 bits", lineno, source)
            case "horizon":
                _expect(args, 1, "horizon <seconds>", lineno, source)
                try:
                    horizon = settings.positive_duration(args[0])
                except settings.InvalidSetting as exc:
                    raise ScenarioError(f"horizon: {exc}", lineno, source) from exc
            case "set":
                _expect(args, 2, "set <key> <value>", lineno, source)
                key, value = args
                if key in protocol_keys:
                    target, config_class = protocol_values, settings.ProtocolConfig
                elif key in simulation_keys:
                    target, config_class = simulation_values, settings.SimulationConfig
                else:
                    raise ScenarioError(f"unknown setting {key!r}", lineno, source)
                try:
                    config_class.from_mapping({key: value})
                except settings.InvalidSetting as exc:
                    raise ScenarioError(str(exc), lineno, source) from exc
                target[key] = value
            case "fault" if args and args[0] == "node":
                _expect(args, 3, "fault node <id> <t>", lineno, source)
                faults.append(
                    NodeFail(
                        node=_int(args[1], "node id", lineno, source),
                        time=_time(args[2], lineno, source),
                    )
                )
            case "fault" if args and args[0] == "area":
                _expect(args, 5, "fault area <cx> <cy> <r> <t>", lineno, source)
                radius = _float(args[3], "radius", lineno, source)
                if radius <= 0:
                    raise ScenarioError("radius must be > 0", lineno, source)
                faults.append(
                    AreaFail(
                        cx=_float(args[1], "cx", lineno, source),
                        cy=_float(args[2], "cy", lineno, source),
                        radius=radius,
                        time=_time(args[4], lineno, source),
                    )
                )
            case "fault":
                raise ScenarioError(
                    "expected `fault node ...` or `fault area ...`", lineno, source
                )
            case "recover":
                _expect(args, 2, "recover <id> <t>", lineno, source)
                faults.append(
                    NodeRecover(
                        node=_int(args[0], "node id", lineno, source),
                        time=_time(args[1], lineno, source),
                    )
                )
            case "join":
                _expect(args, 5, "join <id> <x> <y> <range> <t>", lineno, source)
                radio_range = _float(args[3], "range", lineno, source)
                if radio_range <= 0:
                    raise ScenarioError("range must be > 0", lineno, source)
                faults.append(
                    NodeJoin(
                        node=_int(args[0], "node id", lineno, source),
                        x=_float(args[1], "x", lineno, source),
                        y=_float(args[2], "y", lineno, source),
                        range=radio_range,
                        time=_time(args[4], lineno, source),
                    )
                )
            case "rebeacon":
                _expect(args, 1, "rebeacon <t>", lineno, source)
                faults.append(Rebeacon(time=_time(args[0], lineno, source)))
            case "data":
                _expect(args, 3, "data <node|default> every <seconds>", lineno, source)
                if args[1] != "every":
                    raise ScenarioError(
                        "expected `data <node|default> every <seconds>`", lineno, source
                    )
                interval = _time(args[2], lineno, source)
                if args[0] == "default":
                    simulation_values["data_interval"] = args[2]
                else:
                    node = _int(args[0], "node id", lineno, source)
                    data_intervals[node] = interval
                    data_lines[node] = lineno
            case _:
                raise ScenarioError(f"unknown directive {keyword!r}", lineno, source)

    if topology is None:
        raise ScenarioError("missing `topology <path>` line", None, source)
    if horizon is None:
        raise ScenarioError("missing `horizon <seconds>` line", None, source)

    joined = {f.node for f in faults if isinstance(f, NodeJoin)}
    for node, lineno in data_lines.items():
        if node not in topology.nodes and node not in joined:
            raise ScenarioError(f"data: unknown node {node}", lineno, source)

    try:
        scenario = Scenario(
            topology=topology,
            horizon=horizon,
            seed=seed,
            protocol=settings.ProtocolConfig.from_mapping(protocol_values),
            simulation=settings.SimulationConfig.from_mapping(simulation_values),
            faults=tuple(faults),
            data_intervals=data_intervals,
        )
    except ScenarioError as exc:
        raise ScenarioError(exc.message, exc.lineno, source) from exc
    except (settings.InvalidSetting, TopologyError) as exc:
        raise ScenarioError(str(exc), None, source) from exc
    log.debug(
        f"Scenario {source or '<text>'}: {len(topology.nodes)} nodes, "
        f"{len(faults)} fault(s), horizon {horizon}us"
    )
    return scenario


def load_scenario(path: pathlib.Path) -> Scenario:
    return parse_scenario(path.read_text(), base_dir=path.parent, source=str(path))
