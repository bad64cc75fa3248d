from __future__ import annotations

import pathlib

import pytest

from wsn_repair import messages, scenario, settings, topology

# LineIds follow the listing of the worked example network.
FIVE_NODE_EDGES = {
    1: (1, 2),
    2: (1, 3),
    3: (1, 5),
    4: (2, 3),
    5: (2, 4),
    6: (3, 4),
    7: (3, 5),
    8: (4, 5),
}

FIVE_NODE_TEXT = """\
# five nodes, eight lines, ten loops through node 1
base 1
edge 1 1 2
edge 2 1 3
edge 3 1 5
edge 4 2 3
edge 5 2 4
edge 6 3 4
edge 7 3 5
edge 8 4 5
"""


@pytest.fixture
def five_node():
    return topology.explicit_topology(FIVE_NODE_EDGES, base_station=1)


@pytest.fixture
def make_topology():
    def _(pairs, base_station=0, nodes=()):
        return topology.explicit_topology(pairs, base_station=base_station, nodes=nodes)

    return _


@pytest.fixture
def make_grid():
    """rows x cols unit-disk grid, 10 apart with range 10: 4-neighborhoods,
    node id row * cols + col, base station 0 in the corner."""

    def _(rows, cols, spacing=10.0, radio_range=10.0):
        placements = [
            topology.NodePlacement(
                r * cols + c, c * spacing, r * spacing, radio_range
            )
            for r in range(rows)
            for c in range(cols)
        ]
        return topology.build_unit_disk(placements, base_station=0)

    return _


@pytest.fixture
def protocol_config():
    def _(**kwargs):
        return settings.ProtocolConfig(**kwargs)

    return _


@pytest.fixture
def node_state():
    def _(id=2, **kwargs):
        return messages.NodeState(id=id, **kwargs)

    return _


@pytest.fixture
def make_scenario():
    def _(topology, horizon_s=60, faults=(), seed=0, protocol=None, **simulation):
        return scenario.Scenario(
            topology=topology,
            horizon=horizon_s * settings.MICROSECONDS,
            seed=seed,
            protocol=protocol or settings.ProtocolConfig(),
            simulation=settings.SimulationConfig(**simulation),
            faults=tuple(faults),
        )

    return _


@pytest.fixture
def five_node_file(tmp_path) -> pathlib.Path:
    path = tmp_path / "five_node.txt"
    path.write_text(FIVE_NODE_TEXT)
    return path


@pytest.fixture
def get_logs(caplog):
    caplog.set_level("DEBUG")

    def _(level=None, match=None):
        return [
            log.message
            for log in caplog.records
            if (level is None or level == log.levelname)
            and (match is None or match in log.message)
        ]

    return _
