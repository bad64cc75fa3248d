from __future__ import annotations

import pytest

from wsn_repair import loops, main, topology, trace


@pytest.fixture
def run(capsys):
    def _(*argv):
        code = main.dispatch([str(arg) for arg in argv])
        return code, capsys.readouterr().out

    return _


@pytest.fixture
def scenario_file(tmp_path, five_node_file):
    path = tmp_path / "five_node.scn"
    path.write_text("topology five_node.txt\nhorizon 60\nseed 3\n")
    return path


def test_loops_enum__source(run, five_node_file):
    code, out = run("loops", "enum", "--graph", five_node_file, "--source", 1)

    assert code == 0
    lines = out.splitlines()
    assert [line for line in lines if line.startswith("block")] == [
        "block 2 7",
        "block 3 3",
    ]
    assert len([line for line in lines if "->" in line]) == 10


def test_loops_enum__all(run, five_node_file):
    code, out = run("loops", "enum", "--graph", five_node_file, "--all")

    assert code == 0
    assert [line for line in out.splitlines() if line.startswith("source")] == [
        "source 1 2",
        "source 2 1",
        "source 3 1",
    ]


@pytest.mark.parametrize("which", [("--source", "1"), ("--all",)])
def test_loops_oracle_agrees_with_enum(run, five_node_file, which):
    _, enumerated = run("loops", "enum", "--graph", five_node_file, *which)
    code, brute_force = run("loops", "oracle", "--graph", five_node_file, *which)

    assert code == 0
    assert set(brute_force.splitlines()) == set(enumerated.splitlines())


def test_loops_enum__unknown_source(run, five_node_file, get_logs):
    code, _ = run("loops", "enum", "--graph", five_node_file, "--source", 9)

    assert code == 2
    assert get_logs("ERROR", "unknown node 9")


@pytest.mark.parametrize(
    "argv",
    [
        (),
        ("loops", "enum", "--graph", "g.txt"),
        ("loops", "enum", "--graph", "g.txt", "--source", "1", "--all"),
        ("sim", "fly"),
        ("topo", "gen", "--n", "3"),
    ],
)
def test_usage_errors(run, argv):
    code, out = run(*argv)

    assert code == 1
    assert out == ""


def test_missing_input(run, tmp_path, get_logs):
    code, _ = run("loops", "enum", "--graph", tmp_path / "nope.txt", "--all")

    assert code == 2
    assert get_logs("ERROR", "nope.txt")


def test_malformed_input(run, tmp_path, get_logs):
    graph = tmp_path / "bad.txt"
    graph.write_text("base 1\nedge 1 1 1\n")

    code, _ = run("loops", "enum", "--graph", graph, "--all")

    assert code == 2
    assert get_logs("ERROR", "bad.txt:2:")


def test_duplicate_loop_is_internal_error(run, five_node_file, mocker, get_logs):
    report = loops.enumerate_loops_from_source(topology.load_topology(five_node_file), 1)
    mocker.patch("wsn_repair.loops.enumerate_all_loops", return_value=[report, report])

    code, out = run("loops", "enum", "--graph", five_node_file, "--all")

    assert code == 3
    assert out == ""
    assert get_logs("ERROR", "reported twice")


def test_unexpected_error_is_internal(run, five_node_file, mocker, get_logs):
    mocker.patch("wsn_repair.topology.load_topology", side_effect=RuntimeError("boom"))

    code, _ = run("loops", "enum", "--graph", five_node_file, "--all")

    assert code == 3
    assert get_logs("ERROR", "Unexpected error")


def test_topo_gen(run, tmp_path):
    first, second = tmp_path / "a.txt", tmp_path / "b.txt"
    for out in (first, second):
        code, _ = run(
            "topo", "gen", "--n", 12, "--width", 50, "--height", 50,
            "--range", 25, "--seed", 5, "--out", out,
        )
        assert code == 0

    assert first.read_text() == second.read_text()
    assert first.read_text().startswith("# generated n=12")


def test_topo_gen__then_loops(run, tmp_path):
    graph = tmp_path / "gen.txt"
    run(
        "topo", "gen", "--n", 8, "--width", 30, "--height", 30,
        "--range", 20, "--seed", 1, "--out", graph,
    )

    code, _ = run("loops", "enum", "--graph", graph, "--all")

    assert code == 0


@pytest.mark.parametrize(
    "n, seed, expected",
    [(1, 5, 2), (3, -1, 1)],
)
def test_topo_gen__invalid(run, tmp_path, n, seed, expected):
    code, _ = run(
        "topo", "gen", "--n", n, "--width", 50, "--height", 50,
        "--range", 25, "--seed", seed, "--out", tmp_path / "x.txt",
    )

    assert code == expected


def test_sim_run_then_analyze(run, tmp_path, scenario_file):
    trace_file = tmp_path / "run.tsv"

    code, out = run("sim", "run", "--scenario", scenario_file, "--trace", trace_file)
    assert code == 0
    assert out == ""
    assert trace_file.read_text().startswith("# seed 3\n")

    code, out = run("trace", "analyze", "--trace", trace_file, "--scenario", scenario_file)

    assert code == 0
    lines = out.splitlines()
    assert "truncated 0" in lines
    assert "delivery_ratio 1.0000" in lines
    assert "messages.REQUEST 0" in lines
    assert "orphan_count 0" in lines


def test_sim_run__stdout_and_seed(run, scenario_file):
    code, out = run("sim", "run", "--scenario", scenario_file, "--seed", 11)

    assert code == 0
    parsed = trace.parse_trace(out)
    assert parsed.seed == 11
    assert parsed.truncated is False


def test_sim_run__seed_out_of_range(run, scenario_file):
    code, _ = run("sim", "run", "--scenario", scenario_file, "--seed", 2**64)

    assert code == 1


def test_sim_run__bad_scenario(run, tmp_path, five_node_file, get_logs):
    path = tmp_path / "bad.scn"
    path.write_text("topology five_node.txt\nhorizon 10\nfault node 9 3\n")

    code, _ = run("sim", "run", "--scenario", path)

    assert code == 2
    assert get_logs("ERROR", "unknown node 9")


def test_trace_analyze__truncated(run, tmp_path, scenario_file, get_logs):
    full = tmp_path / "full.tsv"
    run("sim", "run", "--scenario", scenario_file, "--trace", full)
    cut = tmp_path / "cut.tsv"
    cut.write_text(full.read_text().split(trace.SNAPSHOT_MARKER)[0])

    code, out = run("trace", "analyze", "--trace", cut, "--scenario", scenario_file)

    assert code == 0
    assert "truncated 1" in out.splitlines()
    assert get_logs("WARNING", "report is partial")


def test_trace_analyze__custom_template(run, tmp_path, scenario_file):
    trace_file = tmp_path / "run.tsv"
    run("sim", "run", "--scenario", scenario_file, "--trace", trace_file)
    custom = tmp_path / "short.j2"
    custom.write_text("delivered {{ report.delivered }} of {{ report.generated }}\n")

    code, out = run(
        "trace", "analyze", "--trace", trace_file, "--scenario", scenario_file,
        "--template", custom,
    )

    assert code == 0
    assert out.startswith("delivered ")


def test_trace_analyze__bad_template(run, tmp_path, scenario_file):
    trace_file = tmp_path / "run.tsv"
    run("sim", "run", "--scenario", scenario_file, "--trace", trace_file)
    custom = tmp_path / "bad.j2"
    custom.write_text("{% if %}")

    code, _ = run(
        "trace", "analyze", "--trace", trace_file, "--scenario", scenario_file,
        "--template", custom,
    )

    assert code == 2


def test_trace_analyze__malformed_trace(run, tmp_path, scenario_file):
    bad = tmp_path / "bad.tsv"
    bad.write_text("# seed 1\n# horizon_us 5\nnot a record\n")

    code, _ = run("trace", "analyze", "--trace", bad, "--scenario", scenario_file)

    assert code == 2


def test_main(mocker, five_node_file, capsys):
    mocker.patch(
        "sys.argv",
        ["wsn-repair", "loops", "enum", "--graph", str(five_node_file), "--source", "1"],
    )

    with pytest.raises(SystemExit) as exc_info:
        main.main()

    assert exc_info.value.code == 0
    assert "block 2 7" in capsys.readouterr().out
