from __future__ import annotations

import argparse
import logging
import os
import pathlib
import sys

from wsn_repair import (
    analysis,
    cycles,
    engine,
    log,
    log_utils,
    loops,
    oracle,
    scenario,
    settings,
    template,
    topology,
    trace,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class InvariantViolation(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def main():
    config = settings.CliConfig.from_environ(environ=os.environ)
    logging.basicConfig(level=config.WSN_REPAIR_LOG_LEVEL)
    logging.getLogger().handlers[0].formatter = log_utils.DiagnosticFormatter()
    sys.exit(dispatch(sys.argv[1:]))


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        log.error(str(exc))
        return EXIT_USAGE
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)

    try:
        return args.func(args)
    except UsageError as exc:
        log.error(str(exc))
        return EXIT_USAGE
    except OSError as exc:
        log.error(f"{exc.filename}: {exc.strerror}")
        return EXIT_INPUT
    except (
        topology.TopologyError,
        settings.InvalidSetting,
        template.TemplateError,
    ) as exc:
        log.error(str(exc))
        return EXIT_INPUT
    except InvariantViolation as exc:
        log.error(f"invariant violated: {exc}")
        return EXIT_INTERNAL
    except Exception:
        log.exception("Unexpected error")
        return EXIT_INTERNAL


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog=log_utils.PROGRAM_NAME,
        description="Route repair simulator and loop enumeration toolkit for "
        "wireless sensor networks.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("sim", help="simulation").add_subparsers(
        dest="action", required=True
    )
    sim_run = sim.add_parser("run", help="run a scenario and write its trace")
    sim_run.add_argument("--scenario", type=pathlib.Path, required=True)
    sim_run.add_argument(
        "--seed", type=int, help="overrides the scenario's `seed` line"
    )
    sim_run.add_argument(
        "--trace", type=pathlib.Path, help="trace output file (default: stdout)"
    )
    sim_run.set_defaults(func=sim_run_command)

    loops_parser = commands.add_parser("loops", help="loop enumeration").add_subparsers(
        dest="action", required=True
    )
    for name, func, help_text in (
        ("enum", loops_enum_command, "BLOCK search"),
        ("oracle", loops_oracle_command, "brute-force reference enumeration"),
    ):
        sub = loops_parser.add_parser(name, help=help_text)
        sub.add_argument("--graph", type=pathlib.Path, required=True)
        which = sub.add_mutually_exclusive_group(required=True)
        which.add_argument("--source", type=int, help="loops through this node")
        which.add_argument(
            "--all", action="store_true", help="every loop, source by source"
        )
        sub.set_defaults(func=func)

    trace_parser = commands.add_parser("trace", help="trace analysis").add_subparsers(
        dest="action", required=True
    )
    analyze = trace_parser.add_parser("analyze", help="summarize a trace")
    analyze.add_argument("--trace", type=pathlib.Path, required=True)
    analyze.add_argument("--scenario", type=pathlib.Path, required=True)
    analyze.add_argument(
        "--template",
        type=pathlib.Path,
        help="report template, may extend the shipped one as \"base\"",
    )
    analyze.set_defaults(func=trace_analyze_command)

    topo = commands.add_parser("topo", help="topologies").add_subparsers(
        dest="action", required=True
    )
    gen = topo.add_parser("gen", help="random connected unit-disk topology")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--width", type=float, required=True)
    gen.add_argument("--height", type=float, required=True)
    gen.add_argument("--range", type=float, required=True, dest="radio_range")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", type=pathlib.Path, required=True)
    gen.set_defaults(func=topo_gen_command)

    return parser


def _output(text: str, path: pathlib.Path | None) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        path.write_text(text)
        log.info(f"Wrote {path}")


def sim_run_command(args: argparse.Namespace) -> int:
    loaded = scenario.load_scenario(args.scenario)
    if args.seed is not None and not 0 <= args.seed <= scenario.MAX_SEED:
        raise UsageError(f"--seed must be in [0, 2^64), got {args.seed}")
    result = engine.run(loaded, seed=args.seed)
    check_trace(result, loaded)
    _output(result.render(), args.trace)
    return EXIT_OK


def check_trace(result: trace.Trace, loaded: scenario.Scenario) -> None:
    times = [record.time for record in result.records]
    if times != sorted(times):
        raise InvariantViolation("trace times go backwards")
    assert result.snapshot is not None
    for row in result.snapshot.rows:
        if row.hops != float("inf") and row.hops >= loaded.protocol.max_hops:
            raise InvariantViolation(f"node {row.node} holds hops {row.hops}")


def _check_reports(reports: list[cycles.LoopReport]) -> None:
    keys = [cycles.canonicalize(loop) for report in reports for loop in report.loops]
    if len(keys) != len(set(keys)):
        raise InvariantViolation("a loop was reported twice")


def loops_enum_command(args: argparse.Namespace) -> int:
    graph = topology.load_topology(args.graph)
    if args.all:
        reports = loops.enumerate_all_loops(graph)
    else:
        reports = [loops.enumerate_loops_from_source(graph, args.source)]
    _check_reports(reports)
    _output(loops.render_loop_reports(reports, with_sources=args.all), None)
    return EXIT_OK


def loops_oracle_command(args: argparse.Namespace) -> int:
    graph = topology.load_topology(args.graph)
    if args.all:
        reports = oracle.oracle_all_reports(graph)
    else:
        reports = [oracle.oracle_report(graph, args.source)]
    _output(loops.render_loop_reports(reports, with_sources=args.all), None)
    return EXIT_OK


def trace_analyze_command(args: argparse.Namespace) -> int:
    loaded = scenario.load_scenario(args.scenario)
    parsed = trace.parse_trace(args.trace.read_text(), source=str(args.trace))
    custom_template = args.template.read_text() if args.template else None
    report = analysis.summarize(parsed, loaded)
    if report.truncated:
        log.warning(f"{args.trace}: no snapshot section, report is partial")
    _output(analysis.render_report(report, custom_template=custom_template), None)
    return EXIT_OK


def topo_gen_command(args: argparse.Namespace) -> int:
    if args.seed < 0:
        raise UsageError(f"--seed must be >= 0, got {args.seed}")
    generated = topology.generate_topology(
        n=args.n,
        width=args.width,
        height=args.height,
        radio_range=args.radio_range,
        seed=args.seed,
    )
    comment = (
        f"generated n={args.n} width={args.width} height={args.height} "
        f"range={args.radio_range} seed={args.seed}"
    )
    _output(topology.render_topology(generated, comment=comment), args.out)
    return EXIT_OK
