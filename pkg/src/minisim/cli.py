"""Command line entry point.

    mininet-sim build  [source]
    mininet-sim run    <scenario-dir> [--out <dir>]
    mininet-sim shell  [source] --as <n>
    mininet-sim serve  [source] --port <p> [--refresh-ms <n>] [--host <h>]
    mininet-sim grade  [source] --as <n> --rubric <file>

`source` is a topology file or a scenario directory; a directory's startup
configs are applied but its events are not replayed. Without a source the
packaged 20-AS reference network is used.
"""

from __future__ import annotations

import argparse
import importlib.resources
import sys
from pathlib import Path

from .grading import parse_rubric, run_rubric
from .monitor import connectivity_matrix
from .network import Network, instantiate
from .runtime import converge_network
from .scenario import ScenarioError, load_scenario, run_scenario
from .topology import TopologyError, parse_topology_spec


def _default_topology_text() -> str:
    return (importlib.resources.files("minisim") / "data"
            / "default20.topo").read_text()


def _load_network(source: str | None) -> Network:
    """Topology file, scenario directory, or the packaged default."""
    if source is None:
        network = instantiate(parse_topology_spec(_default_topology_text()))
    elif Path(source).is_dir():
        from .confcli import load_config_script

        scenario = load_scenario(source)
        network = instantiate(scenario.topology)
        for (asn, device), script in sorted(scenario.configs.items()):
            load_config_script(network, asn, device, script)
    else:
        network = instantiate(parse_topology_spec(Path(source).read_text()))
    return network


def _cmd_build(args) -> int:
    network = _load_network(args.source)
    plurals = {"router": "routers", "host": "hosts", "switch": "switches",
               "route_server": "route servers"}
    counts = {}
    for state in network.devices.values():
        counts[state.kind] = counts.get(state.kind, 0) + 1
    parts = ", ".join(f"{counts[k]} {plurals.get(k, k)}"
                      for k in sorted(counts))
    print(f"{len(network.spec.ases)} ASes; {parts}; {len(network.wires)} wires")
    report = converge_network(network)
    if not report.converged:
        print(f"did not converge after {report.rounds} rounds",
              file=sys.stderr)
        return 1
    print(f"converged in {report.rounds} rounds")
    matrix = connectivity_matrix(network)
    total = len(matrix.asns) ** 2
    green = sum(cell.green for row in matrix.cells for cell in row)
    print(f"matrix: {green}/{total} green")
    return 0


def _cmd_run(args) -> int:
    result = run_scenario(args.scenario, out_dir=args.out)
    for line in result.log:
        print(line)
    if not result.converged:
        print("run failed: network did not converge", file=sys.stderr)
        return 1
    failed = [label for label, report in result.grades
              if not report.all_passed]
    if failed:
        print(f"run failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    print(f"ok ({len(result.outputs)} files written)")
    return 0


def _cmd_shell(args) -> int:
    from .shell import repl

    network = _load_network(args.source)
    report = converge_network(network)
    if not report.converged:
        print(f"warning: did not converge after {report.rounds} rounds",
              file=sys.stderr)
    repl(network, args.asn)
    return 0


def _cmd_serve(args) -> int:
    from .httpapi import serve

    network = _load_network(args.source)
    serve(network, port=args.port, host=args.host,
          refresh_ms=args.refresh_ms)
    return 0


def _cmd_grade(args) -> int:
    network = _load_network(args.source)
    converge_network(network)
    rubric = parse_rubric(Path(args.rubric).read_text())
    report = run_rubric(network, args.asn, rubric)
    print(report.to_text())
    return 0 if report.all_passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mininet-sim",
        description="Deterministic control-plane emulator of a cooperative "
                    "mini-Internet")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="parse, converge, and summarize")
    build.add_argument("source", nargs="?", default=None)
    build.set_defaults(func=_cmd_build)

    run = sub.add_parser("run", help="replay a scenario directory")
    run.add_argument("scenario")
    run.add_argument("--out", default=None, help="artifact directory")
    run.set_defaults(func=_cmd_run)

    shell = sub.add_parser("shell", help="interactive per-AS session")
    shell.add_argument("source", nargs="?", default=None)
    shell.add_argument("--as", dest="asn", type=int, required=True)
    shell.set_defaults(func=_cmd_shell)

    serve = sub.add_parser("serve", help="HTTP API for consoles and the UI")
    serve.add_argument("source", nargs="?", default=None)
    serve.add_argument("--port", type=int, required=True)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--refresh-ms", type=int, default=0,
                       help="periodic matrix refresh (0 = on change only)")
    serve.set_defaults(func=_cmd_serve)

    grade = sub.add_parser("grade", help="score one AS against a rubric")
    grade.add_argument("source", nargs="?", default=None)
    grade.add_argument("--as", dest="asn", type=int, required=True)
    grade.add_argument("--rubric", required=True)
    grade.set_defaults(func=_cmd_grade)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TopologyError, ScenarioError, ValueError, KeyError,
            OSError) as err:
        message = err.args[0] if err.args else str(err)
        print(f"error: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
