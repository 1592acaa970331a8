"""Scripted runs: build a network, replay events, write artifacts.

A scenario is a directory:

    topology.txt                  network description
    configs/<asn>/<device>.cfg    startup configuration, applied before events
    events.txt                    one event per line, replayed in order
    rubrics/*.rubric              rubrics referenced by grade events

Event lines (blank lines and # comments are skipped):

    apply <asn> <device> <script-file>
    fail_link <asn>.<device> <asn>.<device>
    restore_link <asn>.<device> <asn>.<device>
    fail_router <asn> <device>
    hijack <attacker-asn> <prefix> [more_specific]
    withdraw <asn> <prefix>
    snapshot <tag>
    grade <asn>|all <rubric-file>

File arguments are paths relative to the scenario directory and are read at
load time, so a missing file fails before anything runs. Every event that
changes state is followed by a full convergence pass, so snapshots and
grades always see a settled network. A run with no snapshot event gets an
implicit final one. The run fails if the network ever stops converging or
if any grade event scores below its maximum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .addrs import Prefix, format_prefix, parse_prefix
from .bgp import ConvergeReport, inject_hijack, withdraw_prefix
from .confcli import load_config_script
from .grading import GradeReport, Rubric, parse_rubric, run_rubric
from .monitor import ConnectivityMatrix, connectivity_matrix, looking_glass
from .network import Network, instantiate
from .runtime import converge_network
from .topology import TopologySpec, parse_topology_spec


class ScenarioError(ValueError):
    """Raised for a malformed scenario directory or event script."""


@dataclass(frozen=True)
class ApplyConfig:
    asn: int
    device: str
    script: str
    source: str  # file the script came from, for logging


@dataclass(frozen=True)
class FailLink:
    a: tuple[int, str]
    b: tuple[int, str]


@dataclass(frozen=True)
class RestoreLink:
    a: tuple[int, str]
    b: tuple[int, str]


@dataclass(frozen=True)
class FailRouter:
    asn: int
    device: str


@dataclass(frozen=True)
class Hijack:
    attacker: int
    prefix: Prefix
    more_specific: bool = False


@dataclass(frozen=True)
class Withdraw:
    asn: int
    prefix: Prefix


@dataclass(frozen=True)
class Snapshot:
    tag: str


@dataclass(frozen=True)
class Grade:
    asn: int | None  # None grades every AS
    rubric_name: str
    rubric: Rubric


Event = (ApplyConfig | FailLink | RestoreLink | FailRouter | Hijack
         | Withdraw | Snapshot | Grade)

MUTATING = (ApplyConfig, FailLink, RestoreLink, FailRouter, Hijack, Withdraw)


@dataclass
class Scenario:
    root: Path
    topology: TopologySpec
    configs: dict[tuple[int, str], str]
    events: list[Event]


@dataclass
class ScenarioResult:
    converged: bool
    grades: list[tuple[str, GradeReport]] = field(default_factory=list)
    outputs: list[Path] = field(default_factory=list)
    log: list[str] = field(default_factory=list)
    last_report: ConvergeReport | None = None

    @property
    def ok(self) -> bool:
        return self.converged and all(r.all_passed for _, r in self.grades)


def _parse_endpoint(token: str, line_no: int) -> tuple[int, str]:
    asn_str, sep, device = token.partition(".")
    if not sep or not asn_str.isdigit() or not device:
        raise ScenarioError(
            f"events.txt line {line_no}: expected <asn>.<device>, got {token!r}")
    return int(asn_str), device


def _read_relative(root: Path, name: str, line_no: int) -> str:
    path = root / name
    try:
        path.resolve().relative_to(root.resolve())
    except ValueError:
        raise ScenarioError(
            f"events.txt line {line_no}: {name!r} escapes the scenario directory")
    if not path.is_file():
        raise ScenarioError(f"events.txt line {line_no}: no such file {name!r}")
    return path.read_text()


def _parse_events(root: Path, text: str) -> list[Event]:
    events: list[Event] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        verb, args = tokens[0], tokens[1:]

        def fail(message: str) -> ScenarioError:
            return ScenarioError(f"events.txt line {line_no}: {message}")

        if verb == "apply":
            if len(args) != 3 or not args[0].isdigit():
                raise fail("apply takes <asn> <device> <script-file>")
            script = _read_relative(root, args[2], line_no)
            events.append(ApplyConfig(int(args[0]), args[1], script, args[2]))

        elif verb in ("fail_link", "restore_link"):
            if len(args) != 2:
                raise fail(f"{verb} takes two <asn>.<device> endpoints")
            a = _parse_endpoint(args[0], line_no)
            b = _parse_endpoint(args[1], line_no)
            cls = FailLink if verb == "fail_link" else RestoreLink
            events.append(cls(a, b))

        elif verb == "fail_router":
            if len(args) != 2 or not args[0].isdigit():
                raise fail("fail_router takes <asn> <device>")
            events.append(FailRouter(int(args[0]), args[1]))

        elif verb == "hijack":
            if len(args) not in (2, 3) or not args[0].isdigit():
                raise fail("hijack takes <attacker-asn> <prefix> [more_specific]")
            if len(args) == 3 and args[2] != "more_specific":
                raise fail(f"unknown hijack flag {args[2]!r}")
            try:
                prefix = parse_prefix(args[1])
            except ValueError as exc:
                raise fail(str(exc))
            events.append(Hijack(int(args[0]), prefix, len(args) == 3))

        elif verb == "withdraw":
            if len(args) != 2 or not args[0].isdigit():
                raise fail("withdraw takes <asn> <prefix>")
            try:
                prefix = parse_prefix(args[1])
            except ValueError as exc:
                raise fail(str(exc))
            events.append(Withdraw(int(args[0]), prefix))

        elif verb == "snapshot":
            if len(args) != 1:
                raise fail("snapshot takes one tag")
            tag = args[0]
            if not all(c.isalnum() or c in "-_" for c in tag):
                raise fail(f"snapshot tag {tag!r} must be alphanumeric, - or _")
            events.append(Snapshot(tag))

        elif verb == "grade":
            if len(args) != 2:
                raise fail("grade takes <asn>|all <rubric-file>")
            if args[0] != "all" and not args[0].isdigit():
                raise fail(f"grade target must be an ASN or 'all', got {args[0]!r}")
            text_rubric = _read_relative(root, args[1], line_no)
            try:
                rubric = parse_rubric(text_rubric)
            except ValueError as exc:
                raise fail(f"bad rubric {args[1]!r}: {exc}")
            asn = None if args[0] == "all" else int(args[0])
            events.append(Grade(asn, Path(args[1]).stem, rubric))

        else:
            raise fail(f"unknown event {verb!r}")
    return events


def _load_configs(root: Path) -> dict[tuple[int, str], str]:
    configs: dict[tuple[int, str], str] = {}
    configs_dir = root / "configs"
    if not configs_dir.is_dir():
        return configs
    for as_dir in sorted(configs_dir.iterdir()):
        if not as_dir.is_dir():
            continue
        if not as_dir.name.isdigit():
            raise ScenarioError(
                f"configs/{as_dir.name}: directory name must be an ASN")
        asn = int(as_dir.name)
        for cfg in sorted(as_dir.glob("*.cfg")):
            configs[(asn, cfg.stem)] = cfg.read_text()
    return configs


def load_scenario(path: str | Path) -> Scenario:
    root = Path(path)
    if not root.is_dir():
        raise ScenarioError(f"{root}: not a directory")
    topo_file = root / "topology.txt"
    if not topo_file.is_file():
        raise ScenarioError(f"{root}: missing topology.txt")
    try:
        topology = parse_topology_spec(topo_file.read_text())
    except ValueError as exc:
        raise ScenarioError(f"topology.txt: {exc}")
    configs = _load_configs(root)
    events_file = root / "events.txt"
    events = _parse_events(root, events_file.read_text()) \
        if events_file.is_file() else []
    known = {asys.asn for asys in topology.ases}
    known.update(ixp.ixp_id for ixp in topology.ixps)
    for asn, device in configs:
        if asn not in known:
            raise ScenarioError(f"configs/{asn}: no such AS in the topology")
    for event in events:
        if isinstance(event, Grade) and event.asn is not None \
                and event.asn not in known:
            raise ScenarioError(f"grade targets unknown AS {event.asn}")
    return Scenario(root=root, topology=topology, configs=configs,
                    events=events)


def looking_glass_dump(network: Network) -> str:
    """Every device's views concatenated in a fixed order.

    The same network state always renders to the same bytes, which makes
    the dump usable as a golden file.
    """
    views_by_kind = {
        "router": ("route", "bgp", "running-config"),
        "route_server": ("route", "bgp", "running-config"),
        "switch": ("spanning-tree", "running-config"),
        "host": ("running-config",),
    }
    sections = []
    for asn, name in sorted(network.devices):
        state = network.devices[(asn, name)]
        for view in views_by_kind.get(state.kind, ("running-config",)):
            body = looking_glass(network, asn, name, view)
            sections.append(f"===== {asn}.{name} {view} =====\n{body}")
    return "\n".join(sections)


def _write_snapshot(out_dir: Path, tag: str, network: Network,
                    matrix: ConnectivityMatrix) -> list[Path]:
    matrix_path = out_dir / f"{tag}.matrix.json"
    matrix_path.write_text(
        json.dumps(matrix.to_json(), indent=2, sort_keys=True) + "\n")
    lg_path = out_dir / f"{tag}.lg.txt"
    lg_path.write_text(looking_glass_dump(network))
    return [matrix_path, lg_path]


def _apply_script(network: Network, asn: int, device: str, script: str,
                  source: str, result: ScenarioResult) -> None:
    try:
        applied, diagnostics = load_config_script(network, asn, device, script)
    except KeyError as exc:
        raise ScenarioError(f"{source}: {exc.args[0]}")
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        detail = "; ".join(d.render() for d in errors[:3])
        raise ScenarioError(f"{source}: {detail}")
    for diag in diagnostics:
        result.log.append(f"{source}: {diag.render()}")


def _withdraw(network: Network, event: Withdraw) -> None:
    # Withdrawing a hijacked prefix takes the injected routes with it, so a
    # more-specific attack is mitigated by naming the victim prefix once.
    for record in reversed(network.hijacks):
        if record.attacker_asn == event.asn \
                and record.victim_prefix == event.prefix:
            for prefix in record.injected:
                withdraw_prefix(network, event.asn, prefix)
            return
    withdraw_prefix(network, event.asn, event.prefix)


def _describe(event: Event) -> str:
    if isinstance(event, ApplyConfig):
        return f"apply {event.asn}.{event.device} {event.source}"
    if isinstance(event, (FailLink, RestoreLink)):
        verb = "fail_link" if isinstance(event, FailLink) else "restore_link"
        return (f"{verb} {event.a[0]}.{event.a[1]} "
                f"{event.b[0]}.{event.b[1]}")
    if isinstance(event, FailRouter):
        return f"fail_router {event.asn}.{event.device}"
    if isinstance(event, Hijack):
        flag = " more_specific" if event.more_specific else ""
        return f"hijack {event.attacker} {format_prefix(event.prefix)}{flag}"
    if isinstance(event, Withdraw):
        return f"withdraw {event.asn} {format_prefix(event.prefix)}"
    if isinstance(event, Snapshot):
        return f"snapshot {event.tag}"
    if isinstance(event, Grade):
        target = "all" if event.asn is None else str(event.asn)
        return f"grade {target} {event.rubric_name}"
    return repr(event)


def _mutate(network: Network, event: Event, result: ScenarioResult) -> None:
    if isinstance(event, ApplyConfig):
        _apply_script(network, event.asn, event.device, event.script,
                      event.source, result)
    elif isinstance(event, (FailLink, RestoreLink)):
        wire = network.find_inter_wire(event.a, event.b)
        if wire is None:
            raise ScenarioError(
                f"no link between {event.a[0]}.{event.a[1]} "
                f"and {event.b[0]}.{event.b[1]}")
        wire.up = isinstance(event, RestoreLink)
    elif isinstance(event, FailRouter):
        if (event.asn, event.device) not in network.devices:
            raise ScenarioError(f"no device {event.asn}.{event.device}")
        network.failed_devices.add((event.asn, event.device))
    elif isinstance(event, Hijack):
        inject_hijack(network, event.attacker, event.prefix,
                      more_specific=event.more_specific)
    elif isinstance(event, Withdraw):
        _withdraw(network, event)


def run_scenario(path: str | Path, out_dir: str | Path | None = None
                 ) -> ScenarioResult:
    """Replay a scenario directory and write its artifacts.

    Returns a result whose ``ok`` is true only when every convergence pass
    settled and every grade event scored full marks.
    """
    scenario = load_scenario(path)
    out = Path(out_dir) if out_dir is not None else scenario.root / "out"
    out.mkdir(parents=True, exist_ok=True)

    result = ScenarioResult(converged=True)
    network = instantiate(scenario.topology)
    for (asn, device), script in sorted(scenario.configs.items()):
        _apply_script(network, asn, device, script,
                      f"configs/{asn}/{device}.cfg", result)

    def settle(what: str) -> bool:
        report = converge_network(network)
        result.last_report = report
        if not report.converged:
            result.converged = False
            result.log.append(f"{what}: did not converge "
                              f"after {report.rounds} rounds")
            return False
        result.log.append(f"{what}: converged in {report.rounds} rounds")
        return True

    if not settle("startup"):
        return result
    matrix = connectivity_matrix(network)
    snapshots = 0

    for index, event in enumerate(scenario.events, start=1):
        label = _describe(event)
        if isinstance(event, MUTATING):
            _mutate(network, event, result)
            if not settle(f"event {index} ({label})"):
                return result
            matrix = connectivity_matrix(network)
        elif isinstance(event, Snapshot):
            result.outputs.extend(_write_snapshot(out, event.tag, network,
                                                  matrix))
            result.log.append(f"event {index}: wrote snapshot {event.tag!r}")
            snapshots += 1
        elif isinstance(event, Grade):
            targets = ([event.asn] if event.asn is not None
                       else [asys.asn for asys in scenario.topology.ases])
            for asn in targets:
                report = run_rubric(network, asn, event.rubric)
                stem = f"grade-{index:02d}-{event.rubric_name}-as{asn}"
                json_path = out / f"{stem}.json"
                json_path.write_text(
                    json.dumps(report.to_json(), indent=2, sort_keys=True)
                    + "\n")
                text_path = out / f"{stem}.txt"
                text_path.write_text(report.to_text() + "\n")
                result.outputs.extend([json_path, text_path])
                result.grades.append((f"{event.rubric_name}:as{asn}", report))
                verdict = "pass" if report.all_passed else "FAIL"
                result.log.append(
                    f"event {index}: grade as{asn} {report.score}"
                    f"/{report.max_score} ({verdict})")

    if snapshots == 0:
        result.outputs.extend(_write_snapshot(out, "final", network, matrix))
        result.log.append("wrote implicit final snapshot")
    return result
