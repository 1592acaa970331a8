"""Operator instruments: connectivity matrix, fault hints, looking glass.

The matrix is directional on purpose: cell (i, j) reports one-way delivery
from AS i's probe host toward AS j's probe host, so asymmetric policy
mistakes show up as asymmetric cells instead of being collapsed by a
round-trip check. The probe host of an AS is the host LAN of its first
router; the diagonal cell probes from the first router's host to the last
router's host, which crosses the whole backbone of a multi-router AS.
Cells are computed from planned addresses, so an unconfigured AS shows red
without needing any of its own state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .addrs import format_ip, format_prefix
from .confcli import render_running_config
from .dataplane import ROUTE_CODE, trace
from .l2 import compute_spanning_tree
from .network import Network

GREEN = "g"
RED = "r"


@dataclass
class Cell:
    status: str            # "g" | "r"
    outcome: str           # trace outcome
    failed_at: tuple | None = None

    @property
    def green(self) -> bool:
        return self.status == GREEN


@dataclass
class ConnectivityMatrix:
    asns: list[int]
    cells: list[list[Cell]]  # cells[i][j]: asns[i] -> asns[j]
    round: int

    def cell(self, src_asn: int, dst_asn: int) -> Cell:
        return self.cells[self.asns.index(src_asn)][self.asns.index(dst_asn)]

    def to_json(self) -> dict:
        return {
            "asns": list(self.asns),
            "cells": [[cell.status for cell in row] for row in self.cells],
            "round": self.round,
        }


def probe_host(network: Network, asn: int) -> tuple[int, str] | None:
    """The measurement host: the one on the AS's first router."""
    asys = network.spec.as_by_number(asn)
    if asys is None or not asys.l3_template.routers:
        return None
    name = f"host_{asys.l3_template.routers[0]}"
    return (asn, name) if (asn, name) in network.devices else None


def probe_target(network: Network, asn: int, diagonal: bool = False) -> int | None:
    """Planned probe address; the diagonal aims at the last router's host."""
    asys = network.spec.as_by_number(asn)
    if asys is None or not asys.l3_template.routers:
        return None
    routers = asys.l3_template.routers
    router = routers[-1] if diagonal else routers[0]
    return network.plan.host_addr(asn, router)


def connectivity_matrix(network: Network) -> ConnectivityMatrix:
    asns = sorted(asys.asn for asys in network.spec.ases)
    rows: list[list[Cell]] = []
    for src in asns:
        row: list[Cell] = []
        source = probe_host(network, src)
        for dst in asns:
            target = probe_target(network, dst, diagonal=src == dst)
            if source is None or target is None:
                row.append(Cell(status=RED, outcome="NoProbe"))
                continue
            walked = trace(network, source, target)
            row.append(Cell(status=GREEN if walked.delivered else RED,
                            outcome=walked.outcome,
                            failed_at=walked.failed_at))
        rows.append(row)
    return ConnectivityMatrix(asns=asns, cells=rows, round=network.generation)


@dataclass
class Finding:
    asn: int
    code: str                   # IntraDomainFault | MissingEbgp | PolicyAsymmetry
    cells: list = field(default_factory=list)  # (src asn, dst asn) evidence
    note: str = ""


@dataclass
class Diagnosis:
    findings: list[Finding] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"findings": [
            {"asn": f.asn, "code": f.code,
             "cells": [list(c) for c in f.cells], "note": f.note}
            for f in self.findings]}


def diagnose(matrix: ConnectivityMatrix) -> Diagnosis:
    asns = matrix.asns
    findings: list[Finding] = []
    covered: set[tuple[int, int]] = set()

    for i, asn in enumerate(asns):
        if not matrix.cells[i][i].green:
            findings.append(Finding(
                asn=asn, code="IntraDomainFault", cells=[(asn, asn)],
                note="diagonal cell is red: no connectivity inside the AS"))
            covered.add((asn, asn))

    for j, asn in enumerate(asns):
        column = [(asns[i], asn) for i in range(len(asns)) if i != j]
        if column and all(not matrix.cells[asns.index(s)][j].green
                          for s, _ in column):
            findings.append(Finding(
                asn=asn, code="MissingEbgp", cells=column,
                note="every other AS fails to reach this one"))
            covered.update(column)

    for i, src in enumerate(asns):
        for j, dst in enumerate(asns):
            if i == j:
                continue
            forward = matrix.cells[i][j]
            back = matrix.cells[j][i]
            if forward.green and not back.green and (dst, src) not in covered:
                findings.append(Finding(
                    asn=dst, code="PolicyAsymmetry", cells=[(dst, src)],
                    note=f"AS {src} reaches AS {dst} but not the reverse"))
                covered.add((dst, src))
    return Diagnosis(findings=findings)


# --- looking glass -----------------------------------------------------------

VIEWS = ("route", "bgp", "spanning-tree", "running-config")


def looking_glass(network: Network, asn: int, device: str, view: str) -> str:
    state = network.devices.get((asn, device))
    if state is None:
        raise KeyError(f"no device {device!r} in AS {asn}")
    if view == "route":
        return _route_view(network, asn, device)
    if view == "bgp":
        return _bgp_view(network, asn, device)
    if view == "spanning-tree":
        return _stp_view(network, asn, device, state)
    if view == "running-config":
        return render_running_config(state)
    raise ValueError(f"unknown view {view!r}")


def _route_view(network: Network, asn: int, device: str) -> str:
    lines = [f"Routing table of {asn}.{device} (generation {network.generation})",
             "Codes: C connected, S static, O intra-domain, B inter-domain", ""]
    fib = network.fibs.get((asn, device), {})
    for prefix in sorted(fib):
        entry = fib[prefix]
        code = ROUTE_CODE[entry.proto]
        text = format_prefix(prefix)
        if entry.proto == "connected":
            ifname = entry.nexthops[0].ifname
            lines.append(f"C  {text} is directly connected, {ifname}")
        elif not entry.nexthops:
            lines.append(f"{code}  {text} [{entry.ad}/{entry.metric}]"
                         " unreachable (blackhole)")
        else:
            for hop in entry.nexthops:
                via = format_ip(hop.via) if hop.via is not None else "direct"
                lines.append(f"{code}  {text} [{entry.ad}/{entry.metric}]"
                             f" via {via}, {hop.ifname}")
    return "\n".join(lines) + "\n"


def _bgp_view(network: Network, asn: int, device: str) -> str:
    state = network.devices[(asn, device)]
    local = state.bgp.local_asn
    suffix = f", local AS {local}" if local is not None else ""
    lines = [f"BGP table of {asn}.{device}{suffix}"
             f" (generation {network.generation})",
             "Status: > best", ""]
    rib = network.bgp_ribs.get((asn, device))
    if rib is not None:
        for prefix in sorted(rib.loc_rib):
            route = rib.loc_rib[prefix]
            path = " ".join(str(hop) for hop in route.as_path)
            lines.append(f">  {format_prefix(prefix):<18}"
                         f" {format_ip(route.next_hop):<15}"
                         f" {route.local_pref:>6} {route.med:>6}"
                         f"  {path:<16} {route.origin}")
    return "\n".join(lines) + "\n"


def _stp_view(network: Network, asn: int, device: str, state) -> str:
    lines = [f"Spanning tree of {asn}.{device}"]
    if state.kind != "switch":
        return lines[0] + "\n"
    tree = compute_spanning_tree(network, asn)
    bid = tree.bridge_ids.get(device)
    if bid is None:
        return lines[0] + "\n"
    root_switch = _component_root(network, asn, tree, device)
    root = tree.bridge_ids[root_switch]
    own = f"{bid[0]}.{bid[1]}"
    lines.append(f"Bridge id {own}, root id {root[0]}.{root[1]}"
                 + (" (this bridge is the root)" if root_switch == device
                    else ""))
    root_port = tree.root_ports.get(device)
    for ifname in sorted(state.interfaces):
        wire = network.wire_at(asn, device, ifname)
        if wire is None or wire.kind != "l2":
            continue
        other = wire.other_end(asn, device)[1]
        pair = tuple(sorted((device, other)))
        if ifname == root_port:
            role, port_state = "root", "forwarding"
        elif pair in tree.active_edges:
            role, port_state = "designated", "forwarding"
        else:
            role, port_state = "alternate", "blocking"
        lines.append(f"  {ifname:<12} role={role:<11} state={port_state}")
    return "\n".join(lines) + "\n"


def _component_root(network: Network, asn: int, tree, device: str) -> str:
    current = device
    while True:
        port = tree.root_ports.get(current)
        if port is None:
            return current
        wire = network.wire_at(asn, current, port)
        current = wire.other_end(asn, current)[1]


# --- AS-level path extraction --------------------------------------------------


@dataclass
class AsPathView:
    src_asn: int
    dst_asn: int
    asns: list[int]
    labels: list[str]          # between consecutive ASes: customer/provider/peer/ixp
    valley_free: bool
    outcome: str
    failed_at: tuple | None = None

    def to_json(self) -> dict:
        return {"src": self.src_asn, "dst": self.dst_asn, "asns": self.asns,
                "labels": self.labels, "valley_free": self.valley_free,
                "outcome": self.outcome}


def as_path_between(network: Network, src_asn: int, dst_asn: int) -> AsPathView:
    source = probe_host(network, src_asn)
    target = probe_target(network, dst_asn)
    if source is None or target is None:
        return AsPathView(src_asn, dst_asn, [], [], True, "NoProbe")
    walked = trace(network, source, target)

    sequence: list[int] = []
    crossings: list[tuple[tuple[int, str], tuple[int, str]]] = []
    previous = None
    for hop in walked.hops:
        if previous is not None and hop[0] != previous[0]:
            crossings.append((previous, hop))
        if not sequence or sequence[-1] != hop[0]:
            sequence.append(hop[0])
        previous = hop

    if not walked.delivered and len(sequence) <= 1:
        return AsPathView(src_asn, dst_asn, [], [], True, walked.outcome,
                          walked.failed_at)

    labels = [_crossing_label(network, a, b) for a, b in crossings]
    return AsPathView(src_asn, dst_asn, sequence, labels,
                      _valley_free(labels), walked.outcome, walked.failed_at)


def _crossing_label(network: Network, a: tuple[int, str],
                    b: tuple[int, str]) -> str:
    """How the path left AS a toward AS b: down, up, sideways, or exchange."""
    wire = network.find_inter_wire(a, b)
    if wire is None or wire.spec_index < 0:
        return "ixp"
    link = network.spec.inter_as_links[wire.spec_index]
    provider = link.provider_asn()
    if provider is None:
        return "peer"
    return "provider" if provider == b[0] else "customer"


def _valley_free(labels: list[str]) -> bool:
    """Climbing may continue; after any peering or descent, only descents."""
    descending = False
    for label in labels:
        if label == "provider":
            if descending:
                return False
        elif label in ("peer", "ixp"):
            if descending:
                return False
            descending = True
        else:
            descending = True
    return True
