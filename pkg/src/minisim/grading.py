"""Rubric-driven grading of one AS over a converged network.

A rubric is plain text, one check per line:

    check <id> <kind> weight=<n> [key=value ...]

Check kinds and their parameters:

- Addressing: every interface address the plan prescribes is configured.
- L2Isolation: hosts in different VLANs cannot reach each other at layer 2.
- StpPattern: edges=SW1-SW2,SW2-SW3 expected spanning tree edge set.
- IntraReach: every pair of the AS's hosts can ping.
- Ecmp: router=<name> dst=lan:<router>|<prefix>|<addr> route has >= 2 paths.
- SessionsUp: every BGP session the AS takes part in is established. Sessions
  that are down only because the far side is unconfigured are skipped.
- PolicyLocalPref: customer=<n> peer=<n> provider=<n> (default 300/200/100)
  imported external routes carry the local-pref their relationship demands.
- PolicyExport: nothing learned from a peer or provider is passed on to
  another peer or provider (exchange counts as peer on both sides).
- HijackReport: attacker=<asn> prefix=<p> matches the recorded ground truth.

Checks are independent and the score is the weight sum of the passing ones.
Grading is per AS: where a failure is attributable to a neighbor AS that
simply has not configured its side yet, the check skips rather than fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations

from .addrs import contains, format_ip, format_prefix, parse_ip, parse_prefix
from .bgp import candidates_for
from .confcli import Prefix
from .dataplane import fib_lookup, ping
from .l2 import compute_spanning_tree, host_attachment, l2_deliver
from .monitor import AsPathView, as_path_between
from .network import Network
from .refconfig import external_attachments

CHECK_KINDS = (
    "Addressing", "L2Isolation", "StpPattern", "IntraReach", "Ecmp",
    "SessionsUp", "PolicyLocalPref", "PolicyExport", "HijackReport",
)

DEFAULT_LOCAL_PREF = {"customer": 300, "peer": 200, "provider": 100}


@dataclass(frozen=True)
class RubricCheck:
    check_id: str
    kind: str
    weight: int = 1
    params: tuple[tuple[str, str], ...] = ()

    def param(self, key: str, default: str | None = None) -> str | None:
        for name, value in self.params:
            if name == key:
                return value
        return default


@dataclass
class Rubric:
    checks: list[RubricCheck] = field(default_factory=list)

    @property
    def max_score(self) -> int:
        return sum(check.weight for check in self.checks)


def parse_rubric(text: str) -> Rubric:
    checks: list[RubricCheck] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] != "check" or len(tokens) < 3:
            raise ValueError(f"line {lineno}: expected 'check <id> <kind> ...'")
        check_id, kind = tokens[1], tokens[2]
        if kind not in CHECK_KINDS:
            raise ValueError(f"line {lineno}: unknown check kind {kind!r}")
        if check_id in seen:
            raise ValueError(f"line {lineno}: duplicate check id {check_id!r}")
        seen.add(check_id)
        weight = 1
        params: list[tuple[str, str]] = []
        for token in tokens[3:]:
            key, sep, value = token.partition("=")
            if not sep or not key:
                raise ValueError(f"line {lineno}: expected key=value, got {token!r}")
            if key == "weight":
                weight = int(value)
                if weight < 0:
                    raise ValueError(f"line {lineno}: negative weight")
            else:
                params.append((key, value))
        checks.append(RubricCheck(check_id=check_id, kind=kind,
                                  weight=weight, params=tuple(params)))
    return Rubric(checks=checks)


@dataclass
class CheckResult:
    check_id: str
    kind: str
    weight: int
    passed: bool
    evidence: list[str] = field(default_factory=list)


@dataclass
class GradeReport:
    asn: int
    results: list[CheckResult]

    @property
    def score(self) -> int:
        return sum(r.weight for r in self.results if r.passed)

    @property
    def max_score(self) -> int:
        return sum(r.weight for r in self.results)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_json(self) -> dict:
        return {
            "checks": [{"id": r.check_id, "kind": r.kind, "weight": r.weight,
                        "pass": r.passed, "evidence": list(r.evidence)}
                       for r in self.results],
            "score": self.score,
        }

    def to_text(self) -> str:
        lines = [f"Grade report for AS {self.asn}"]
        for r in self.results:
            verdict = "PASS" if r.passed else "FAIL"
            lines.append(f"{verdict}  {r.check_id} ({r.kind}, weight {r.weight})")
            for item in r.evidence:
                lines.append(f"      - {item}")
        lines.append(f"score: {self.score}/{self.max_score}")
        return "\n".join(lines)


def run_rubric(network: Network, asn: int, rubric: Rubric) -> GradeReport:
    if network.spec.as_by_number(asn) is None:
        raise KeyError(f"unknown AS {asn}")
    results = []
    for check in rubric.checks:
        handler = _HANDLERS.get(check.kind)
        if handler is None:
            raise ValueError(f"unknown check kind {check.kind!r}")
        passed, evidence = handler(network, asn, check)
        results.append(CheckResult(check_id=check.check_id, kind=check.kind,
                                   weight=check.weight, passed=passed,
                                   evidence=evidence))
    return GradeReport(asn=asn, results=results)


# --- Addressing ---------------------------------------------------------------


def expected_addresses(network: Network, asn: int
                       ) -> dict[tuple[str, str], tuple[int, int]]:
    """(device, interface) -> (address, prefix length) the plan prescribes."""
    spec, plan = network.spec, network.plan
    asys = spec.as_by_number(asn)
    expected: dict[tuple[str, str], tuple[int, int]] = {}
    for router in asys.l3_template.routers:
        expected[(router, "lo")] = (plan.loopback_addr(asn, router), 32)
        state = network.devices[(asn, router)]
        for ifname in state.interfaces:
            if ifname.startswith("port_"):
                peer = ifname[len("port_"):]
                expected[(router, ifname)] = (
                    plan.intra_link_addr(asn, router, peer), 30)
        if (asn, router) in plan.host_lans:
            expected[(router, "host")] = (plan.router_lan_addr(asn, router), 24)
            expected[(f"host_{router}", "eth0")] = (plan.host_addr(asn, router), 24)
    for router, ifname, local_addr, _, _, _, plen in external_attachments(network, asn):
        expected[(router, ifname)] = (local_addr, plen)
    l2 = asys.l2_template
    if not l2.empty():
        gateway = l2.gateway[1]
        for vlan in sorted(l2.vlans):
            plen = plan.vlan_subnets[asn][vlan][1]
            expected[(gateway, f"l2.{vlan}")] = (
                plan.vlan_gateway_addrs[(asn, vlan)], plen)
        for _switch, hostname, vlan in l2.host_ports:
            _, addr = plan.vlan_host_addrs[(asn, hostname)]
            expected[(hostname, "eth0")] = (addr, plan.vlan_subnets[asn][vlan][1])
    return expected


def _check_addressing(network: Network, asn: int, check: RubricCheck):
    bad = []
    for (device, ifname), (addr, plen) in sorted(expected_addresses(network, asn).items()):
        state = network.devices.get((asn, device))
        interface = state.interfaces.get(ifname) if state else None
        want = f"{format_ip(addr)}/{plen}"
        if interface is None or interface.address is None:
            bad.append(f"{asn}.{device} {ifname}: expected {want}, not configured")
        elif interface.address != (addr, plen):
            got = f"{format_ip(interface.address[0])}/{interface.address[1]}"
            bad.append(f"{asn}.{device} {ifname}: expected {want}, found {got}")
    return not bad, bad


# --- L2 ------------------------------------------------------------------------


def _as_hosts(network: Network, asn: int) -> list[str]:
    return sorted(name for (dev_asn, name), state in network.devices.items()
                  if dev_asn == asn and state.kind == "host")


def _check_l2_isolation(network: Network, asn: int, check: RubricCheck):
    l2 = network.spec.as_by_number(asn).l2_template
    if l2.empty():
        return True, []
    # membership is what the topology intends, reachability what the
    # configuration delivers; a trunked access port must not bridge them
    intended = {hostname: vlan for _switch, hostname, vlan in l2.host_ports}
    attachments = {hostname: host_attachment(network, asn, hostname)
                   for hostname in intended}
    leaks = []
    for (h1, v1), (h2, v2) in permutations(sorted(intended.items()), 2):
        if v1 == v2 or attachments[h1] is None or attachments[h2] is None:
            continue
        delivery = l2_deliver(network, asn, v1, attachments[h1], attachments[h2])
        if delivery.ok:
            leaks.append(f"{asn}.{h1} (vlan {v1}) reaches "
                         f"{asn}.{h2} (vlan {v2}) without routing")
    return not leaks, leaks


def _check_stp_pattern(network: Network, asn: int, check: RubricCheck):
    expected: set[tuple[str, str]] = set()
    for pair in filter(None, (check.param("edges") or "").split(",")):
        a, sep, b = pair.partition("-")
        if not sep:
            raise ValueError(f"StpPattern edge {pair!r} is not 'A-B'")
        expected.add(tuple(sorted((a.strip(), b.strip()))))
    tree = compute_spanning_tree(network, asn)
    if tree is None:
        return not expected, ["no switched segment"] if expected else []
    if tree.active_edges == expected:
        return True, []
    evidence = [f"missing edge {a}-{b}" for a, b in sorted(expected - tree.active_edges)]
    evidence += [f"unexpected edge {a}-{b}" for a, b in sorted(tree.active_edges - expected)]
    return False, evidence


# --- reachability ----------------------------------------------------------------


def _check_intra_reach(network: Network, asn: int, check: RubricCheck):
    failures = []
    for src, dst in combinations(_as_hosts(network, asn), 2):
        result = ping(network, (asn, src), (asn, dst))
        if result.success:
            continue
        leg = result.forward if not result.forward.delivered else result.reverse
        failures.append(f"{asn}.{src} <-> {asn}.{dst}: {leg.outcome}")
    return not failures, failures


def _check_ecmp(network: Network, asn: int, check: RubricCheck):
    router = check.param("router")
    target = check.param("dst")
    if router is None or target is None:
        raise ValueError("Ecmp needs router=<name> dst=<target>")
    if target.startswith("lan:"):
        lan = network.plan.host_lans.get((asn, target[len("lan:"):]))
        if lan is None:
            raise ValueError(f"no host LAN behind {target[len('lan:'):]!r}")
        addr = lan[0] + 1
    elif "/" in target:
        addr = parse_prefix(target)[0] + 1
    else:
        addr = parse_ip(target)
    fib = network.fibs.get((asn, router))
    if fib is None:
        return False, [f"{asn}.{router}: no forwarding table"]
    entry = fib_lookup(fib, addr)
    if entry is None:
        return False, [f"{asn}.{router}: no route toward {target}"]
    if len(entry.nexthops) >= 2:
        return True, []
    return False, [f"{asn}.{router}: {format_prefix(entry.prefix)} has "
                   f"{len(entry.nexthops)} next hop(s), expected at least 2"]


# --- BGP sessions and policy ------------------------------------------------------


def _mismatch_blame(network: Network, asn: int, session) -> str | None:
    """Our own contribution to an AsnMismatch, or None when the fault is
    provably on the far side. Both the local ASN declaration and the
    neighbor statement are checked against what the topology says."""
    ours = session.a if session.a[0] == asn else session.b
    theirs = session.b if session.a[0] == asn else session.a
    state = network.devices[ours]
    if state.bgp.local_asn != asn:
        return (f"{asn}.{ours[1]}: BGP runs as AS {state.bgp.local_asn}, "
                f"not {asn}")
    their_addr = session.b_addr if ours == session.a else session.a_addr
    statement = state.bgp.neighbors.get(their_addr) if their_addr else None
    if statement is not None and theirs is not None \
            and statement.remote_asn != theirs[0]:
        return (f"{asn}.{ours[1]}: remote-as {statement.remote_asn} toward "
                f"{theirs[0]}.{theirs[1]}")
    return None


def _check_sessions_up(network: Network, asn: int, check: RubricCheck):
    own_block = network.plan.as_prefix[asn]
    failures = []
    skipped = 0
    for session in network.sessions:
        a_ours = session.a[0] == asn
        b_ours = session.b is not None and session.b[0] == asn
        if not a_ours and not b_ours:
            continue
        if session.state == "established":
            continue
        reason = session.idle_reason
        if reason == "OneSided" and a_ours and b_ours:
            failures.append(f"{asn}.{session.b[1]}: no BGP back toward "
                            f"{asn}.{session.a[1]}")
        elif reason == "OneSided" and a_ours:
            if session.b is None and contains(own_block, session.b_addr):
                failures.append(f"{asn}.{session.a[1]}: neighbor "
                                f"{format_ip(session.b_addr)} is in our block "
                                "but nothing owns it")
            else:
                skipped += 1  # far side not configured, not our problem
        elif reason == "OneSided":
            failures.append(f"{asn}.{session.b[1]}: no statement back to "
                            f"{session.a[0]}.{session.a[1]}")
        elif reason == "AsnMismatch":
            blame = _mismatch_blame(network, asn, session)
            if blame is not None:
                failures.append(blame)
            else:
                skipped += 1  # far side declared or dialed the wrong ASN
        else:
            peer = session.b if a_ours else session.a
            where = f"{asn}.{session.a[1]}" if a_ours else f"{asn}.{session.b[1]}"
            label = f"{peer[0]}.{peer[1]}" if peer else format_ip(session.b_addr)
            failures.append(f"{where}: session with {label} is {reason}")
    # both halves of a broken pair produce the same blame line
    failures = list(dict.fromkeys(failures))
    evidence = list(failures)
    if skipped and not failures:
        evidence.append(f"{skipped} session(s) skipped, far side unconfigured")
    return not failures, evidence


def _relationship(network: Network, local: tuple[int, str],
                  remote: tuple[int, str]) -> str:
    """What role the remote endpoint plays for the local one."""
    state = network.devices.get(remote)
    if state is not None and state.kind == "route_server":
        return "peer"
    wire = network.find_inter_wire(local, remote)
    if wire is None or wire.spec_index < 0:
        return "peer"
    link = network.spec.inter_as_links[wire.spec_index]
    provider = link.provider_asn()
    if provider is None:
        return "peer"
    return "customer" if provider == local[0] else "provider"


def _ebgp_endpoints(network: Network, asn: int):
    """Yield (our endpoint, our addr, remote endpoint, remote addr) per
    established external session of the AS."""
    for session in network.sessions:
        if session.kind != "ebgp" or session.state != "established":
            continue
        if session.b is None:
            continue
        for own, own_addr, remote, remote_addr in (
                (session.a, session.a_addr, session.b, session.b_addr),
                (session.b, session.b_addr, session.a, session.a_addr)):
            if own[0] == asn and remote[0] != asn:
                yield own, own_addr, remote, remote_addr


def _check_policy_local_pref(network: Network, asn: int, check: RubricCheck):
    expected = {rel: int(check.param(rel, str(default)))
                for rel, default in DEFAULT_LOCAL_PREF.items()}
    relationships = {}
    for own, _own_addr, remote, remote_addr in _ebgp_endpoints(network, asn):
        relationships[(own[1], remote_addr)] = _relationship(network, own, remote)
    bad = []
    for router in network.spec.as_by_number(asn).l3_template.routers:
        rib = network.bgp_ribs.get((asn, router))
        if rib is None:
            continue
        for prefix in sorted({pfx for _, pfx in rib.adj_rib_in}):
            for route in candidates_for(network, asn, router, prefix):
                if route.source != "ebgp":
                    continue
                relationship = relationships.get((router, route.peer_addr))
                if relationship is None:
                    continue
                want = expected[relationship]
                if route.local_pref != want:
                    bad.append(f"{asn}.{router}: {format_prefix(prefix)} from "
                               f"{format_ip(route.peer_addr)} ({relationship}) "
                               f"has local-pref {route.local_pref}, expected {want}")
    return not bad, bad


def _learning_relationship(network: Network, asn: int, neighbor: int) -> str | None:
    """How the AS relates to the neighbor it learned a route from. Any
    customer link legitimizes re-export, so customer wins over parallel
    peerings with the same neighbor."""
    found = None
    for link in network.spec.inter_as_links:
        if {link.a[0], link.b[0]} != {asn, neighbor}:
            continue
        provider = link.provider_asn()
        if provider == asn:
            return "customer"
        found = "provider" if provider == neighbor else "peer"
    if found is None:
        for ixp in network.spec.ixps:
            members = {member_asn for member_asn, _ in ixp.members}
            if asn in members and neighbor in members:
                return "peer"
    return found


def _check_policy_export(network: Network, asn: int, check: RubricCheck):
    bad = []
    for own, own_addr, remote, _remote_addr in _ebgp_endpoints(network, asn):
        relationship = _relationship(network, own, remote)
        if relationship == "customer":
            continue  # customers may hear the full table
        remote_rib = network.bgp_ribs.get(remote)
        if remote_rib is None:
            continue
        for (addr, prefix), route in sorted(remote_rib.adj_rib_in.items()):
            if addr != own_addr:
                continue
            learned = next((hop for hop in route.as_path if hop != asn), None)
            if learned is None:
                continue  # our own prefix
            source = _learning_relationship(network, asn, learned)
            if source != "customer":
                bad.append(f"{asn}.{own[1]} exports {format_prefix(prefix)} "
                           f"(learned from AS {learned}, {source or 'unknown'}) "
                           f"to AS {remote[0]} ({relationship})")
    return not bad, bad


def _check_hijack_report(network: Network, asn: int, check: RubricCheck):
    attacker = check.param("attacker")
    prefix = check.param("prefix")
    if attacker is None or prefix is None:
        raise ValueError("HijackReport needs attacker=<asn> prefix=<p>")
    claimed: tuple[int, Prefix] = (int(attacker), parse_prefix(prefix))
    if not network.hijacks:
        return False, ["no hijack has been recorded"]
    truth = network.hijacks[-1]
    if (truth.attacker_asn, truth.victim_prefix) == claimed:
        return True, []
    return False, [f"ground truth: AS {truth.attacker_asn} announcing "
                   f"{format_prefix(truth.victim_prefix)}"]


_HANDLERS = {
    "Addressing": _check_addressing,
    "L2Isolation": _check_l2_isolation,
    "StpPattern": _check_stp_pattern,
    "IntraReach": _check_intra_reach,
    "Ecmp": _check_ecmp,
    "SessionsUp": _check_sessions_up,
    "PolicyLocalPref": _check_policy_local_pref,
    "PolicyExport": _check_policy_export,
    "HijackReport": _check_hijack_report,
}


# --- network-wide policy audit ----------------------------------------------------


def check_valley_free(network: Network) -> list[AsPathView]:
    """Forwarding paths between all ordered AS pairs that climb back up
    after having gone down or sideways."""
    asns = sorted(asys.asn for asys in network.spec.ases)
    violations = []
    for src in asns:
        for dst in asns:
            if src == dst:
                continue
            view = as_path_between(network, src, dst)
            if not view.valley_free:
                violations.append(view)
    return violations
