"""AS-level topology model.

Defines the topology description (ASes, inter-AS links, IXPs, per-AS router
and switch templates), a line-oriented text format for it, structural
validation, a generator for the classroom reference layout, and the fixed
address plan derived from it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .addrs import Prefix, format_prefix, parse_prefix

ROLES = ("tier1", "transit", "stub")

DEFAULT_INTRA_COST = 1
DEFAULT_INTRA_DELAY_US = 1000
DEFAULT_LINK_DELAY_US = 1000
DEFAULT_BRIDGE_PRIORITY = 32768

# Addressing constants. Router indices r are 1-based; host LANs sit at
# n.(100+r) and loopbacks at n.150.0.r, so r must stay below 50 to keep the
# two ranges apart. Intra-AS /30s use n.0.k.0 and the L2 /23 uses n.0.200.0,
# which caps k at 199.
MAX_ASN = 126
MAX_ROUTERS_PER_AS = 49
MAX_INTRA_LINKS_PER_AS = 199
MAX_VLANS_PER_AS = 4
MAX_PARALLEL_LINKS = 63
MAX_IXP_ID = 254


class TopologyError(ValueError):
    """Raised for malformed topology text or an invalid topology."""

    def __init__(self, message: str, violations: list["Violation"] | None = None):
        super().__init__(message)
        self.violations = violations or []


@dataclass
class Violation:
    code: str
    element: str
    message: str


@dataclass
class L3Template:
    routers: list[str] = field(default_factory=list)
    # (router a, router b, igp cost, delay in microseconds)
    intra_links: list[tuple[str, str, int, int]] = field(default_factory=list)
    hosts: bool = True


@dataclass
class L2Template:
    switches: list[tuple[str, int]] = field(default_factory=list)
    switch_links: list[tuple[str, str]] = field(default_factory=list)
    host_ports: list[tuple[str, str, int]] = field(default_factory=list)
    gateway: tuple[str, str] | None = None
    vlans: list[int] = field(default_factory=list)

    def empty(self) -> bool:
        return not self.switches


@dataclass
class AsSpec:
    asn: int
    role: str
    region: str
    l3_template: L3Template = field(default_factory=L3Template)
    l2_template: L2Template = field(default_factory=L2Template)
    auto_configured: bool = False


@dataclass
class InterAsLink:
    a: tuple[int, str]
    b: tuple[int, str]
    relationship: str  # a_provider_of_b | b_provider_of_a | peer
    delay_us: int = DEFAULT_LINK_DELAY_US
    bandwidth_bps: int = 0
    admin_state: str = "up"

    def normalized(self) -> "InterAsLink":
        if self.relationship == "b_provider_of_a":
            return InterAsLink(self.b, self.a, "a_provider_of_b",
                               self.delay_us, self.bandwidth_bps, self.admin_state)
        return self

    def provider_asn(self) -> int | None:
        if self.relationship == "a_provider_of_b":
            return self.a[0]
        if self.relationship == "b_provider_of_a":
            return self.b[0]
        return None


@dataclass
class IxpSpec:
    ixp_id: int
    members: list[tuple[int, str]] = field(default_factory=list)
    delay_us: int = DEFAULT_LINK_DELAY_US


@dataclass
class TopologySpec:
    regions: list[str] = field(default_factory=list)
    ases: list[AsSpec] = field(default_factory=list)
    inter_as_links: list[InterAsLink] = field(default_factory=list)
    ixps: list[IxpSpec] = field(default_factory=list)

    def as_by_number(self, asn: int) -> AsSpec | None:
        for spec in self.ases:
            if spec.asn == asn:
                return spec
        return None


# ---------------------------------------------------------------------------
# Parsing


def _parse_endpoint(token: str, line_no: int) -> tuple[int, str]:
    asn_text, sep, router = token.partition(".")
    if not sep or not asn_text.isdigit() or not router:
        raise TopologyError(f"line {line_no}: bad endpoint {token!r}, want <asn>.<router>")
    return int(asn_text), router


def _split_fields(tokens: list[str], allowed: dict[str, bool], line_no: int) -> dict[str, str]:
    """Parse key=value tokens; `allowed` maps key -> required."""
    fields: dict[str, str] = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        if not sep or key not in allowed:
            raise TopologyError(f"line {line_no}: unknown or malformed field {token!r}")
        if key in fields:
            raise TopologyError(f"line {line_no}: duplicate field {key!r}")
        fields[key] = value
    for key, required in allowed.items():
        if required and key not in fields:
            raise TopologyError(f"line {line_no}: missing field {key!r}")
    return fields


def _int_field(fields: dict[str, str], key: str, default: int, line_no: int) -> int:
    if key not in fields:
        return default
    value = fields[key]
    if not value.lstrip("-").isdigit():
        raise TopologyError(f"line {line_no}: {key} must be an integer, got {value!r}")
    return int(value)


def _parse_l3_link(token: str, line_no: int) -> tuple[str, str, int, int]:
    parts = token.split(":")
    ends = parts[0].split("-")
    if len(ends) != 2 or not ends[0] or not ends[1] or len(parts) > 3:
        raise TopologyError(f"line {line_no}: bad intra link {token!r}")
    cost, delay = DEFAULT_INTRA_COST, DEFAULT_INTRA_DELAY_US
    try:
        if len(parts) >= 2:
            cost = int(parts[1])
        if len(parts) == 3:
            delay = int(parts[2])
    except ValueError:
        raise TopologyError(f"line {line_no}: bad intra link {token!r}") from None
    return ends[0], ends[1], cost, delay


def parse_topology_spec(text: str) -> TopologySpec:
    """Parse and validate topology text, raising on the first syntax error."""
    spec = TopologySpec()
    seen_asns: set[int] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind, args = tokens[0], tokens[1:]

        if kind == "region":
            if len(args) != 1:
                raise TopologyError(f"line {line_no}: region takes one name")
            spec.regions.append(args[0])

        elif kind == "as":
            if not args or not args[0].isdigit():
                raise TopologyError(f"line {line_no}: as needs a numeric ASN")
            asn = int(args[0])
            rest = args[1:]
            auto = "auto" in rest
            rest = [t for t in rest if t != "auto"]
            fields = _split_fields(rest, {"role": True, "region": True}, line_no)
            role = fields["role"]
            if role not in ROLES:
                raise TopologyError(f"line {line_no}: bad role {role!r}")
            if fields["region"] not in spec.regions:
                raise TopologyError(f"line {line_no}: region {fields['region']!r} not declared")
            if asn in seen_asns:
                raise TopologyError(f"line {line_no}: duplicate ASN {asn}")
            seen_asns.add(asn)
            spec.ases.append(AsSpec(
                asn=asn, role=role, region=fields["region"],
                auto_configured=auto or role in ("tier1", "stub"),
            ))

        elif kind == "link":
            if len(args) < 3:
                raise TopologyError(f"line {line_no}: link needs two endpoints and rel=")
            a = _parse_endpoint(args[0], line_no)
            b = _parse_endpoint(args[1], line_no)
            fields = _split_fields(
                args[2:], {"rel": True, "delay_us": False, "bw_bps": False}, line_no)
            rel = fields["rel"]
            if rel not in ("prov", "peer"):
                raise TopologyError(f"line {line_no}: rel must be prov or peer, got {rel!r}")
            spec.inter_as_links.append(InterAsLink(
                a=a, b=b,
                relationship="a_provider_of_b" if rel == "prov" else "peer",
                delay_us=_int_field(fields, "delay_us", DEFAULT_LINK_DELAY_US, line_no),
                bandwidth_bps=_int_field(fields, "bw_bps", 0, line_no),
            ))

        elif kind == "ixp":
            if not args or not args[0].isdigit():
                raise TopologyError(f"line {line_no}: ixp needs a numeric id")
            fields = _split_fields(args[1:], {"members": True, "delay_us": False}, line_no)
            members = [_parse_endpoint(t, line_no)
                       for t in fields["members"].split(",") if t]
            spec.ixps.append(IxpSpec(
                ixp_id=int(args[0]), members=members,
                delay_us=_int_field(fields, "delay_us", DEFAULT_LINK_DELAY_US, line_no),
            ))

        elif kind == "l3template":
            if not args or not args[0].isdigit():
                raise TopologyError(f"line {line_no}: l3template needs a numeric ASN")
            asn = int(args[0])
            target = spec.as_by_number(asn)
            if target is None:
                raise TopologyError(f"line {line_no}: l3template for unknown AS {asn}")
            if target.l3_template.routers:
                raise TopologyError(f"line {line_no}: duplicate l3template for AS {asn}")
            fields = _split_fields(args[1:], {"routers": True, "links": False}, line_no)
            routers = [r for r in fields["routers"].split(",") if r]
            links = [_parse_l3_link(t, line_no)
                     for t in fields.get("links", "").split(",") if t]
            target.l3_template = L3Template(routers=routers, intra_links=links)

        elif kind == "l2template":
            if not args or not args[0].isdigit():
                raise TopologyError(f"line {line_no}: l2template needs a numeric ASN")
            asn = int(args[0])
            target = spec.as_by_number(asn)
            if target is None:
                raise TopologyError(f"line {line_no}: l2template for unknown AS {asn}")
            if not target.l2_template.empty():
                raise TopologyError(f"line {line_no}: duplicate l2template for AS {asn}")
            fields = _split_fields(
                args[1:],
                {"switches": True, "links": True, "hosts": True,
                 "gateway": True, "vlans": False},
                line_no)
            switches = []
            for token in fields["switches"].split(","):
                if not token:
                    continue
                name, sep, prio = token.partition(":")
                if sep and not prio.isdigit():
                    raise TopologyError(f"line {line_no}: bad switch {token!r}")
                switches.append((name, int(prio) if sep else DEFAULT_BRIDGE_PRIORITY))
            links = []
            for token in fields["links"].split(","):
                if not token:
                    continue
                ends = token.split("-")
                if len(ends) != 2 or not ends[0] or not ends[1]:
                    raise TopologyError(f"line {line_no}: bad switch link {token!r}")
                links.append((ends[0], ends[1]))
            host_ports = []
            for token in fields["hosts"].split(","):
                if not token:
                    continue
                parts = token.split(":")
                if len(parts) != 3 or not parts[2].isdigit():
                    raise TopologyError(f"line {line_no}: bad host port {token!r}")
                host_ports.append((parts[0], parts[1], int(parts[2])))
            gw_parts = fields["gateway"].split(":")
            if len(gw_parts) != 2 or not gw_parts[0] or not gw_parts[1]:
                raise TopologyError(f"line {line_no}: bad gateway {fields['gateway']!r}")
            if "vlans" in fields:
                try:
                    vlans = [int(v) for v in fields["vlans"].split(",") if v]
                except ValueError:
                    raise TopologyError(f"line {line_no}: bad vlans list") from None
            else:
                vlans = sorted({vlan for _, _, vlan in host_ports})
            target.l2_template = L2Template(
                switches=switches, switch_links=links, host_ports=host_ports,
                gateway=(gw_parts[0], gw_parts[1]), vlans=vlans)

        else:
            raise TopologyError(f"line {line_no}: unknown directive {kind!r}")

    violations = validate(spec)
    if violations:
        summary = "; ".join(f"{v.code}: {v.message}" for v in violations[:5])
        raise TopologyError(f"invalid topology: {summary}", violations)
    return spec


# ---------------------------------------------------------------------------
# Rendering


def render_topology_spec(spec: TopologySpec) -> str:
    lines: list[str] = []
    for region in spec.regions:
        lines.append(f"region {region}")
    for asys in spec.ases:
        auto = " auto" if asys.auto_configured and asys.role == "transit" else ""
        lines.append(f"as {asys.asn} role={asys.role} region={asys.region}{auto}")
        l3 = asys.l3_template
        routers = ",".join(l3.routers)
        link_text = ",".join(f"{a}-{b}:{cost}:{delay}"
                             for a, b, cost, delay in l3.intra_links)
        links = f" links={link_text}" if l3.intra_links else ""
        lines.append(f"l3template {asys.asn} routers={routers}{links}")
        l2 = asys.l2_template
        if not l2.empty():
            switches = ",".join(f"{name}:{prio}" for name, prio in l2.switches)
            sw_links = ",".join(f"{a}-{b}" for a, b in l2.switch_links)
            hosts = ",".join(f"{sw}:{host}:{vlan}" for sw, host, vlan in l2.host_ports)
            gw = f"{l2.gateway[0]}:{l2.gateway[1]}"
            vlans = ",".join(str(v) for v in l2.vlans)
            lines.append(f"l2template {asys.asn} switches={switches} links={sw_links}"
                         f" hosts={hosts} gateway={gw} vlans={vlans}")
    for link in spec.inter_as_links:
        link = link.normalized()
        rel = "prov" if link.relationship == "a_provider_of_b" else "peer"
        lines.append(f"link {link.a[0]}.{link.a[1]} {link.b[0]}.{link.b[1]}"
                     f" rel={rel} delay_us={link.delay_us} bw_bps={link.bandwidth_bps}")
    for ixp in spec.ixps:
        members = ",".join(f"{asn}.{router}" for asn, router in ixp.members)
        lines.append(f"ixp {ixp.ixp_id} members={members} delay_us={ixp.delay_us}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Validation


def _connected(nodes: list[str], edges: list[tuple[str, str]]) -> bool:
    if not nodes:
        return True
    adjacency: dict[str, set[str]] = {n: set() for n in nodes}
    for a, b in edges:
        if a in adjacency and b in adjacency:
            adjacency[a].add(b)
            adjacency[b].add(a)
    seen = {nodes[0]}
    stack = [nodes[0]]
    while stack:
        for peer in adjacency[stack.pop()]:
            if peer not in seen:
                seen.add(peer)
                stack.append(peer)
    return len(seen) == len(nodes)


def _validate_as(asys: AsSpec, out: list[Violation]) -> None:
    label = f"AS {asys.asn}"
    if asys.asn <= 0 or asys.asn > MAX_ASN:
        out.append(Violation("BadAsn", label, f"ASN must be in 1..{MAX_ASN}"))
    if asys.role not in ROLES:
        out.append(Violation("BadRole", label, f"unknown role {asys.role!r}"))

    l3 = asys.l3_template
    if not l3.routers:
        out.append(Violation("EmptyRouters", label, "AS has no routers"))
        return
    if len(l3.routers) != len(set(l3.routers)):
        out.append(Violation("DuplicateRouter", label, "duplicate router name"))
    if len(l3.routers) > MAX_ROUTERS_PER_AS:
        out.append(Violation("TooManyRouters", label,
                             f"at most {MAX_ROUTERS_PER_AS} routers per AS"))
    if len(l3.intra_links) > MAX_INTRA_LINKS_PER_AS:
        out.append(Violation("TooManyIntraLinks", label,
                             f"at most {MAX_INTRA_LINKS_PER_AS} intra links per AS"))
    router_set = set(l3.routers)
    dangling = False
    seen_pairs: set[tuple[str, str]] = set()
    for a, b, cost, delay in l3.intra_links:
        if a not in router_set or b not in router_set:
            out.append(Violation("DanglingIntraLink", label,
                                 f"intra link {a}-{b} references a missing router"))
            dangling = True
        if cost <= 0 or delay < 0:
            out.append(Violation("BadLinkAttribute", label,
                                 f"intra link {a}-{b} needs cost > 0 and delay >= 0"))
        pair = (min(a, b), max(a, b))
        if pair in seen_pairs:
            out.append(Violation("DuplicateIntraLink", label,
                                 f"intra link {a}-{b} declared twice"))
        seen_pairs.add(pair)
    if not dangling and not _connected(
            l3.routers, [(a, b) for a, b, _, _ in l3.intra_links]):
        out.append(Violation("DisconnectedL3", label, "router graph is not connected"))

    l2 = asys.l2_template
    names = list(l3.routers) + [f"host_{r}" for r in l3.routers]
    if not l2.empty():
        switch_names = [name for name, _ in l2.switches]
        names += switch_names + [host for _, host, _ in l2.host_ports]
        switch_set = set(switch_names)
        if len(switch_names) != len(switch_set):
            out.append(Violation("DuplicateSwitch", label, "duplicate switch name"))
        sw_dangling = False
        seen_sw_pairs: set[tuple[str, str]] = set()
        for a, b in l2.switch_links:
            if a not in switch_set or b not in switch_set:
                out.append(Violation("DanglingSwitchLink", label,
                                     f"switch link {a}-{b} references a missing switch"))
                sw_dangling = True
            pair = (min(a, b), max(a, b))
            if pair in seen_sw_pairs:
                out.append(Violation("DuplicateSwitchLink", label,
                                     f"switch link {a}-{b} declared twice"))
            seen_sw_pairs.add(pair)
        if not sw_dangling and not _connected(switch_names, l2.switch_links):
            out.append(Violation("DisconnectedL2", label, "switch graph is not connected"))
        vlan_set = set(l2.vlans)
        if len(l2.vlans) != len(vlan_set):
            out.append(Violation("DuplicateVlan", label, "duplicate vlan id"))
        if len(l2.vlans) > MAX_VLANS_PER_AS:
            out.append(Violation("TooManyVlans", label,
                                 f"at most {MAX_VLANS_PER_AS} vlans fit the /23"))
        for vlan in l2.vlans:
            if not 1 <= vlan <= 4094:
                out.append(Violation("BadVlan", label, f"vlan {vlan} out of range"))
        for switch, host, vlan in l2.host_ports:
            if switch not in switch_set:
                out.append(Violation("DanglingHostPort", label,
                                     f"host {host} attaches to missing switch {switch}"))
            if vlan not in vlan_set:
                out.append(Violation("UnknownVlan", label,
                                     f"host {host} uses undeclared vlan {vlan}"))
        if l2.gateway is None:
            out.append(Violation("NoGateway", label, "L2 network has no gateway"))
        else:
            gw_switch, gw_router = l2.gateway
            if gw_switch not in switch_set or gw_router not in router_set:
                out.append(Violation("BadGateway", label,
                                     f"gateway {gw_switch}:{gw_router} does not resolve"))
    if len(names) != len(set(names)):
        out.append(Violation("DuplicateDeviceName", label,
                             "router/switch/host names collide within the AS"))


def validate(spec: TopologySpec) -> list[Violation]:
    """Check every structural invariant; an empty list means the topology is sound."""
    out: list[Violation] = []
    seen: set[int] = set()
    for asys in spec.ases:
        if asys.asn in seen:
            out.append(Violation("DuplicateAsn", f"AS {asys.asn}", "ASN used twice"))
        seen.add(asys.asn)
        if asys.region not in spec.regions:
            out.append(Violation("UnknownRegion", f"AS {asys.asn}",
                                 f"region {asys.region!r} not declared"))
        _validate_as(asys, out)

    by_asn = {asys.asn: asys for asys in spec.ases}
    pair_counts: dict[tuple[int, int], int] = {}
    for link in spec.inter_as_links:
        label = f"link {link.a[0]}.{link.a[1]}-{link.b[0]}.{link.b[1]}"
        if link.a[0] == link.b[0]:
            out.append(Violation("SelfLink", label, "both endpoints in the same AS"))
            continue
        for asn, router in (link.a, link.b):
            owner = by_asn.get(asn)
            if owner is None or router not in owner.l3_template.routers:
                out.append(Violation("DanglingLinkEndpoint", label,
                                     f"no router {router!r} in AS {asn}"))
        if link.relationship not in ("a_provider_of_b", "b_provider_of_a", "peer"):
            out.append(Violation("BadRelationship", label,
                                 f"unknown relationship {link.relationship!r}"))
        if link.delay_us < 0:
            out.append(Violation("NegativeDelay", label, "delay must be >= 0"))
        pair = (min(link.a[0], link.b[0]), max(link.a[0], link.b[0]))
        pair_counts[pair] = pair_counts.get(pair, 0) + 1
    for pair, count in sorted(pair_counts.items()):
        if count > MAX_PARALLEL_LINKS:
            out.append(Violation("TooManyParallelLinks", f"ASes {pair[0]}-{pair[1]}",
                                 f"at most {MAX_PARALLEL_LINKS} parallel links"))

    ixp_ids: set[int] = set()
    for ixp in spec.ixps:
        label = f"IXP {ixp.ixp_id}"
        if ixp.ixp_id in ixp_ids:
            out.append(Violation("DuplicateIxp", label, "IXP id used twice"))
        ixp_ids.add(ixp.ixp_id)
        if ixp.ixp_id <= 0 or ixp.ixp_id > MAX_IXP_ID or ixp.ixp_id in by_asn:
            out.append(Violation("BadIxpId", label,
                                 f"IXP id must be in 1..{MAX_IXP_ID} and distinct from ASNs"))
        if len({asn for asn, _ in ixp.members}) < 2:
            out.append(Violation("IxpTooFewMembers", label,
                                 "an IXP needs members from at least 2 ASes"))
        member_asns: set[int] = set()
        for asn, router in ixp.members:
            owner = by_asn.get(asn)
            if owner is None or router not in owner.l3_template.routers:
                out.append(Violation("DanglingIxpMember", label,
                                     f"no router {router!r} in AS {asn}"))
            if asn in member_asns:
                out.append(Violation("DuplicateIxpMember", label,
                                     f"AS {asn} joins twice; one port per AS"))
            member_asns.add(asn)
        if ixp.delay_us < 0:
            out.append(Violation("NegativeDelay", label, "delay must be >= 0"))

    asns = sorted(by_asn)
    edges = [(str(link.a[0]), str(link.b[0])) for link in spec.inter_as_links
             if link.a[0] in by_asn and link.b[0] in by_asn]
    if not _connected([str(a) for a in asns], edges):
        out.append(Violation("DisconnectedAsGraph", "topology",
                             "the non-IXP AS graph is not connected"))
    return out


# ---------------------------------------------------------------------------
# Reference topology generator


TRANSIT_ROUTERS = ["ZURI", "BASE", "GENE", "LUGA", "MUNI", "LYON", "VIEN", "MILA"]
TRANSIT_INTRA_LINKS = [
    ("ZURI", "BASE"), ("ZURI", "GENE"), ("BASE", "GENE"), ("BASE", "MUNI"),
    ("GENE", "LUGA"), ("MUNI", "LYON"), ("MUNI", "VIEN"), ("LUGA", "LYON"),
    ("LYON", "MILA"), ("VIEN", "MILA"),
]
# Which router of a transit AS terminates each kind of external attachment.
# provider1/provider2 are the links toward the left/right provider above,
# customer1/customer2 toward the left/right customer below.
TRANSIT_ATTACH = {
    "provider1": "MUNI", "provider2": "BASE",
    "customer1": "LYON", "customer2": "MILA",
    "peer": "LUGA", "ixp": "VIEN",
}
REFERENCE_INTER_AS_DELAY_US = 2500
REFERENCE_INTER_AS_BW_BPS = 1_000_000


def _transit_l3_template() -> L3Template:
    return L3Template(
        routers=list(TRANSIT_ROUTERS),
        intra_links=[(a, b, DEFAULT_INTRA_COST, DEFAULT_INTRA_DELAY_US)
                     for a, b in TRANSIT_INTRA_LINKS])


def _transit_l2_template() -> L2Template:
    switches = [(f"SW{i}", DEFAULT_BRIDGE_PRIORITY) for i in range(1, 5)]
    links = [("SW1", "SW2"), ("SW2", "SW3"), ("SW3", "SW4"), ("SW1", "SW4")]
    vlans = [10, 20, 30]
    host_ports = [(f"SW{i // 2 + 1}", f"h{i + 1}", vlans[i % 3]) for i in range(8)]
    return L2Template(switches=switches, switch_links=links, host_ports=host_ports,
                      gateway=("SW1", "ZURI"), vlans=vlans)


def _single_router_l3_template() -> L3Template:
    return L3Template(routers=["ZURI"])


def _attach_router(asys: AsSpec, kind: str) -> str:
    if asys.role == "transit":
        return TRANSIT_ATTACH[kind]
    return "ZURI"


def generate_reference_topology(regions: int, ases_per_region: int) -> TopologySpec:
    """Build the classroom layout: regions of two AS columns with Tier1 rows on
    top, stub rows at the bottom, provider links to the row above, peer links
    within a row, a Tier1 peer ring, one IXP per region boundary, and a
    central IXP for the Tier1s."""
    if regions < 1:
        raise ValueError("need at least one region")
    if ases_per_region < 4 or ases_per_region % 2:
        raise ValueError("ases_per_region must be even and at least 4")
    total = regions * ases_per_region
    if total > MAX_ASN:
        raise ValueError(f"at most {MAX_ASN} ASes are addressable")

    spec = TopologySpec(regions=[f"region{i + 1}" for i in range(regions)])
    rows = ases_per_region // 2

    def asn_at(region_index: int, row: int, col: int) -> int:
        return region_index * ases_per_region + 2 * row + col + 1

    for region_index in range(regions):
        for row in range(rows):
            for col in range(2):
                role = "tier1" if row == 0 else "stub" if row == rows - 1 else "transit"
                asys = AsSpec(
                    asn=asn_at(region_index, row, col), role=role,
                    region=spec.regions[region_index],
                    auto_configured=role != "transit")
                if role == "transit":
                    asys.l3_template = _transit_l3_template()
                    asys.l2_template = _transit_l2_template()
                else:
                    asys.l3_template = _single_router_l3_template()
                spec.ases.append(asys)

    by_asn = {asys.asn: asys for asys in spec.ases}

    def add_link(a_asn: int, a_kind: str, b_asn: int, b_kind: str, rel: str) -> None:
        spec.inter_as_links.append(InterAsLink(
            a=(a_asn, _attach_router(by_asn[a_asn], a_kind)),
            b=(b_asn, _attach_router(by_asn[b_asn], b_kind)),
            relationship=rel,
            delay_us=REFERENCE_INTER_AS_DELAY_US,
            bandwidth_bps=REFERENCE_INTER_AS_BW_BPS))

    for region_index in range(regions):
        for row in range(rows - 1):
            for col in range(2):
                provider = asn_at(region_index, row, col)
                below_left = asn_at(region_index, row + 1, 0)
                below_right = asn_at(region_index, row + 1, 1)
                customer_kind = f"provider{col + 1}"
                add_link(provider, "customer1", below_left, customer_kind,
                         "a_provider_of_b")
                add_link(provider, "customer2", below_right, customer_kind,
                         "a_provider_of_b")
        for row in range(1, rows):
            left = asn_at(region_index, row, 0)
            add_link(left, "peer", left + 1, "peer", "peer")

    tier1 = [asys.asn for asys in spec.ases if asys.role == "tier1"]
    ring_pairs: set[tuple[int, int]] = set()
    for index, asn in enumerate(tier1):
        partner = tier1[(index + 1) % len(tier1)]
        pair = (min(asn, partner), max(asn, partner))
        if partner != asn and pair not in ring_pairs:
            ring_pairs.add(pair)
            add_link(pair[0], "peer", pair[1], "peer", "peer")

    first_ixp = max(80, total + 1)
    central_members = [(asn, "ZURI") for asn in tier1]
    spec.ixps.append(IxpSpec(ixp_id=first_ixp, members=central_members,
                             delay_us=REFERENCE_INTER_AS_DELAY_US))
    regional_members: dict[int, list[tuple[int, str]]] = {
        first_ixp + 1 + i: [] for i in range(regions)}
    for region_index in range(regions):
        left_ixp = first_ixp + 1 + region_index
        right_ixp = first_ixp + 1 + (region_index + 1) % regions
        for row in range(rows):
            left_asn = asn_at(region_index, row, 0)
            right_asn = asn_at(region_index, row, 1)
            regional_members[left_ixp].append(
                (left_asn, _attach_router(by_asn[left_asn], "ixp")))
            regional_members[right_ixp].append(
                (right_asn, _attach_router(by_asn[right_asn], "ixp")))
    for ixp_id in sorted(regional_members):
        members = sorted(regional_members[ixp_id])
        spec.ixps.append(IxpSpec(ixp_id=ixp_id, members=members,
                                 delay_us=REFERENCE_INTER_AS_DELAY_US))
    return spec


# ---------------------------------------------------------------------------
# Address plan


@dataclass
class AddressPlan:
    """Every subnet and fixed address the topology implies.

    AS n owns n.0.0.0/8. Inside it: the loopback of router r (1-based template
    index) is n.150.0.r/32, the host LAN of router r is n.(100+r).0.0/24 with
    the host at .1 and the router at .2, intra-AS link k (1-based, links in
    lexicographic order) is n.0.k.0/30 with the lexicographically smaller
    router at .1, and the L2 network n.0.200.0/23 is carved into /25 blocks
    per VLAN in ascending VLAN order (gateway .1-equivalent, hosts from .2 in
    template order). Between ASes a < b, parallel link k (1-based, file
    order) is 179.a.b.(4(k-1))/30 with the a side at the first host address.
    IXP i peers on 180.i.0.0/24 where member AS m sits at .m and the route
    server at .i.
    """

    as_prefix: dict[int, Prefix] = field(default_factory=dict)
    loopbacks: dict[tuple[int, str], Prefix] = field(default_factory=dict)
    host_lans: dict[tuple[int, str], Prefix] = field(default_factory=dict)
    intra_links: dict[tuple[int, str, str], Prefix] = field(default_factory=dict)
    inter_links: list[Prefix] = field(default_factory=list)
    l2_subnets: dict[int, Prefix] = field(default_factory=dict)
    vlan_subnets: dict[int, dict[int, Prefix]] = field(default_factory=dict)
    vlan_gateway_addrs: dict[tuple[int, int], int] = field(default_factory=dict)
    vlan_host_addrs: dict[tuple[int, str], tuple[int, int]] = field(default_factory=dict)
    ixp_subnets: dict[int, Prefix] = field(default_factory=dict)

    def loopback_addr(self, asn: int, router: str) -> int:
        return self.loopbacks[(asn, router)][0]

    def host_addr(self, asn: int, router: str) -> int:
        return self.host_lans[(asn, router)][0] + 1

    def router_lan_addr(self, asn: int, router: str) -> int:
        return self.host_lans[(asn, router)][0] + 2

    def intra_link_subnet(self, asn: int, r1: str, r2: str) -> Prefix:
        return self.intra_links[(asn, min(r1, r2), max(r1, r2))]

    def intra_link_addr(self, asn: int, r1: str, r2: str) -> int:
        """Address of r1 on its link to r2."""
        subnet = self.intra_link_subnet(asn, r1, r2)
        return subnet[0] + (1 if r1 < r2 else 2)

    def inter_link_addrs(self, index: int, link: InterAsLink) -> tuple[int, int]:
        """(a-side, b-side) addresses of inter-AS link `index`."""
        base = self.inter_links[index][0]
        if link.a[0] < link.b[0]:
            return base + 1, base + 2
        return base + 2, base + 1

    def ixp_member_addr(self, ixp_id: int, asn: int) -> int:
        return self.ixp_subnets[ixp_id][0] + asn

    def ixp_rs_addr(self, ixp_id: int) -> int:
        return self.ixp_subnets[ixp_id][0] + ixp_id

    def all_subnets(self) -> list[tuple[str, Prefix]]:
        """Every allocated subnet with a human-readable owner label."""
        out: list[tuple[str, Prefix]] = []
        for asn, prefix in sorted(self.as_prefix.items()):
            out.append((f"as{asn}", prefix))
        for (asn, router), prefix in sorted(self.loopbacks.items()):
            out.append((f"as{asn}:lo:{router}", prefix))
        for (asn, router), prefix in sorted(self.host_lans.items()):
            out.append((f"as{asn}:lan:{router}", prefix))
        for (asn, r1, r2), prefix in sorted(self.intra_links.items()):
            out.append((f"as{asn}:link:{r1}-{r2}", prefix))
        for asn, by_vlan in sorted(self.vlan_subnets.items()):
            for vlan, prefix in sorted(by_vlan.items()):
                out.append((f"as{asn}:vlan{vlan}", prefix))
        for index, prefix in enumerate(self.inter_links):
            out.append((f"interlink{index}", prefix))
        for ixp_id, prefix in sorted(self.ixp_subnets.items()):
            out.append((f"ixp{ixp_id}", prefix))
        return out


def allocate_addresses(spec: TopologySpec) -> AddressPlan:
    """Derive the full deterministic address plan for a valid spec."""
    plan = AddressPlan()
    for asys in spec.ases:
        asn = asys.asn
        plan.as_prefix[asn] = parse_prefix(f"{asn}.0.0.0/8")
        for index, router in enumerate(asys.l3_template.routers, start=1):
            plan.loopbacks[(asn, router)] = parse_prefix(f"{asn}.150.0.{index}/32")
            if asys.l3_template.hosts:
                plan.host_lans[(asn, router)] = parse_prefix(f"{asn}.{100 + index}.0.0/24")
        pairs = sorted({(min(a, b), max(a, b))
                        for a, b, _, _ in asys.l3_template.intra_links})
        for k, (r1, r2) in enumerate(pairs, start=1):
            plan.intra_links[(asn, r1, r2)] = parse_prefix(f"{asn}.0.{k}.0/30")
        l2 = asys.l2_template
        if not l2.empty():
            l2_base = parse_prefix(f"{asn}.0.200.0/23")
            plan.l2_subnets[asn] = l2_base
            plan.vlan_subnets[asn] = {}
            for offset, vlan in enumerate(sorted(l2.vlans)):
                subnet = (l2_base[0] + offset * 128, 25)
                plan.vlan_subnets[asn][vlan] = subnet
                plan.vlan_gateway_addrs[(asn, vlan)] = subnet[0] + 1
                next_host = subnet[0] + 2
                for _, host, host_vlan in l2.host_ports:
                    if host_vlan == vlan:
                        plan.vlan_host_addrs[(asn, host)] = (vlan, next_host)
                        next_host += 1

    pair_counter: dict[tuple[int, int], int] = {}
    for link in spec.inter_as_links:
        low, high = min(link.a[0], link.b[0]), max(link.a[0], link.b[0])
        k = pair_counter.get((low, high), 0)
        pair_counter[(low, high)] = k + 1
        plan.inter_links.append((parse_prefix(f"179.{low}.{high}.0/30")[0] + 4 * k, 30))

    for ixp in spec.ixps:
        plan.ixp_subnets[ixp.ixp_id] = parse_prefix(f"180.{ixp.ixp_id}.0.0/24")
    return plan
