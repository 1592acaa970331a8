"""Device configuration language.

Parses the vtysh-style command dialect, applies commands to per-device
state, and renders canonical running configurations. Scripts are applied
line by line with FRR-style context climbing: a line that does not parse in
the current mode is retried in enclosing modes before being rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .addrs import (
    AddressError,
    Prefix,
    covers,
    format_ip,
    format_prefix,
    mask_of,
    overlaps,
    parse_ip,
    parse_prefix,
)

TOP = ()


class ParseError(ValueError):
    def __init__(self, message: str, column: int = 0):
        super().__init__(message)
        self.column = column


class ApplyError(ValueError):
    pass


@dataclass
class Interface:
    name: str
    # unmasked address with prefix length, e.g. 3.102.0.2/24
    address: tuple[int, int] | None = None
    up: bool = True
    mode: str | None = None  # switch ports: "access" | "trunk"
    vlan: int | None = None


@dataclass
class OspfConfig:
    enabled: bool = False
    networks: list[Prefix] = field(default_factory=list)
    if_costs: dict[str, int] = field(default_factory=dict)


@dataclass
class BgpNeighbor:
    remote_asn: int
    route_map_in: str | None = None
    route_map_out: str | None = None


@dataclass
class BgpConfig:
    local_asn: int | None = None
    router_id: int | None = None
    neighbors: dict[int, BgpNeighbor] = field(default_factory=dict)
    networks: list[Prefix] = field(default_factory=list)


@dataclass
class RouteMapEntry:
    seq: int
    action: str  # permit | deny
    match_prefix_list: str | None = None
    match_community: str | None = None
    set_local_pref: int | None = None
    set_med: int | None = None
    set_communities: list[str] = field(default_factory=list)
    set_prepend: int = 0


@dataclass
class RouteMap:
    name: str
    entries: list[RouteMapEntry] = field(default_factory=list)

    def entry(self, action: str, seq: int) -> RouteMapEntry:
        for existing in self.entries:
            if existing.seq == seq:
                existing.action = action
                return existing
        entry = RouteMapEntry(seq=seq, action=action)
        self.entries.append(entry)
        self.entries.sort(key=lambda e: e.seq)
        return entry


@dataclass
class PrefixListEntry:
    action: str  # permit | deny
    prefix: Prefix
    le: int | None = None
    ge: int | None = None

    def matches(self, prefix: Prefix) -> bool:
        plen = self.prefix[1]
        if not covers(self.prefix, prefix):
            return False
        lower = self.ge if self.ge is not None else plen
        upper = self.le if self.le is not None else (32 if self.ge is not None else plen)
        return lower <= prefix[1] <= upper


@dataclass
class DeviceState:
    kind: str  # router | switch | host | route_server
    asn: int
    name: str
    interfaces: dict[str, Interface] = field(default_factory=dict)
    ospf: OspfConfig = field(default_factory=OspfConfig)
    bgp: BgpConfig = field(default_factory=BgpConfig)
    route_maps: dict[str, RouteMap] = field(default_factory=dict)
    prefix_lists: dict[str, list[PrefixListEntry]] = field(default_factory=dict)
    community_lists: dict[str, list[str]] = field(default_factory=dict)
    stp_priority: int = 32768
    vlans: list[int] = field(default_factory=list)
    default_gateway: int | None = None

    def interface(self, name: str) -> Interface:
        if name not in self.interfaces:
            self.interfaces[name] = Interface(name=name)
        return self.interfaces[name]


@dataclass(frozen=True)
class Command:
    context: tuple
    verb: str
    args: tuple
    text: str
    enters: tuple | None = None


_ROUTERLIKE = ("router", "route_server")


def _pfx(token: str, column: int) -> Prefix:
    try:
        return parse_prefix(token)
    except AddressError as err:
        raise ParseError(str(err), column) from None


def _addr(token: str, column: int) -> int:
    try:
        return parse_ip(token)
    except AddressError as err:
        raise ParseError(str(err), column) from None


def _num(token: str, column: int, what: str) -> int:
    if not token.isdigit():
        raise ParseError(f"{what} must be a number, got {token!r}", column)
    return int(token)


def _parse_in_context(kind: str, tokens: list[str], columns: list[int],
                      context: tuple, text: str) -> Command | None:
    """Try to parse tokens in exactly `context`; None means not valid here."""
    routerlike = kind in _ROUTERLIKE
    n = len(tokens)

    if context and context[0] == "interface" and kind != "switch":
        if tokens[0] == "ip" and n == 3 and tokens[1] == "address":
            addr_text = tokens[2]
            if "/" not in addr_text:
                raise ParseError("address needs /len", columns[2])
            ip_part, _, len_part = addr_text.partition("/")
            addr = _addr(ip_part, columns[2])
            plen = _num(len_part, columns[2], "prefix length")
            if plen > 32:
                raise ParseError(f"bad prefix length {plen}", columns[2])
            return Command(context, "ip address", (addr, plen), text)
        if tokens == ["shutdown"]:
            return Command(context, "shutdown", (), text)
        if tokens == ["no", "shutdown"]:
            return Command(context, "no shutdown", (), text)
        return None

    if context == ("router", "ospf"):
        if tokens[0] == "network" and n == 4 and tokens[1:2] and tokens[2] == "area":
            if tokens[3] != "0":
                raise ParseError("only area 0 is supported", columns[3])
            return Command(context, "ospf network", (_pfx(tokens[1], columns[1]),), text)
        if tokens[0] == "interface" and n == 5 and tokens[2] == "ospf" and tokens[3] == "cost":
            return Command(context, "ospf cost",
                           (tokens[1], _num(tokens[4], columns[4], "cost")), text)
        return None

    if context and context[:2] == ("router", "bgp"):
        if tokens[0] == "bgp" and n == 3 and tokens[1] == "router-id":
            return Command(context, "router-id", (_addr(tokens[2], columns[2]),), text)
        if tokens[0] == "neighbor" and n == 4 and tokens[2] == "remote-as":
            return Command(context, "neighbor remote-as",
                           (_addr(tokens[1], columns[1]),
                            _num(tokens[3], columns[3], "ASN")), text)
        if tokens[0] == "neighbor" and n == 5 and tokens[2] == "route-map":
            if tokens[4] not in ("in", "out"):
                raise ParseError("route-map direction must be in or out", columns[4])
            return Command(context, "neighbor route-map",
                           (_addr(tokens[1], columns[1]), tokens[3], tokens[4]), text)
        if tokens[0] == "network" and n == 2:
            return Command(context, "bgp network", (_pfx(tokens[1], columns[1]),), text)
        return None

    if context and context[0] == "route-map":
        if tokens[:4] == ["match", "ip", "address", "prefix-list"] and n == 5:
            return Command(context, "match prefix-list", (tokens[4],), text)
        if tokens[:2] == ["match", "community"] and n == 3:
            return Command(context, "match community", (tokens[2],), text)
        if tokens[:2] == ["set", "local-preference"] and n == 3:
            return Command(context, "set local-preference",
                           (_num(tokens[2], columns[2], "local-preference"),), text)
        if tokens[:2] == ["set", "metric"] and n == 3:
            return Command(context, "set metric",
                           (_num(tokens[2], columns[2], "metric"),), text)
        if tokens[:2] == ["set", "community"] and n == 4 and tokens[3] == "additive":
            if ":" not in tokens[2]:
                raise ParseError("community must look like asn:tag", columns[2])
            return Command(context, "set community", (tokens[2],), text)
        if tokens[:3] == ["set", "as-path", "prepend"] and n == 4:
            return Command(context, "set as-path prepend",
                           (_num(tokens[3], columns[3], "prepend count"),), text)
        return None

    if context != TOP:
        return None

    # top-level mode
    if tokens[0] == "exit" and n == 1:
        return Command(TOP, "exit", (), text)

    if kind == "switch":
        if tokens[0] == "vlan" and n == 2:
            return Command(TOP, "vlan", (_num(tokens[1], columns[1], "vlan"),), text)
        if tokens[0] == "interface" and n == 5 and tokens[2] == "access" and tokens[3] == "vlan":
            return Command(TOP, "access vlan",
                           (tokens[1], _num(tokens[4], columns[4], "vlan")), text)
        if tokens[0] == "interface" and n == 3 and tokens[2] == "trunk":
            return Command(TOP, "trunk", (tokens[1],), text)
        if tokens[:2] == ["spanning-tree", "priority"] and n == 3:
            return Command(TOP, "stp priority",
                           (_num(tokens[2], columns[2], "priority"),), text)
        return None

    if tokens[0] == "interface" and n == 2:
        return Command(TOP, "interface", (tokens[1],), text,
                       enters=("interface", tokens[1]))

    if kind == "host":
        if tokens[:3] == ["ip", "route", "default"] and n == 5 and tokens[3] == "via":
            return Command(TOP, "default route", (_addr(tokens[4], columns[4]),), text)
        return None

    if not routerlike:
        return None

    if tokens == ["router", "ospf"]:
        return Command(TOP, "router ospf", (), text, enters=("router", "ospf"))
    if tokens[0] == "router" and n == 3 and tokens[1] == "bgp":
        asn = _num(tokens[2], columns[2], "ASN")
        return Command(TOP, "router bgp", (asn,), text, enters=("router", "bgp", asn))
    if tokens[0] == "route-map" and n == 4:
        if tokens[2] not in ("permit", "deny"):
            raise ParseError("route-map action must be permit or deny", columns[2])
        seq = _num(tokens[3], columns[3], "sequence")
        return Command(TOP, "route-map", (tokens[1], tokens[2], seq), text,
                       enters=("route-map", tokens[1], tokens[2], seq))
    if tokens[:2] == ["ip", "prefix-list"] and n in (5, 7, 9):
        name, action = tokens[2], tokens[3]
        if action not in ("permit", "deny"):
            raise ParseError("prefix-list action must be permit or deny", columns[3])
        prefix = _pfx(tokens[4], columns[4])
        le = ge = None
        rest = tokens[5:]
        cols = columns[5:]
        while rest:
            if rest[0] == "le" and len(rest) >= 2:
                le = _num(rest[1], cols[1], "le")
            elif rest[0] == "ge" and len(rest) >= 2:
                ge = _num(rest[1], cols[1], "ge")
            else:
                raise ParseError(f"unexpected token {rest[0]!r}", cols[0])
            rest, cols = rest[2:], cols[2:]
        return Command(TOP, "prefix-list", (name, action, prefix, le, ge), text)
    if tokens[:2] == ["bgp", "community-list"] and n == 5 and tokens[3] == "permit":
        if ":" not in tokens[4]:
            raise ParseError("community must look like asn:tag", columns[4])
        return Command(TOP, "community-list", (tokens[2], tokens[4]), text)
    return None


def parse_command_line(kind: str, text: str, context: tuple = TOP) -> Command:
    """Parse one line in `context`, climbing to enclosing modes on a miss."""
    stripped = text.split("!", 1)[0].rstrip()
    tokens = stripped.split()
    if not tokens:
        raise ParseError("empty line")
    columns = []
    cursor = 0
    for token in tokens:
        cursor = stripped.index(token, cursor)
        columns.append(cursor + 1)
        cursor += len(token)

    mode: tuple | None = context
    while mode is not None:
        cmd = _parse_in_context(kind, tokens, columns, mode, " ".join(tokens))
        if cmd is not None:
            return cmd
        mode = _parent_context(mode)
    raise ParseError(f"unknown command {tokens[0]!r} for {kind}", columns[0])


def _parent_context(context: tuple) -> tuple | None:
    return TOP if context != TOP else None


def apply_command(state: DeviceState, cmd: Command) -> DeviceState:
    """Mutate `state` as the device would; re-application is a no-op."""
    verb, args = cmd.verb, cmd.args

    if verb == "exit":
        return state
    if verb == "interface":
        state.interface(args[0])
        return state
    if verb == "ip address":
        name = cmd.context[1]
        addr, plen = args
        subnet = (addr & mask_of(plen), plen)
        for other in state.interfaces.values():
            if other.name == name or other.address is None:
                continue
            oaddr, oplen = other.address
            osubnet = (oaddr & mask_of(oplen), oplen)
            if overlaps(subnet, osubnet):
                raise ApplyError(
                    f"{format_ip(addr)}/{plen} overlaps {other.name}"
                    f" ({format_prefix(osubnet)})")
        state.interface(name).address = (addr, plen)
        return state
    if verb == "shutdown":
        state.interface(cmd.context[1]).up = False
        return state
    if verb == "no shutdown":
        state.interface(cmd.context[1]).up = True
        return state

    if verb == "router ospf":
        state.ospf.enabled = True
        return state
    if verb == "ospf network":
        if args[0] not in state.ospf.networks:
            state.ospf.networks.append(args[0])
            state.ospf.networks.sort()
        return state
    if verb == "ospf cost":
        if args[1] < 1:
            raise ApplyError("cost must be at least 1")
        state.ospf.if_costs[args[0]] = args[1]
        return state

    if verb == "router bgp":
        if state.bgp.local_asn is not None and state.bgp.local_asn != args[0]:
            raise ApplyError(f"BGP already runs as AS {state.bgp.local_asn}")
        state.bgp.local_asn = args[0]
        return state
    if verb == "router-id":
        state.bgp.router_id = args[0]
        return state
    if verb == "neighbor remote-as":
        addr, asn = args
        neighbor = state.bgp.neighbors.get(addr)
        if neighbor is None:
            state.bgp.neighbors[addr] = BgpNeighbor(remote_asn=asn)
        else:
            neighbor.remote_asn = asn
        return state
    if verb == "neighbor route-map":
        addr, name, direction = args
        neighbor = state.bgp.neighbors.get(addr)
        if neighbor is None:
            raise ApplyError(f"neighbor {format_ip(addr)} has no remote-as yet")
        if direction == "in":
            neighbor.route_map_in = name
        else:
            neighbor.route_map_out = name
        return state
    if verb == "bgp network":
        if args[0] not in state.bgp.networks:
            state.bgp.networks.append(args[0])
            state.bgp.networks.sort()
        return state

    if verb == "route-map":
        name, action, seq = args
        state.route_maps.setdefault(name, RouteMap(name=name)).entry(action, seq)
        return state
    if verb in ("match prefix-list", "match community", "set local-preference",
                "set metric", "set community", "set as-path prepend"):
        _, name, action, seq = cmd.context
        entry = state.route_maps[name].entry(action, seq)
        if verb == "match prefix-list":
            entry.match_prefix_list = args[0]
        elif verb == "match community":
            entry.match_community = args[0]
        elif verb == "set local-preference":
            entry.set_local_pref = args[0]
        elif verb == "set metric":
            entry.set_med = args[0]
        elif verb == "set community":
            if args[0] not in entry.set_communities:
                entry.set_communities.append(args[0])
                entry.set_communities.sort()
        else:
            entry.set_prepend = args[0]
        return state

    if verb == "prefix-list":
        name, action, prefix, le, ge = args
        entry = PrefixListEntry(action=action, prefix=prefix, le=le, ge=ge)
        entries = state.prefix_lists.setdefault(name, [])
        if entry not in entries:
            entries.append(entry)
        return state
    if verb == "community-list":
        name, value = args
        values = state.community_lists.setdefault(name, [])
        if value not in values:
            values.append(value)
        return state

    if verb == "vlan":
        if args[0] not in state.vlans:
            state.vlans.append(args[0])
            state.vlans.sort()
        return state
    if verb == "access vlan":
        port, vlan = args
        if vlan not in state.vlans:
            raise ApplyError(f"vlan {vlan} not declared")
        interface = state.interface(port)
        interface.mode = "access"
        interface.vlan = vlan
        return state
    if verb == "trunk":
        interface = state.interface(args[0])
        interface.mode = "trunk"
        interface.vlan = None
        return state
    if verb == "stp priority":
        state.stp_priority = args[0]
        return state

    if verb == "default route":
        state.default_gateway = args[0]
        return state

    raise ApplyError(f"unhandled command {verb!r}")


@dataclass
class Diagnostic:
    line: int
    severity: str  # warning | error
    message: str

    def render(self) -> str:
        return f"line {self.line}: {self.severity}: {self.message}"


def apply_line(state: DeviceState, raw: str, context: tuple,
               line_no: int = 1) -> tuple[tuple, Diagnostic | None]:
    """Apply one line in `context`; returns the context that follows it.

    Blank and comment lines leave both the state and the context alone.
    """
    stripped = raw.split("!", 1)[0].strip()
    if not stripped:
        return context, None
    try:
        cmd = parse_command_line(state.kind, raw, context)
        apply_command(state, cmd)
    except (ParseError, ApplyError) as err:
        severity = "warning" if isinstance(err, ParseError) else "error"
        return context, Diagnostic(line_no, severity, str(err))
    if cmd.verb == "exit":
        return TOP, None
    if cmd.enters is not None:
        return cmd.enters, None
    if cmd.context == TOP:
        return TOP, None
    return cmd.context, None


def apply_script(state: DeviceState, script: str,
                 strict: bool = False) -> tuple[int, list[Diagnostic]]:
    """Apply a multi-line script; returns (lines applied, diagnostics)."""
    applied = 0
    diagnostics: list[Diagnostic] = []
    context = TOP
    for line_no, raw in enumerate(script.splitlines(), start=1):
        stripped = raw.split("!", 1)[0].strip()
        if not stripped:
            continue
        context, diag = apply_line(state, raw, context, line_no)
        if diag is not None:
            diagnostics.append(diag)
            if strict:
                break
            continue
        applied += 1
    return applied, diagnostics


def load_config_script(network, asn: int, device: str, script: str,
                       strict: bool = False) -> tuple[int, list[Diagnostic]]:
    """Apply a script to one device of a network."""
    state = network.devices.get((asn, device))
    if state is None:
        raise KeyError(f"no device {device!r} in AS {asn}")
    return apply_script(state, script, strict=strict)


# ---------------------------------------------------------------------------
# Rendering


def _render_interface(interface: Interface, lines: list[str]) -> None:
    lines.append(f"interface {interface.name}")
    if interface.address is not None:
        addr, plen = interface.address
        lines.append(f" ip address {format_ip(addr)}/{plen}")
    if not interface.up:
        lines.append(" shutdown")
    lines.append("!")


def render_running_config(state: DeviceState) -> str:
    """Canonical configuration text; parsing it back reproduces the state."""
    lines = [f"! {state.kind} {state.name}"]

    if state.kind == "switch":
        for vlan in state.vlans:
            lines.append(f"vlan {vlan}")
        for name in sorted(state.interfaces):
            interface = state.interfaces[name]
            if interface.mode == "access":
                lines.append(f"interface {name} access vlan {interface.vlan}")
            elif interface.mode == "trunk":
                lines.append(f"interface {name} trunk")
        if state.stp_priority != 32768:
            lines.append(f"spanning-tree priority {state.stp_priority}")
        return "\n".join(lines) + "\n"

    for name in sorted(state.interfaces):
        _render_interface(state.interfaces[name], lines)

    if state.kind == "host":
        if state.default_gateway is not None:
            lines.append(f"ip route default via {format_ip(state.default_gateway)}")
        return "\n".join(lines) + "\n"

    if state.ospf.enabled:
        lines.append("router ospf")
        for network in state.ospf.networks:
            lines.append(f" network {format_prefix(network)} area 0")
        for name in sorted(state.ospf.if_costs):
            lines.append(f" interface {name} ospf cost {state.ospf.if_costs[name]}")
        lines.append("!")

    if state.bgp.local_asn is not None:
        lines.append(f"router bgp {state.bgp.local_asn}")
        if state.bgp.router_id is not None:
            lines.append(f" bgp router-id {format_ip(state.bgp.router_id)}")
        for addr in sorted(state.bgp.neighbors):
            neighbor = state.bgp.neighbors[addr]
            lines.append(f" neighbor {format_ip(addr)} remote-as {neighbor.remote_asn}")
            if neighbor.route_map_in:
                lines.append(f" neighbor {format_ip(addr)} route-map"
                             f" {neighbor.route_map_in} in")
            if neighbor.route_map_out:
                lines.append(f" neighbor {format_ip(addr)} route-map"
                             f" {neighbor.route_map_out} out")
        for network in state.bgp.networks:
            lines.append(f" network {format_prefix(network)}")
        lines.append("!")

    for name in sorted(state.route_maps):
        for entry in state.route_maps[name].entries:
            lines.append(f"route-map {name} {entry.action} {entry.seq}")
            if entry.match_prefix_list:
                lines.append(f" match ip address prefix-list {entry.match_prefix_list}")
            if entry.match_community:
                lines.append(f" match community {entry.match_community}")
            if entry.set_local_pref is not None:
                lines.append(f" set local-preference {entry.set_local_pref}")
            if entry.set_med is not None:
                lines.append(f" set metric {entry.set_med}")
            for community in entry.set_communities:
                lines.append(f" set community {community} additive")
            if entry.set_prepend:
                lines.append(f" set as-path prepend {entry.set_prepend}")
            lines.append("!")

    for name in sorted(state.prefix_lists):
        for entry in state.prefix_lists[name]:
            suffix = ""
            if entry.le is not None:
                suffix += f" le {entry.le}"
            if entry.ge is not None:
                suffix += f" ge {entry.ge}"
            lines.append(f"ip prefix-list {name} {entry.action}"
                         f" {format_prefix(entry.prefix)}{suffix}")
    for name in sorted(state.community_lists):
        for value in state.community_lists[name]:
            lines.append(f"bgp community-list {name} permit {value}")

    return "\n".join(lines) + "\n"
