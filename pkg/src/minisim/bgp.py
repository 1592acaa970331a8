"""Path-vector routing between ASes.

Sessions come from matching neighbor statements on both sides: the remote-as
values must agree with the actual local ASNs, external pairs must share a
subnet on a healthy link, and internal pairs must reach each other through
the IGP. The decision process is the usual ladder: local preference, path
length, origin, MED (compared only when every candidate enters via the same
neighboring AS), route source (local beats external beats internal), IGP
cost to the next hop, then lowest peer id.

Convergence is synchronous rounds over routers in (asn, router id) order.
Each router re-decides its dirty prefixes and pushes differences to its
peers; deliveries inside a round are visible to routers processed later in
that same round. External advertisements get the sender's ASN prepended,
the next hop rewritten to the session address, and local-pref/MED reset
before the outbound policy runs. Internal advertisements keep attributes,
and internally learned routes are never re-advertised internally. A route
server forwards between members without prepending or touching the next
hop. Every converge call restarts from originations, so stale state never
survives configuration changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .addrs import (Prefix, covers, format_ip, format_prefix, halves, mask_of,
                    parse_prefix)
from .confcli import DeviceState, PrefixListEntry
from .igp import igp_lookup
from .network import HijackRecord, Network

MAX_ROUNDS = 1000
SOURCE_RANK = {"local": 0, "ebgp": 1, "ibgp": 2}
ORIGIN_RANK = {"igp": 0, "incomplete": 1}

DECISION_STEPS = ("only", "local-pref", "as-path-length", "origin", "med",
                  "source", "igp-cost", "peer-id")


@dataclass(frozen=True, slots=True)
class BgpRoute:
    prefix: Prefix
    as_path: tuple[int, ...] = ()
    next_hop: int = 0              # 0 when locally originated
    local_pref: int = 100
    med: int = 0
    origin: str = "igp"
    communities: frozenset = frozenset()
    source: str = "local"          # local | ebgp | ibgp
    peer_addr: int = 0
    peer_id: int = 0


@dataclass
class BgpSession:
    kind: str                      # ebgp | ibgp
    a: tuple[int, str]
    b: tuple[int, str] | None      # None when nobody owns the target address
    a_addr: int
    b_addr: int
    state: str = "established"
    idle_reason: str | None = None  # OneSided | AsnMismatch | Unreachable

    def endpoint_for(self, asn: int, router: str):
        """(own addr, peer endpoint, peer addr) seen from one side."""
        if (asn, router) == self.a:
            return self.a_addr, self.b, self.b_addr
        return self.b_addr, self.a, self.a_addr


@dataclass
class RouterBgp:
    adj_rib_in: dict = field(default_factory=dict)   # (peer addr, prefix) -> raw route
    loc_rib: dict = field(default_factory=dict)      # prefix -> chosen route
    decisive: dict = field(default_factory=dict)     # prefix -> decision step label
    adj_rib_out: dict = field(default_factory=dict)  # (peer addr, prefix) -> sent route


@dataclass
class ConvergeReport:
    converged: bool
    rounds: int
    churning: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)


def _bgp_devices(network: Network):
    for key in sorted(network.devices):
        state = network.devices[key]
        if state.bgp.local_asn is not None and network.device_up(*key):
            yield key, state


def derive_sessions(network: Network) -> list[BgpSession]:
    sessions: list[BgpSession] = []
    seen_pairs: set[frozenset] = set()

    for (asn, name), state in _bgp_devices(network):
        for target in sorted(state.bgp.neighbors):
            stmt = state.bgp.neighbors[target]
            owner = network.address_owner(target)
            here = (asn, name)

            def one_way(reason: str) -> None:
                sessions.append(BgpSession(
                    kind="ibgp" if stmt.remote_asn == state.bgp.local_asn else "ebgp",
                    a=here, b=owner if owner != here else None,
                    a_addr=0, b_addr=target, state="idle", idle_reason=reason))

            if owner is None or owner == here:
                one_way("OneSided")
                continue
            other = network.devices[owner]
            if other.bgp.local_asn is None or not network.device_up(*owner):
                one_way("OneSided")
                continue
            if stmt.remote_asn != other.bgp.local_asn:
                one_way("AsnMismatch")
                continue

            if stmt.remote_asn == state.bgp.local_asn:
                session = _pair_ibgp(network, here, state, target, owner, other)
            else:
                session = _pair_ebgp(network, here, state, target, owner, other)
            if session is None:
                continue
            key = frozenset(((here, session.a_addr), (owner, session.b_addr)))
            if session.a_addr and key in seen_pairs:
                continue
            seen_pairs.add(key)
            sessions.append(session)
    return sessions


def _pair_ebgp(network, here, state, target, owner, other):
    asn, name = here
    source_if = None
    for ifname in sorted(state.interfaces):
        interface = state.interfaces[ifname]
        if interface.address is None:
            continue
        addr, plen = interface.address
        if covers((addr & mask_of(plen), plen), (target, 32)):
            source_if = ifname
            break
    if source_if is None:
        return BgpSession(kind="ebgp", a=here, b=owner, a_addr=0, b_addr=target,
                          state="idle", idle_reason="Unreachable")
    local_addr = state.interfaces[source_if].address[0]
    back = other.bgp.neighbors.get(local_addr)
    if back is None:
        return BgpSession(kind="ebgp", a=here, b=owner, a_addr=local_addr,
                          b_addr=target, state="idle", idle_reason="OneSided")
    if back.remote_asn != state.bgp.local_asn:
        return BgpSession(kind="ebgp", a=here, b=owner, a_addr=local_addr,
                          b_addr=target, state="idle", idle_reason="AsnMismatch")

    up = False
    wire = network.wire_at(asn, name, source_if)
    if wire is not None and wire.up:
        if wire.kind == "ixp":
            far = next((e for e in wire.endpoints if (e[0], e[1]) == owner), None)
            up = (far is not None and network.endpoint_up(far)
                  and network.endpoint_up((asn, name, source_if)))
        else:
            up = network.wire_up(wire) and owner in {
                (e[0], e[1]) for e in wire.endpoints}
    return BgpSession(kind="ebgp", a=here, b=owner, a_addr=local_addr,
                      b_addr=target,
                      state="established" if up else "idle",
                      idle_reason=None if up else "Unreachable")


def _pair_ibgp(network, here, state, target, owner, other):
    asn, name = here
    back_addrs = [addr for addr, stmt in sorted(other.bgp.neighbors.items())
                  if stmt.remote_asn == state.bgp.local_asn
                  and network.address_owner(addr) == here]
    if not back_addrs:
        return BgpSession(kind="ibgp", a=here, b=owner, a_addr=0, b_addr=target,
                          state="idle", idle_reason="OneSided")
    local_addr = back_addrs[0]
    reachable = (_resolves(network, asn, name, target) is not None
                 and _resolves(network, owner[0], owner[1], local_addr) is not None)
    return BgpSession(kind="ibgp", a=here, b=owner, a_addr=local_addr,
                      b_addr=target,
                      state="established" if reachable else "idle",
                      idle_reason=None if reachable else "Unreachable")


def _resolves(network: Network, asn: int, router: str, addr: int) -> int | None:
    """IGP cost to reach an address, 0 when directly connected."""
    state = network.devices.get((asn, router))
    if state is None:
        return None
    for ifname in state.interfaces:
        interface = state.interfaces[ifname]
        if interface.address is None or not interface.up:
            continue
        a, plen = interface.address
        if covers((a & mask_of(plen), plen), (addr, 32)):
            return 0
    found = igp_lookup(network, asn, router, addr)
    return found[1].cost if found is not None else None


def evaluate_route_map(state: DeviceState, name: str, route: BgpRoute,
                       diagnostics: list | None = None) -> BgpRoute | None:
    """Run a named policy over a route; None means denied. A reference to a
    missing map denies everything, a missing list never matches."""
    rm = state.route_maps.get(name)
    if rm is None:
        _diag(diagnostics, f"{state.asn}.{state.name}: route-map {name!r} "
                           "is referenced but not defined; denying all routes")
        return None
    for entry in rm.entries:
        if entry.match_prefix_list is not None:
            plist = state.prefix_lists.get(entry.match_prefix_list)
            if plist is None:
                _diag(diagnostics,
                      f"{state.asn}.{state.name}: prefix-list "
                      f"{entry.match_prefix_list!r} is not defined")
                continue
            if not _prefix_list_permits(plist, route.prefix):
                continue
        if entry.match_community is not None:
            clist = state.community_lists.get(entry.match_community)
            if clist is None:
                _diag(diagnostics,
                      f"{state.asn}.{state.name}: community-list "
                      f"{entry.match_community!r} is not defined")
                continue
            if not any(value in route.communities for value in clist):
                continue
        if entry.action == "deny":
            return None
        updates = {}
        if entry.set_local_pref is not None:
            updates["local_pref"] = entry.set_local_pref
        if entry.set_med is not None:
            updates["med"] = entry.set_med
        if entry.set_communities:
            updates["communities"] = route.communities | set(entry.set_communities)
        if entry.set_prepend and route.as_path:
            updates["as_path"] = (route.as_path[0],) * entry.set_prepend + route.as_path
        return replace(route, **updates) if updates else route
    return None


def _prefix_list_permits(entries: list[PrefixListEntry], prefix: Prefix) -> bool:
    for entry in entries:
        if entry.matches(prefix):
            return entry.action == "permit"
    return False


def _diag(diagnostics: list | None, message: str) -> None:
    if diagnostics is not None and message not in diagnostics:
        diagnostics.append(message)


def candidates_for(network: Network, asn: int, router: str, prefix: Prefix,
                   diagnostics: list | None = None) -> list[BgpRoute]:
    """Locally originated plus everything usable from adj-rib-in, with
    inbound policy applied and unresolvable next hops dropped."""
    state = network.devices[(asn, router)]
    rib = network.bgp_ribs.get((asn, router))
    out: list[BgpRoute] = []
    if prefix in state.bgp.networks:
        out.append(BgpRoute(prefix=prefix))
    if rib is None:
        return out
    for (peer_addr, pfx), raw in sorted(rib.adj_rib_in.items()):
        if pfx != prefix:
            continue
        stmt = state.bgp.neighbors.get(peer_addr)
        route = raw
        if stmt is not None and stmt.route_map_in is not None:
            mapped = evaluate_route_map(state, stmt.route_map_in, raw, diagnostics)
            if mapped is None:
                continue
            route = replace(mapped, source=raw.source, peer_addr=raw.peer_addr,
                            peer_id=raw.peer_id)
        if route.next_hop and _resolves(network, asn, router, route.next_hop) is None:
            _diag(diagnostics,
                  f"{asn}.{router}: next hop {format_ip(route.next_hop)} for "
                  f"{format_prefix(route.prefix)} does not resolve")
            continue
        out.append(route)
    return out


def best_route(network: Network, asn: int, router: str,
               candidates: list[BgpRoute]) -> tuple[BgpRoute | None, str]:
    if not candidates:
        return None, "only"
    pool = list(candidates)
    if len(pool) == 1:
        return pool[0], "only"

    def keep_min(key, step):
        nonlocal pool
        best = min(key(route) for route in pool)
        pool = [route for route in pool if key(route) == best]

    steps = [
        (lambda r: -r.local_pref, "local-pref"),
        (lambda r: len(r.as_path), "as-path-length"),
        (lambda r: ORIGIN_RANK.get(r.origin, 1), "origin"),
    ]
    for key, label in steps:
        keep_min(key, label)
        if len(pool) == 1:
            return pool[0], label

    neighbor_ases = {route.as_path[0] if route.as_path else None for route in pool}
    if len(neighbor_ases) == 1:
        keep_min(lambda r: r.med, "med")
        if len(pool) == 1:
            return pool[0], "med"

    def igp_cost(route: BgpRoute) -> int:
        if not route.next_hop:
            return 0
        cost = _resolves(network, asn, router, route.next_hop)
        return cost if cost is not None else 1 << 30

    for key, label in [(lambda r: SOURCE_RANK.get(r.source, 3), "source"),
                       (igp_cost, "igp-cost")]:
        keep_min(key, label)
        if len(pool) == 1:
            return pool[0], label

    chosen = min(pool, key=lambda r: (r.peer_id, r.peer_addr))
    return chosen, "peer-id"


def _router_order(network: Network):
    keys = []
    for (asn, name), state in _bgp_devices(network):
        keys.append((asn, state.bgp.router_id or 0, name))
    return [(asn, name) for asn, _rid, name in sorted(keys)]


def _export(network: Network, sender: tuple[int, str], state: DeviceState,
            session: BgpSession, route: BgpRoute,
            diagnostics: list) -> BgpRoute | None:
    own_addr, peer, peer_addr = session.endpoint_for(*sender)
    if route.source == "ibgp" and session.kind == "ibgp":
        return None
    if route.peer_addr and route.peer_addr == peer_addr:
        return None  # never echo a route back to where it came from
    if session.kind == "ebgp":
        if state.kind == "route_server":
            outgoing = route
        else:
            outgoing = replace(
                route,
                as_path=(state.bgp.local_asn,) + route.as_path,
                next_hop=own_addr, local_pref=100, med=0)
    else:
        outgoing = route
    stmt = state.bgp.neighbors.get(peer_addr)
    if stmt is not None and stmt.route_map_out is not None:
        outgoing = evaluate_route_map(state, stmt.route_map_out, outgoing,
                                      diagnostics)
        if outgoing is None:
            return None
    return replace(outgoing, source="ebgp" if session.kind == "ebgp" else "ibgp",
                   peer_addr=own_addr, peer_id=state.bgp.router_id or own_addr)


def converge(network: Network, max_rounds: int = MAX_ROUNDS) -> ConvergeReport:
    diagnostics: list[str] = []
    network.sessions = derive_sessions(network)
    network.bgp_ribs = {}

    order = _router_order(network)
    for key in order:
        network.bgp_ribs[key] = RouterBgp()

    by_router: dict[tuple[int, str], list[BgpSession]] = {key: [] for key in order}
    for session in network.sessions:
        if session.state != "established":
            continue
        for end in (session.a, session.b):
            if end in by_router:
                by_router[end].append(session)

    dirty: dict[tuple[int, str], set[Prefix]] = {}
    for key in order:
        state = network.devices[key]
        if state.bgp.networks:
            dirty[key] = set(state.bgp.networks)

    rounds = 0
    while dirty and rounds < max_rounds:
        rounds += 1
        queue, dirty = dirty, {}
        for key in order:
            prefixes = queue.pop(key, set()) | dirty.pop(key, set())
            if not prefixes:
                continue
            asn, name = key
            state = network.devices[key]
            rib = network.bgp_ribs[key]
            for prefix in sorted(prefixes):
                cands = candidates_for(network, asn, name, prefix, diagnostics)
                best, step = best_route(network, asn, name, cands)
                previous = rib.loc_rib.get(prefix)
                if best == previous:
                    continue
                if best is None:
                    del rib.loc_rib[prefix]
                    rib.decisive.pop(prefix, None)
                else:
                    rib.loc_rib[prefix] = best
                    rib.decisive[prefix] = step
                for session in by_router[key]:
                    own_addr, peer, peer_addr = session.endpoint_for(asn, name)
                    outgoing = None
                    if best is not None:
                        outgoing = _export(network, key, state, session, best,
                                           diagnostics)
                    sent = rib.adj_rib_out.get((peer_addr, prefix))
                    if outgoing == sent:
                        continue
                    if outgoing is None:
                        del rib.adj_rib_out[(peer_addr, prefix)]
                    else:
                        rib.adj_rib_out[(peer_addr, prefix)] = outgoing
                    _deliver(network, peer, own_addr, prefix, outgoing, dirty)

    churning = sorted({prefix for prefixes in dirty.values()
                       for prefix in prefixes})
    report = ConvergeReport(converged=not dirty, rounds=rounds,
                            churning=[format_prefix(p) for p in churning],
                            diagnostics=diagnostics)
    network.last_report = report
    network.generation += 1
    network.invalidate_caches()
    return report


def _deliver(network: Network, receiver: tuple[int, str], sender_addr: int,
             prefix: Prefix, route: BgpRoute | None,
             dirty: dict) -> None:
    rib = network.bgp_ribs.get(receiver)
    if rib is None:
        return
    state = network.devices[receiver]
    key = (sender_addr, prefix)
    if route is None:
        if key not in rib.adj_rib_in:
            return
        del rib.adj_rib_in[key]
    else:
        if state.bgp.local_asn in route.as_path:
            return  # loop: our own ASN is already in the path
        rib.adj_rib_in[key] = route
    dirty.setdefault(receiver, set()).add(prefix)


def originate_prefix(network: Network, asn: int, prefix: Prefix) -> list[str]:
    """Announce a prefix from every BGP router of the AS.

    Announcing space outside the AS's own block is allowed with a warning;
    own-prefix export filters are widened so the route actually leaves."""
    warnings = []
    own = parse_prefix(f"{asn}.0.0.0/8")
    if not covers(own, prefix):
        warnings.append(f"AS {asn} originates {format_prefix(prefix)} outside "
                        f"its own block {format_prefix(own)}")
        _widen_own_filters(network, asn, (prefix,))
    for (dev_asn, name), state in list(network.devices.items()):
        if dev_asn != asn or state.bgp.local_asn != asn:
            continue
        if prefix not in state.bgp.networks:
            state.bgp.networks.append(prefix)
            state.bgp.networks.sort()
    return warnings


def _widen_own_filters(network: Network, asn: int,
                       prefixes: tuple[Prefix, ...]) -> None:
    for (dev_asn, name), state in network.devices.items():
        if dev_asn != asn or state.bgp.local_asn != asn:
            continue
        own_list = state.prefix_lists.get("OWN")
        if own_list is None:
            continue
        for prefix in prefixes:
            entry = PrefixListEntry(action="permit", prefix=prefix)
            if entry not in own_list:
                own_list.append(entry)


def withdraw_prefix(network: Network, asn: int, prefix: Prefix) -> None:
    for (dev_asn, name), state in list(network.devices.items()):
        if dev_asn != asn or state.bgp.local_asn != asn:
            continue
        if prefix in state.bgp.networks:
            state.bgp.networks.remove(prefix)


def inject_hijack(network: Network, attacker_asn: int, victim_prefix: Prefix,
                  more_specific: bool = False) -> HijackRecord:
    """Make an AS announce someone else's address space. With more_specific
    the two halves are announced so longest-prefix match prefers them. The
    attacker's own-prefix filters are widened so the routes actually leave."""
    injected = halves(victim_prefix) if more_specific else (victim_prefix,)
    for prefix in injected:
        originate_prefix(network, attacker_asn, prefix)
    _widen_own_filters(network, attacker_asn, injected)
    record = HijackRecord(attacker_asn=attacker_asn,
                          victim_prefix=victim_prefix,
                          injected=tuple(injected))
    network.hijacks.append(record)
    return record
