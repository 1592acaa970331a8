"""Packet forwarding over the converged control plane.

Each router gets one forwarding entry per prefix, chosen by administrative
distance: connected 0, static/null 1, external BGP 20, OSPF 110, internal
BGP 200. BGP next hops resolve recursively through connected subnets or the
IGP; a network statement also installs a null entry, so traffic to
unallocated space inside an announced block dies at the announcing border
instead of looping. Traces walk hop by hop with TTL 64, pick among
equal-cost next hops by flow id, cross switched segments when the egress is
a VLAN subinterface, and end Delivered, NoRoute, LinkDown, Loop, or
TtlExceeded. Hosts never forward: a packet reaching the wrong host stops
there. A ping succeeds only when both directions deliver; its round-trip
time is the sum of the two path delays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .addrs import Prefix, covers
from .igp import igp_lookup
from .l2 import gateway_attachment, host_attachment, l2_deliver
from .network import Network, connected_subnet

AD = {"connected": 0, "static": 1, "ebgp": 20, "ospf": 110, "ibgp": 200}
ROUTE_CODE = {"connected": "C", "static": "S", "ospf": "O", "ebgp": "B", "ibgp": "B"}
DEFAULT_TTL = 64


@dataclass(frozen=True, order=True)
class FibNextHop:
    ifname: str
    via: int | None = None  # None: the subnet is directly attached


@dataclass
class FibEntry:
    prefix: Prefix
    proto: str
    metric: int = 0
    nexthops: tuple[FibNextHop, ...] = ()  # empty: terminate here (null route)

    @property
    def ad(self) -> int:
        return AD[self.proto]


def build_fib(network: Network, asn: int, router: str) -> dict[Prefix, FibEntry]:
    state = network.devices[(asn, router)]
    fib: dict[Prefix, FibEntry] = {}

    def offer(entry: FibEntry) -> None:
        current = fib.get(entry.prefix)
        if current is None or entry.ad < current.ad:
            fib[entry.prefix] = entry

    for ifname in sorted(state.interfaces):
        subnet = connected_subnet(state, ifname)
        if subnet is not None:
            offer(FibEntry(prefix=subnet, proto="connected",
                           nexthops=(FibNextHop(ifname=ifname),)))

    for prefix in state.bgp.networks:
        offer(FibEntry(prefix=prefix, proto="static"))

    table = network.igp.get(asn, {}).get(router, {})
    for prefix, route in table.items():
        if not route.nexthops:
            continue  # own subnets are already connected entries
        offer(FibEntry(prefix=prefix, proto="ospf", metric=route.cost,
                       nexthops=tuple(FibNextHop(ifname=h.ifname, via=h.via)
                                      for h in route.nexthops)))

    rib = network.bgp_ribs.get((asn, router))
    if rib is not None:
        for prefix, route in rib.loc_rib.items():
            if route.source == "local":
                continue  # the static null entry covers origination
            nexthops = _resolve_bgp_nexthop(network, asn, router, route.next_hop)
            if not nexthops:
                continue
            offer(FibEntry(prefix=prefix, proto=route.source,
                           metric=route.med, nexthops=nexthops))
    return fib


def _resolve_bgp_nexthop(network: Network, asn: int, router: str,
                         next_hop: int) -> tuple[FibNextHop, ...]:
    state = network.devices[(asn, router)]
    for ifname in sorted(state.interfaces):
        subnet = connected_subnet(state, ifname)
        if subnet is not None and covers(subnet, (next_hop, 32)):
            return (FibNextHop(ifname=ifname, via=next_hop),)
    found = igp_lookup(network, asn, router, next_hop)
    if found is None or not found[1].nexthops:
        return ()
    return tuple(FibNextHop(ifname=h.ifname, via=h.via)
                 for h in found[1].nexthops)


def build_all_fibs(network: Network) -> None:
    network.fibs = {}
    for (asn, name), state in sorted(network.devices.items()):
        if state.kind in ("router", "route_server") and network.device_up(asn, name):
            network.fibs[(asn, name)] = build_fib(network, asn, name)


def fib_lookup(fib: dict[Prefix, FibEntry], addr: int) -> FibEntry | None:
    best = None
    for prefix, entry in fib.items():
        if covers(prefix, (addr, 32)):
            if best is None or prefix[1] > best.prefix[1]:
                best = entry
    return best


@dataclass
class TraceResult:
    outcome: str  # Delivered | NoRoute | LinkDown | Loop | TtlExceeded
    hops: list = field(default_factory=list)  # (asn, device) in order
    delay_us: int = 0
    failed_at: tuple | None = None

    @property
    def delivered(self) -> bool:
        return self.outcome == "Delivered"


def _owned_addrs(state) -> set[int]:
    return {interface.address[0] for interface in state.interfaces.values()
            if interface.address is not None and interface.up}


def trace(network: Network, src: tuple[int, str], dst: int,
          flow_id: int = 0, ttl: int = DEFAULT_TTL) -> TraceResult:
    """Walk a packet from a host or router toward an address."""
    asn, name = src
    state = network.devices.get(src)
    result = TraceResult(outcome="NoRoute", hops=[src])
    if state is None or not network.device_up(asn, name):
        result.failed_at = src
        return result

    if state.kind == "host":
        return _trace_from_host(network, src, dst, flow_id, ttl, result)
    return _router_walk(network, src, dst, flow_id, ttl, result)


def _trace_from_host(network, src, dst, flow_id, ttl, result):
    asn, name = src
    state = network.devices[src]
    if dst in _owned_addrs(state):
        result.outcome = "Delivered"
        return result
    eth = connected_subnet(state, "eth0")
    wire = network.wire_at(asn, name, "eth0")
    if wire is None:
        result.failed_at = src
        return result
    if not network.wire_up(wire):
        result.outcome = "LinkDown"
        result.failed_at = src
        return result

    if eth is not None and covers(eth, (dst, 32)):
        target = dst
    else:
        if state.default_gateway is None or eth is None \
                or not covers(eth, (state.default_gateway, 32)):
            result.failed_at = src
            return result
        target = state.default_gateway

    if wire.kind == "host":
        peer_asn, peer_name, _ = wire.other_end(asn, name)
        peer = network.devices[(peer_asn, peer_name)]
        if target not in _owned_addrs(peer):
            result.failed_at = src
            return result
        result.delay_us += wire.delay_us
        result.hops.append((peer_asn, peer_name))
        if dst in _owned_addrs(peer):
            result.outcome = "Delivered"
            return result
        return _router_walk(network, (peer_asn, peer_name), dst, flow_id,
                            ttl - 1, result)

    # switched segment
    attachment = host_attachment(network, asn, name)
    if attachment is None or attachment.vlan is None:
        result.failed_at = src
        return result
    owner = network.address_owner(target)
    if owner is None:
        result.failed_at = src
        return result
    owner_state = network.devices[owner]
    if owner_state.kind == "host":
        far = host_attachment(network, owner[0], owner[1])
        if far is None or owner[0] != asn:
            result.failed_at = src
            return result
    else:
        far = gateway_attachment(network, asn)
        if far is None:
            result.failed_at = src
            return result
    delivery = l2_deliver(network, asn, attachment.vlan, attachment, far)
    if not delivery.ok:
        down = "link down" in delivery.reason
        result.outcome = "LinkDown" if down else "NoRoute"
        result.failed_at = src
        return result
    result.delay_us += delivery.delay_us
    result.hops.append(owner)
    if dst in _owned_addrs(owner_state):
        result.outcome = "Delivered"
        return result
    if owner_state.kind == "host":
        result.failed_at = owner
        return result
    return _router_walk(network, owner, dst, flow_id, ttl - 1, result)


def _router_walk(network, start, dst, flow_id, ttl, result):
    current = start
    visited: set = set()
    while True:
        asn, name = current
        state = network.devices[current]
        if dst in _owned_addrs(state):
            result.outcome = "Delivered"
            return result
        if ttl <= 0:
            result.outcome = "TtlExceeded"
            result.failed_at = current
            return result
        fib = network.fibs.get(current)
        entry = fib_lookup(fib, dst) if fib is not None else None
        if entry is None or not entry.nexthops:
            result.outcome = "NoRoute"
            result.failed_at = current
            return result
        pick = entry.nexthops[flow_id % len(entry.nexthops)]
        step = (current, pick.ifname)
        if step in visited:
            result.outcome = "Loop"
            result.failed_at = current
            return result
        visited.add(step)

        if pick.ifname.startswith("l2."):
            arrived = _cross_segment(network, current, pick, dst, result)
            if arrived is None:
                return result
            current = arrived
        else:
            arrived = _cross_wire(network, current, pick, dst, result)
            if arrived is None:
                return result
            current = arrived
        ttl -= 1
        arrived_state = network.devices[current]
        if arrived_state.kind == "host":
            if dst in _owned_addrs(arrived_state):
                result.outcome = "Delivered"
            else:
                result.outcome = "NoRoute"
                result.failed_at = current
            return result


def _cross_segment(network, current, pick, dst, result):
    """Egress through a VLAN subinterface onto the switched segment."""
    asn = current[0]
    vlan = int(pick.ifname.split(".", 1)[1])
    target = pick.via if pick.via is not None else dst
    owner = network.address_owner(target)
    gateway = gateway_attachment(network, asn)
    if owner is None or gateway is None:
        result.outcome = "NoRoute"
        result.failed_at = current
        return None
    owner_state = network.devices[owner]
    if owner_state.kind == "host" and owner[0] == asn:
        far = host_attachment(network, owner[0], owner[1])
    else:
        far = None
    if far is None:
        result.outcome = "NoRoute"
        result.failed_at = current
        return None
    delivery = l2_deliver(network, asn, vlan, gateway, far)
    if not delivery.ok:
        down = "link down" in delivery.reason
        result.outcome = "LinkDown" if down else "NoRoute"
        result.failed_at = current
        return None
    result.delay_us += delivery.delay_us
    result.hops.append(owner)
    return owner


def _cross_wire(network, current, pick, dst, result):
    asn, name = current
    wire = network.wire_at(asn, name, pick.ifname)
    if wire is None:
        result.outcome = "NoRoute"
        result.failed_at = current
        return None
    if not wire.up or not network.endpoint_up((asn, name, pick.ifname)):
        result.outcome = "LinkDown"
        result.failed_at = current
        return None

    if wire.kind == "ixp":
        target = pick.via if pick.via is not None else dst
        owner = network.address_owner(target)
        far = None
        if owner is not None:
            far = next((e for e in wire.endpoints
                        if (e[0], e[1]) == owner), None)
        if far is None:
            result.outcome = "NoRoute"
            result.failed_at = current
            return None
        if not network.endpoint_up(far):
            result.outcome = "LinkDown"
            result.failed_at = current
            return None
        nxt = (far[0], far[1])
    else:
        if not network.wire_up(wire):
            result.outcome = "LinkDown"
            result.failed_at = current
            return None
        far = wire.other_end(asn, name)
        nxt = (far[0], far[1])
    result.delay_us += wire.delay_us
    result.hops.append(nxt)
    return nxt


@dataclass
class PingResult:
    success: bool
    rtt_us: int | None
    forward: TraceResult
    reverse: TraceResult | None = None


def ping(network: Network, src: tuple[int, str], dst: tuple[int, str],
         flow_id: int = 0) -> PingResult:
    """Round trip between two hosts, addressed to eth0 of the target."""
    if src == dst:
        empty = TraceResult(outcome="Delivered", hops=[src])
        return PingResult(success=True, rtt_us=0, forward=empty, reverse=empty)
    dst_state = network.devices[dst]
    src_state = network.devices[src]
    dst_addr = _host_addr(dst_state)
    src_addr = _host_addr(src_state)
    if dst_addr is None or src_addr is None:
        return PingResult(success=False, rtt_us=None,
                          forward=TraceResult(outcome="NoRoute", hops=[src],
                                              failed_at=src))
    forward = trace(network, src, dst_addr, flow_id)
    if not forward.delivered:
        return PingResult(success=False, rtt_us=None, forward=forward)
    reverse = trace(network, dst, src_addr, flow_id)
    success = reverse.delivered
    rtt = forward.delay_us + reverse.delay_us if success else None
    return PingResult(success=success, rtt_us=rtt, forward=forward,
                      reverse=reverse)


def _host_addr(state) -> int | None:
    interface = state.interfaces.get("eth0")
    if interface is None or interface.address is None:
        return None
    return interface.address[0]
