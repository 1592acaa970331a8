"""Link-state routing inside one AS.

Adjacencies form over intra-AS wires whose two interfaces are up, share a
subnet, and are both activated by network statements on OSPF-enabled
routers. Costs are per egress interface (explicit override, else the wire
default), so asymmetric links work. Every activated interface's subnet is
advertised; loopbacks add no cost on top of the path, other interfaces add
their own cost. Equal-cost paths keep every minimal first hop, capped at 8.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .addrs import Prefix, covers
from .confcli import DeviceState
from .network import Network, connected_subnet

ECMP_LIMIT = 8
LOOPBACK = "lo"


@dataclass(frozen=True, order=True)
class IgpNextHop:
    ifname: str      # egress interface on the computing router
    via: int         # neighbor's address on the shared subnet
    neighbor: str    # neighbor router name


@dataclass
class IgpRoute:
    cost: int
    nexthops: tuple[IgpNextHop, ...]  # empty for the router's own subnets


def interface_activated(state: DeviceState, ifname: str) -> bool:
    interface = state.interfaces.get(ifname)
    if interface is None or interface.address is None or not interface.up:
        return False
    if not state.ospf.enabled:
        return False
    addr, _plen = interface.address
    return any(covers(network, (addr, 32)) for network in state.ospf.networks)


def _stub_cost(state: DeviceState, ifname: str, wire_cost: int) -> int:
    if ifname == LOOPBACK:
        return state.ospf.if_costs.get(ifname, 0)
    return state.ospf.if_costs.get(ifname, wire_cost)


def _adjacencies(network: Network, asn: int):
    """Yield (router, ifname, cost, neighbor, neighbor addr) per direction."""
    for wire in network.wires:
        if wire.kind != "intra" or wire.endpoints[0][0] != asn:
            continue
        if not network.wire_up(wire):
            continue
        (_, r1, if1), (_, r2, if2) = wire.endpoints
        s1, s2 = network.device(asn, r1), network.device(asn, r2)
        net1, net2 = connected_subnet(s1, if1), connected_subnet(s2, if2)
        if net1 is None or net1 != net2:
            continue
        if not (interface_activated(s1, if1) and interface_activated(s2, if2)):
            continue
        a1 = s1.interfaces[if1].address[0]
        a2 = s2.interfaces[if2].address[0]
        yield r1, if1, s1.ospf.if_costs.get(if1, wire.default_cost), r2, a2
        yield r2, if2, s2.ospf.if_costs.get(if2, wire.default_cost), r1, a1


def _shortest_paths(graph, source):
    """Distances plus every minimal first hop, resolved over the full
    shortest-path DAG so late-found equal-cost joins still count."""
    dist = {source: 0}
    heap = [(0, source)]
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist.get(node, d + 1):
            continue
        for neighbor, cost, _hop in graph.get(node, ()):
            nd = d + cost
            if nd < dist.get(neighbor, nd + 1):
                dist[neighbor] = nd
                heapq.heappush(heap, (nd, neighbor))

    hops: dict[str, set[IgpNextHop]] = {source: set()}
    for node in sorted(dist, key=lambda n: (dist[n], n)):
        if node == source:
            continue
        merged: set[IgpNextHop] = set()
        for upstream, edges in graph.items():
            if upstream not in dist:
                continue
            for neighbor, cost, hop in edges:
                if neighbor != node or dist[upstream] + cost != dist[node]:
                    continue
                merged |= {hop} if upstream == source else hops.get(upstream, set())
        hops[node] = merged
    return dist, hops


def compute_igp(network: Network, asn: int) -> dict[str, dict[Prefix, IgpRoute]]:
    routers = [r for r in network.routers_of(asn) if network.device_up(asn, r)]
    graph: dict[str, list[tuple[str, int, IgpNextHop]]] = {r: [] for r in routers}
    for router, ifname, cost, neighbor, via in _adjacencies(network, asn):
        if router in graph and neighbor in graph:
            graph[router].append(
                (neighbor, cost, IgpNextHop(ifname=ifname, via=via, neighbor=neighbor)))

    # every router's advertised stub subnets, with the advertising cost
    stubs: dict[str, list[tuple[Prefix, int]]] = {}
    for router in routers:
        state = network.device(asn, router)
        announced: list[tuple[Prefix, int]] = []
        for ifname in sorted(state.interfaces):
            if not interface_activated(state, ifname):
                continue
            subnet = connected_subnet(state, ifname)
            if subnet is None:
                continue
            wire = network.wire_at(asn, router, ifname)
            wire_cost = wire.default_cost if wire is not None else 1
            announced.append((subnet, _stub_cost(state, ifname, wire_cost)))
        stubs[router] = announced

    tables: dict[str, dict[Prefix, IgpRoute]] = {}
    for source in routers:
        dist, hops = _shortest_paths(graph, source)
        table: dict[Prefix, IgpRoute] = {}
        for subnet, _cost in stubs[source]:
            table[subnet] = IgpRoute(cost=0, nexthops=())
        for router, announced in stubs.items():
            if router == source or router not in dist:
                continue
            for subnet, stub_cost in announced:
                total = dist[router] + stub_cost
                current = table.get(subnet)
                if current is not None and current.cost <= total:
                    if current.cost == total and current.nexthops:
                        merged = sorted(set(current.nexthops) | hops[router])
                        table[subnet] = IgpRoute(
                            cost=total, nexthops=tuple(merged[:ECMP_LIMIT]))
                    continue
                table[subnet] = IgpRoute(
                    cost=total, nexthops=tuple(sorted(hops[router])[:ECMP_LIMIT]))
        tables[source] = table
    return tables


def igp_lookup(network: Network, asn: int, router: str, addr: int
               ) -> tuple[Prefix, IgpRoute] | None:
    """Longest matching advertisement from the converged tables."""
    table = network.igp.get(asn, {}).get(router)
    if table is None:
        return None
    best = None
    for prefix, route in table.items():
        if covers(prefix, (addr, 32)):
            if best is None or prefix[1] > best[0][1]:
                best = (prefix, route)
    return best


def igp_distance(network: Network, asn: int, router: str, addr: int) -> int | None:
    found = igp_lookup(network, asn, router, addr)
    return found[1].cost if found is not None else None
