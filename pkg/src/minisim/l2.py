"""Switched-segment behavior: spanning tree and VLAN-aware frame paths.

Every switch gets a bridge id (priority, position in the template's switch
list, 1-based) and a port id per interface (1-based position among the
switch's sorted interface names). The tree is the classic election: lowest
bridge id is root, each switch picks the upstream port that minimizes
(path cost, neighbor bridge id, neighbor port id, own port id) with every
hop costing 1, and on each link the side advertising the better
(cost, bridge id, port id) is designated. A link forwards only when its
non-designated side is a root port. Partitioned segments elect one root
per component.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .network import Network, Wire

BridgeId = tuple[int, int]


@dataclass
class SpanningTree:
    asn: int
    roots: list[str]                      # one per component, sorted
    bridge_ids: dict[str, BridgeId]
    root_ports: dict[str, str]            # switch -> upstream interface
    active_edges: set[tuple[str, str]]    # forwarding switch pairs, sorted
    blocked_edges: set[tuple[str, str]]

    def edge_active(self, a: str, b: str) -> bool:
        return tuple(sorted((a, b))) in self.active_edges


def bridge_id_of(network: Network, asn: int, switch: str) -> BridgeId:
    template = network.spec.as_by_number(asn).l2_template
    for position, (name, _priority) in enumerate(template.switches, start=1):
        if name == switch:
            return (network.device(asn, switch).stp_priority, position)
    raise KeyError(f"no switch {switch!r} in AS {asn}")


def port_id_of(state, ifname: str) -> int:
    return sorted(state.interfaces).index(ifname) + 1


def _segment_links(network: Network, asn: int) -> list[Wire]:
    return [wire for wire in network.wires
            if wire.kind == "l2" and wire.endpoints[0][0] == asn
            and network.wire_up(wire)]


def compute_spanning_tree(network: Network, asn: int) -> SpanningTree | None:
    template = network.spec.as_by_number(asn).l2_template
    if template.empty():
        return None
    switches = [name for name, _prio in template.switches
                if network.device_up(asn, name)]
    bids = {name: bridge_id_of(network, asn, name) for name in switches}
    links = _segment_links(network, asn)

    adjacency: dict[str, list[tuple[str, str, str]]] = {s: [] for s in switches}
    for wire in links:
        (_, a, a_port), (_, b, b_port) = wire.endpoints
        if a in adjacency and b in adjacency:
            adjacency[a].append((b, a_port, b_port))
            adjacency[b].append((a, b_port, a_port))

    roots: list[str] = []
    dist: dict[str, int] = {}
    component: dict[str, str] = {}
    for start in sorted(switches, key=lambda s: bids[s]):
        if start in component:
            continue
        # collect the component, then elect its root by bridge id
        members = [start]
        component[start] = start
        queue = [start]
        while queue:
            node = queue.pop()
            for neighbor, _, _ in adjacency[node]:
                if neighbor not in component:
                    component[neighbor] = start
                    members.append(neighbor)
                    queue.append(neighbor)
        root = min(members, key=lambda s: bids[s])
        roots.append(root)
        dist[root] = 0
        frontier = [root]
        while frontier:
            nxt: list[str] = []
            for node in frontier:
                for neighbor, _, _ in adjacency[node]:
                    if neighbor not in dist:
                        dist[neighbor] = dist[node] + 1
                        nxt.append(neighbor)
            frontier = nxt

    root_ports: dict[str, str] = {}
    root_link: dict[str, tuple[str, str]] = {}
    for switch in switches:
        if switch in roots:
            continue
        state = network.device(asn, switch)
        best = None
        for neighbor, own_port, far_port in adjacency[switch]:
            neighbor_state = network.device(asn, neighbor)
            candidate = (dist[neighbor] + 1, bids[neighbor],
                         port_id_of(neighbor_state, far_port),
                         port_id_of(state, own_port))
            if best is None or candidate < best:
                best = candidate
                root_ports[switch] = own_port
                root_link[switch] = (neighbor, own_port)

    active: set[tuple[str, str]] = set()
    blocked: set[tuple[str, str]] = set()
    for wire in links:
        (_, a, a_port), (_, b, b_port) = wire.endpoints
        if a not in dist or b not in dist:
            continue
        a_offer = (dist[a], bids[a], port_id_of(network.device(asn, a), a_port))
        b_offer = (dist[b], bids[b], port_id_of(network.device(asn, b), b_port))
        designated, other, other_port = (
            (a, b, b_port) if a_offer < b_offer else (b, a, a_port))
        pair = tuple(sorted((a, b)))
        if root_link.get(other) == (designated, other_port):
            active.add(pair)
        else:
            blocked.add(pair)

    return SpanningTree(asn=asn, roots=sorted(roots), bridge_ids=bids,
                        root_ports=root_ports, active_edges=active,
                        blocked_edges=blocked)


def _port_carries(state, ifname: str, vlan: int) -> bool:
    interface = state.interfaces.get(ifname)
    if interface is None or not interface.up:
        return False
    if interface.mode == "access":
        return interface.vlan == vlan
    if interface.mode == "trunk":
        return vlan in state.vlans
    return False


@dataclass
class L2Attachment:
    switch: str
    port: str        # switch-side interface
    vlan: int | None  # None when the port itself decides (gateway trunk)
    wire: Wire


def host_attachment(network: Network, asn: int, host: str) -> L2Attachment | None:
    for wire in network.wires:
        if wire.kind != "l2host":
            continue
        (sw_asn, switch, port), (h_asn, name, _) = wire.endpoints
        if h_asn == asn and name == host:
            interface = network.device(asn, switch).interfaces.get(port)
            vlan = interface.vlan if interface and interface.mode == "access" else None
            return L2Attachment(switch=switch, port=port, vlan=vlan, wire=wire)
    return None


def gateway_attachment(network: Network, asn: int) -> L2Attachment | None:
    for wire in network.wires:
        if wire.kind != "gateway" or wire.endpoints[0][0] != asn:
            continue
        (_, switch, port), _router_end = wire.endpoints
        return L2Attachment(switch=switch, port=port, vlan=None, wire=wire)
    return None


@dataclass
class L2Delivery:
    switches: list[str] = field(default_factory=list)
    delay_us: int = 0
    reason: str | None = None  # set when undeliverable

    @property
    def ok(self) -> bool:
        return self.reason is None


def l2_deliver(network: Network, asn: int, vlan: int,
               src: L2Attachment, dst: L2Attachment) -> L2Delivery:
    """Walk a tagged frame from one edge port to another over the active
    tree, honoring per-switch VLAN declarations and port modes."""
    if not network.wire_up(src.wire):
        return L2Delivery(reason="source link down")
    if not network.wire_up(dst.wire):
        return L2Delivery(reason="destination link down")
    src_state = network.device(asn, src.switch)
    dst_state = network.device(asn, dst.switch)
    if not _port_carries(src_state, src.port, vlan):
        return L2Delivery(reason=f"vlan {vlan} not carried at {src.switch}/{src.port}")
    if not _port_carries(dst_state, dst.port, vlan):
        return L2Delivery(reason=f"vlan {vlan} not carried at {dst.switch}/{dst.port}")

    tree = compute_spanning_tree(network, asn)
    if tree is None:
        return L2Delivery(reason="no switched segment")

    delay = src.wire.delay_us + dst.wire.delay_us
    if src.switch == dst.switch:
        return L2Delivery(switches=[src.switch], delay_us=delay)

    # BFS across active, vlan-carrying links
    links = _segment_links(network, asn)
    parents: dict[str, tuple[str, Wire]] = {}
    frontier = [src.switch]
    seen = {src.switch}
    while frontier and dst.switch not in parents:
        nxt: list[str] = []
        for node in frontier:
            state = network.device(asn, node)
            for wire in links:
                (_, a, a_port), (_, b, b_port) = wire.endpoints
                if node not in (a, b):
                    continue
                neighbor, own_port, far_port = (
                    (b, a_port, b_port) if node == a else (a, b_port, a_port))
                if neighbor in seen or not tree.edge_active(node, neighbor):
                    continue
                if not _port_carries(state, own_port, vlan):
                    continue
                if not _port_carries(network.device(asn, neighbor), far_port, vlan):
                    continue
                parents[neighbor] = (node, wire)
                seen.add(neighbor)
                nxt.append(neighbor)
        frontier = nxt

    if dst.switch not in parents:
        return L2Delivery(reason=f"no forwarding path for vlan {vlan}")
    hops = [dst.switch]
    node = dst.switch
    while node != src.switch:
        node, wire = parents[node]
        delay += wire.delay_us
        hops.append(node)
    hops.reverse()
    return L2Delivery(switches=hops, delay_us=delay)
