"""Instantiated network: devices, physical wiring, and runtime link state.

Turns a topology spec into per-device state plus a wire list. Wires carry
delay and up/down state; multi-access IXP LANs are single wires with one
endpoint per member plus the route server.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .addrs import Prefix, mask_of
from .confcli import DeviceState
from .topology import AddressPlan, TopologySpec, allocate_addresses, validate

Endpoint = tuple[int, str, str]  # (asn, device, interface)


@dataclass
class Wire:
    kind: str  # intra | inter | ixp | host | l2 | l2host | gateway
    endpoints: tuple[Endpoint, ...]
    delay_us: int = 0
    default_cost: int = 1
    up: bool = True
    spec_index: int = -1  # inter wires: index into spec.inter_as_links

    def other_end(self, asn: int, device: str) -> Endpoint:
        for endpoint in self.endpoints:
            if endpoint[0] != asn or endpoint[1] != device:
                return endpoint
        raise KeyError(f"{asn}.{device} not on this wire")


@dataclass
class HijackRecord:
    attacker_asn: int
    victim_prefix: Prefix
    injected: tuple[Prefix, ...]


@dataclass
class Network:
    spec: TopologySpec
    plan: AddressPlan
    devices: dict[tuple[int, str], DeviceState] = field(default_factory=dict)
    wires: list[Wire] = field(default_factory=list)
    port_map: dict[Endpoint, int] = field(default_factory=dict)
    failed_devices: set[tuple[int, str]] = field(default_factory=set)
    hijacks: list[HijackRecord] = field(default_factory=list)
    generation: int = 0
    # populated by converge_network
    igp: dict = field(default_factory=dict)
    sessions: list = field(default_factory=list)
    bgp_ribs: dict = field(default_factory=dict)
    fibs: dict = field(default_factory=dict)
    last_report: object = None

    def __post_init__(self) -> None:
        self._owners: dict[int, tuple[int, str]] | None = None
        self._owners_gen = -1

    def device(self, asn: int, name: str) -> DeviceState:
        return self.devices[(asn, name)]

    def wire_at(self, asn: int, device: str, ifname: str) -> Wire | None:
        index = self.port_map.get((asn, device, ifname))
        return None if index is None else self.wires[index]

    def endpoint_up(self, endpoint: Endpoint) -> bool:
        """Device alive and the attached interface not shut down."""
        asn, device, ifname = endpoint
        if (asn, device) in self.failed_devices:
            return False
        interface = self.devices[(asn, device)].interfaces.get(ifname)
        return interface is not None and interface.up

    def wire_up(self, wire: Wire) -> bool:
        """Point-to-point wires need both ends healthy; shared IXP wires are
        judged per endpoint pair, so only the wire itself counts here."""
        if not wire.up:
            return False
        if wire.kind == "ixp":
            return True
        return all(self.endpoint_up(endpoint) for endpoint in wire.endpoints)

    def device_up(self, asn: int, name: str) -> bool:
        return (asn, name) not in self.failed_devices

    def routers_of(self, asn: int) -> list[str]:
        owner = self.spec.as_by_number(asn)
        return list(owner.l3_template.routers) if owner else []

    def address_owner(self, addr: int) -> tuple[int, str] | None:
        """Device owning `addr` on any configured interface."""
        return self._owner_index().get(addr)

    def _owner_index(self) -> dict[int, tuple[int, str]]:
        if self._owners is None or self._owners_gen != self.generation:
            owners: dict[int, tuple[int, str]] = {}
            for key in sorted(self.devices):
                state = self.devices[key]
                for interface in state.interfaces.values():
                    if interface.address is not None:
                        owners.setdefault(interface.address[0], key)
            self._owners = owners
            self._owners_gen = self.generation
        return self._owners

    def invalidate_caches(self) -> None:
        self._owners = None

    def find_inter_wire(self, a: tuple[int, str], b: tuple[int, str]) -> Wire | None:
        """First inter-AS or intra-AS wire joining the two named devices."""
        for wire in self.wires:
            if wire.kind not in ("inter", "intra"):
                continue
            devs = {(asn, dev) for asn, dev, _ in wire.endpoints}
            if devs == {a, b}:
                return wire
        return None


def _add_wire(network: Network, wire: Wire) -> None:
    index = len(network.wires)
    network.wires.append(wire)
    for endpoint in wire.endpoints:
        network.port_map[endpoint] = index


def _new_device(network: Network, kind: str, asn: int, name: str) -> DeviceState:
    state = DeviceState(kind=kind, asn=asn, name=name)
    network.devices[(asn, name)] = state
    return state


def instantiate(spec: TopologySpec, configure: bool = True) -> Network:
    """Create all devices and wires; auto-configured ASes and route servers
    receive their reference configuration unless `configure` is false."""
    violations = validate(spec)
    if violations:
        summary = "; ".join(f"{v.code}: {v.message}" for v in violations[:5])
        raise ValueError(f"invalid topology: {summary}")
    network = Network(spec=spec, plan=allocate_addresses(spec))

    for asys in spec.ases:
        asn = asys.asn
        l3 = asys.l3_template
        for router in l3.routers:
            state = _new_device(network, "router", asn, router)
            state.interface("lo")
        for a, b, cost, delay in l3.intra_links:
            network.device(asn, a).interface(f"port_{b}")
            network.device(asn, b).interface(f"port_{a}")
            _add_wire(network, Wire(
                kind="intra", delay_us=delay, default_cost=cost,
                endpoints=((asn, a, f"port_{b}"), (asn, b, f"port_{a}"))))
        if l3.hosts:
            for router in l3.routers:
                network.device(asn, router).interface("host")
                host = _new_device(network, "host", asn, f"host_{router}")
                host.interface("eth0")
                _add_wire(network, Wire(
                    kind="host",
                    endpoints=((asn, router, "host"), (asn, f"host_{router}", "eth0"))))
        l2 = asys.l2_template
        if not l2.empty():
            for switch, _prio in l2.switches:
                _new_device(network, "switch", asn, switch)
            for a, b in l2.switch_links:
                network.device(asn, a).interface(f"port_{b}")
                network.device(asn, b).interface(f"port_{a}")
                _add_wire(network, Wire(
                    kind="l2",
                    endpoints=((asn, a, f"port_{b}"), (asn, b, f"port_{a}"))))
            for switch, host, _vlan in l2.host_ports:
                network.device(asn, switch).interface(f"port_{host}")
                state = _new_device(network, "host", asn, host)
                state.interface("eth0")
                _add_wire(network, Wire(
                    kind="l2host",
                    endpoints=((asn, switch, f"port_{host}"), (asn, host, "eth0"))))
            gw_switch, gw_router = l2.gateway
            network.device(asn, gw_switch).interface(f"port_{gw_router}")
            network.device(asn, gw_router).interface("l2")
            _add_wire(network, Wire(
                kind="gateway",
                endpoints=((asn, gw_switch, f"port_{gw_router}"), (asn, gw_router, "l2"))))

    pair_counter: dict[tuple[int, int], int] = {}
    for index, link in enumerate(spec.inter_as_links):
        (a_asn, a_router), (b_asn, b_router) = link.a, link.b
        pair = (min(a_asn, b_asn), max(a_asn, b_asn))
        k = pair_counter.get(pair, 0)
        pair_counter[pair] = k + 1
        suffix = "" if k == 0 else f"_{k + 1}"
        a_if, b_if = f"ext_{b_asn}{suffix}", f"ext_{a_asn}{suffix}"
        network.device(a_asn, a_router).interface(a_if)
        network.device(b_asn, b_router).interface(b_if)
        _add_wire(network, Wire(
            kind="inter", delay_us=link.delay_us, spec_index=index,
            up=link.admin_state == "up",
            endpoints=((a_asn, a_router, a_if), (b_asn, b_router, b_if))))

    for ixp in spec.ixps:
        rs = _new_device(network, "route_server", ixp.ixp_id, "RS")
        rs.interface("lan")
        endpoints: list[Endpoint] = [(ixp.ixp_id, "RS", "lan")]
        for member_asn, member_router in ixp.members:
            ifname = f"ixp_{ixp.ixp_id}"
            network.device(member_asn, member_router).interface(ifname)
            endpoints.append((member_asn, member_router, ifname))
        _add_wire(network, Wire(
            kind="ixp", delay_us=ixp.delay_us, endpoints=tuple(endpoints)))

    if configure:
        from .refconfig import apply_reference_configs, configure_route_servers
        configure_route_servers(network)
        for asys in spec.ases:
            if asys.auto_configured:
                apply_reference_configs(network, asys.asn)
    network.invalidate_caches()
    return network


def connected_subnet(state: DeviceState, ifname: str) -> Prefix | None:
    interface = state.interfaces.get(ifname)
    if interface is None or interface.address is None or not interface.up:
        return None
    addr, plen = interface.address
    return addr & mask_of(plen), plen
