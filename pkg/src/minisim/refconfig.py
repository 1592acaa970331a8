"""Reference configurations.

Generates per-device scripts that fully configure an AS: addressing from the
plan, network-wide OSPF (external subnets advertised as stubs so iBGP next
hops resolve), an iBGP full mesh over loopbacks, eBGP sessions per inter-AS
link, and the customer > peer > provider policy scheme:

- Import maps set local-pref 300/200/100 (customer/peer/provider, IXP = 200)
  and tag routes with <asn>:10/20/30.
- Export maps to customers permit everything; to peers, providers, and IXPs
  they permit only customer-tagged routes plus prefixes in the OWN list
  (<asn>.0.0.0/8 le 32, so more-specific anti-hijack announcements pass).
"""

from __future__ import annotations

from .addrs import format_ip, mask_of
from .confcli import load_config_script

LOCAL_PREF = {"customer": 300, "peer": 200, "provider": 100, "ixp": 200}
COMMUNITY_TAG = {"customer": 10, "peer": 20, "provider": 30, "ixp": 20}
IN_MAP = {"customer": "CUSTOMER_IN", "peer": "PEER_IN",
          "provider": "PROV_IN", "ixp": "IXP_IN"}
OUT_MAP = {"customer": "CUSTOMER_OUT", "peer": "PEER_OUT",
           "provider": "PROV_OUT", "ixp": "IXP_OUT"}
OWN_PREFIX_LIST = "OWN"
CUSTOMER_COMMUNITY_LIST = "FROM_CUSTOMER"


def external_attachments(network, asn: int):
    """Yield (router, interface, local addr, peer addr, peer asn, relationship,
    subnet plen) for every eBGP attachment of the AS."""
    spec, plan = network.spec, network.plan
    for index, link in enumerate(spec.inter_as_links):
        a_addr, b_addr = plan.inter_link_addrs(index, link)
        for local, local_addr, remote, remote_addr in (
                (link.a, a_addr, link.b, b_addr),
                (link.b, b_addr, link.a, a_addr)):
            if local[0] != asn:
                continue
            normalized = link.normalized()
            if normalized.relationship == "peer":
                relationship = "peer"
            elif normalized.a[0] == asn:
                relationship = "customer"  # the other side is our customer
            else:
                relationship = "provider"
            yield (local[1], _ext_ifname(network, index, local[0]),
                   local_addr, remote_addr, remote[0], relationship, 30)
    for ixp in spec.ixps:
        for member_asn, member_router in ixp.members:
            if member_asn != asn:
                continue
            yield (member_router, f"ixp_{ixp.ixp_id}",
                   plan.ixp_member_addr(ixp.ixp_id, asn),
                   plan.ixp_rs_addr(ixp.ixp_id), ixp.ixp_id, "ixp", 24)


def _ext_ifname(network, link_index: int, asn: int) -> str:
    wire = network.wires[_inter_wire_index(network, link_index)]
    for endpoint_asn, _, ifname in wire.endpoints:
        if endpoint_asn == asn:
            return ifname
    raise KeyError(f"AS {asn} not on link {link_index}")


def _inter_wire_index(network, link_index: int) -> int:
    for index, wire in enumerate(network.wires):
        if wire.kind == "inter" and wire.spec_index == link_index:
            return index
    raise KeyError(f"no wire for inter-AS link {link_index}")


def generate_reference_config(network, asn: int, phase: int | None = None
                              ) -> dict[str, str]:
    """Scripts per device name. Phase 1 covers addressing, L2, and OSPF;
    phase 2 covers BGP and policy; None produces both."""
    spec, plan = network.spec, network.plan
    asys = spec.as_by_number(asn)
    if asys is None:
        raise KeyError(f"unknown AS {asn}")
    scripts: dict[str, list[str]] = {}
    want_l3 = phase in (None, 1)
    want_bgp = phase in (None, 2)

    attachments = sorted(external_attachments(network, asn))
    by_router: dict[str, list] = {}
    for attachment in attachments:
        by_router.setdefault(attachment[0], []).append(attachment)

    routers = asys.l3_template.routers
    for router in routers:
        lines: list[str] = []
        state = network.device(asn, router)
        if want_l3:
            lines += ["interface lo",
                      f" ip address {format_ip(plan.loopback_addr(asn, router))}/32"]
            for ifname in sorted(state.interfaces):
                if ifname.startswith("port_"):
                    peer = ifname[len("port_"):]
                    addr = plan.intra_link_addr(asn, router, peer)
                    lines += [f"interface {ifname}",
                              f" ip address {format_ip(addr)}/30"]
            if (asn, router) in plan.host_lans:
                lines += ["interface host",
                          f" ip address {format_ip(plan.router_lan_addr(asn, router))}/24"]
            gateway = asys.l2_template.gateway if not asys.l2_template.empty() else None
            if gateway is not None and gateway[1] == router:
                for vlan in sorted(asys.l2_template.vlans):
                    gw_addr = plan.vlan_gateway_addrs[(asn, vlan)]
                    plen = plan.vlan_subnets[asn][vlan][1]
                    lines += [f"interface l2.{vlan}",
                              f" ip address {format_ip(gw_addr)}/{plen}"]
            for attachment in by_router.get(router, []):
                _, ifname, local_addr, _, _, _, plen = attachment
                lines += [f"interface {ifname}",
                          f" ip address {format_ip(local_addr)}/{plen}"]
            lines.append("router ospf")
            lines.append(f" network {asn}.0.0.0/8 area 0")
            for attachment in by_router.get(router, []):
                _, _, local_addr, _, _, _, plen = attachment
                base = local_addr & mask_of(plen)
                lines.append(f" network {format_ip(base)}/{plen} area 0")
        if want_bgp:
            lines.append(f"router bgp {asn}")
            lines.append(f" bgp router-id {format_ip(plan.loopback_addr(asn, router))}")
            for other in routers:
                if other != router:
                    lines.append(f" neighbor {format_ip(plan.loopback_addr(asn, other))}"
                                 f" remote-as {asn}")
            for attachment in by_router.get(router, []):
                _, _, _, remote_addr, remote_asn, relationship, _ = attachment
                addr_text = format_ip(remote_addr)
                lines.append(f" neighbor {addr_text} remote-as {remote_asn}")
                lines.append(f" neighbor {addr_text} route-map {IN_MAP[relationship]} in")
                lines.append(f" neighbor {addr_text} route-map {OUT_MAP[relationship]} out")
            lines.append(f" network {asn}.0.0.0/8")
            relationships = sorted({a[5] for a in by_router.get(router, [])})
            for relationship in relationships:
                lines.append(f"route-map {IN_MAP[relationship]} permit 10")
                lines.append(f" set local-preference {LOCAL_PREF[relationship]}")
                lines.append(f" set community {asn}:{COMMUNITY_TAG[relationship]} additive")
                lines.append(f"route-map {OUT_MAP[relationship]} permit 10")
                if relationship != "customer":
                    lines.append(f" match community {CUSTOMER_COMMUNITY_LIST}")
                    lines.append(f"route-map {OUT_MAP[relationship]} permit 20")
                    lines.append(f" match ip address prefix-list {OWN_PREFIX_LIST}")
            if any(r != "customer" for r in relationships):
                lines.append(f"ip prefix-list {OWN_PREFIX_LIST} permit {asn}.0.0.0/8 le 32")
                lines.append(f"bgp community-list {CUSTOMER_COMMUNITY_LIST}"
                             f" permit {asn}:{COMMUNITY_TAG['customer']}")
        scripts[router] = lines

    if asys.l3_template.hosts and want_l3:
        for router in routers:
            scripts[f"host_{router}"] = [
                "interface eth0",
                f" ip address {format_ip(plan.host_addr(asn, router))}/24",
                f"ip route default via {format_ip(plan.router_lan_addr(asn, router))}",
            ]

    l2 = asys.l2_template
    if not l2.empty() and want_l3:
        for switch, priority in l2.switches:
            lines = [f"vlan {vlan}" for vlan in sorted(l2.vlans)]
            state = network.device(asn, switch)
            for ifname in sorted(state.interfaces):
                if not ifname.startswith("port_"):
                    continue
                target = ifname[len("port_"):]
                host_vlan = next((vlan for sw, host, vlan in l2.host_ports
                                  if sw == switch and host == target), None)
                if host_vlan is not None:
                    lines.append(f"interface {ifname} access vlan {host_vlan}")
                else:
                    lines.append(f"interface {ifname} trunk")
            if priority != 32768:
                lines.append(f"spanning-tree priority {priority}")
            scripts[switch] = lines
        for switch, host, vlan in l2.host_ports:
            _, addr = plan.vlan_host_addrs[(asn, host)]
            plen = plan.vlan_subnets[asn][vlan][1]
            scripts[host] = [
                "interface eth0",
                f" ip address {format_ip(addr)}/{plen}",
                f"ip route default via {format_ip(plan.vlan_gateway_addrs[(asn, vlan)])}",
            ]

    return {device: "\n".join(lines) + "\n"
            for device, lines in scripts.items() if lines}


def apply_reference_configs(network, asn: int, phase: int | None = None) -> None:
    for device, script in sorted(generate_reference_config(network, asn, phase).items()):
        applied, diagnostics = load_config_script(network, asn, device, script)
        errors = [d for d in diagnostics if d.severity == "error"]
        if errors:
            raise RuntimeError(
                f"reference config for {asn}.{device} failed: {errors[0].render()}")


def configure_route_servers(network) -> None:
    """Route servers always run: one LAN address plus a session per member."""
    plan = network.plan
    for ixp in network.spec.ixps:
        lines = [
            "interface lan",
            f" ip address {format_ip(plan.ixp_rs_addr(ixp.ixp_id))}/24",
            f"router bgp {ixp.ixp_id}",
            f" bgp router-id {format_ip(plan.ixp_rs_addr(ixp.ixp_id))}",
        ]
        for member_asn, _router in sorted(ixp.members):
            lines.append(f" neighbor {format_ip(plan.ixp_member_addr(ixp.ixp_id, member_asn))}"
                         f" remote-as {member_asn}")
        applied, diagnostics = load_config_script(
            network, ixp.ixp_id, "RS", "\n".join(lines) + "\n")
        errors = [d for d in diagnostics if d.severity == "error"]
        if errors:
            raise RuntimeError(
                f"route server {ixp.ixp_id} config failed: {errors[0].render()}")
