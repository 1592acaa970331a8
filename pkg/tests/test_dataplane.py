"""Forwarding tables, longest-prefix match, traces, and pings."""

import random

import pytest

from minisim.addrs import covers, parse_ip, parse_prefix
from minisim.bgp import inject_hijack, originate_prefix, withdraw_prefix
from minisim.dataplane import FibEntry, FibNextHop, fib_lookup, ping, trace
from minisim.runtime import converge_network


def entry(network, asn, router, text):
    return network.fibs[(asn, router)].get(parse_prefix(text))


# --- table construction ------------------------------------------------------


def test_administrative_distances(ladder6):
    zuri = ladder6.fibs[(3, "ZURI")]
    vlan = entry(ladder6, 3, "ZURI", "3.0.200.0/25")
    assert vlan.proto == "connected" and vlan.ad == 0
    null = entry(ladder6, 3, "ZURI", "3.0.0.0/8")
    assert null.proto == "static" and null.ad == 1 and null.nexthops == ()
    remote_lo = entry(ladder6, 3, "ZURI", "3.150.0.8/32")
    assert remote_lo.proto == "ospf" and remote_lo.ad == 110
    assert remote_lo.metric >= 1
    # ZURI is not a border router, so external routes arrive over iBGP
    inter = entry(ladder6, 3, "ZURI", "5.0.0.0/8")
    assert inter.proto == "ibgp" and inter.ad == 200
    # at the border the same route is an eBGP one
    border = entry(ladder6, 3, "LYON", "5.0.0.0/8")
    assert border.proto == "ebgp" and border.ad == 20
    assert len(zuri) > 20


def test_lpm_prefers_specific(ladder6):
    fib = ladder6.fibs[(3, "ZURI")]
    assert fib_lookup(fib, parse_ip("3.0.200.5")).prefix == parse_prefix("3.0.200.0/25")
    # unallocated space inside the block falls to the null route
    assert fib_lookup(fib, parse_ip("3.222.1.1")).prefix == parse_prefix("3.0.0.0/8")
    assert fib_lookup(fib, parse_ip("99.1.1.1")) is None


def test_lpm_against_linear_scan(ladder6):
    fib = ladder6.fibs[(3, "MUNI")]
    rng = random.Random(7)
    addrs = [parse_ip(a) for a in
             ("3.150.0.1", "3.0.200.129", "5.101.0.1", "179.3.5.2",
              "180.81.0.2", "8.8.8.8")]
    addrs += [rng.randrange(1 << 32) for _ in range(400)]
    for addr in addrs:
        matches = [e for p, e in fib.items() if covers(p, (addr, 32))]
        expected = max(matches, key=lambda e: e.prefix[1], default=None)
        got = fib_lookup(fib, addr)
        if expected is None:
            assert got is None
        else:
            assert got.prefix[1] == expected.prefix[1]


def test_ibgp_next_hop_resolves_through_igp(ladder6):
    inter = entry(ladder6, 3, "ZURI", "5.0.0.0/8")
    # next hop sits on the customer link at LYON, three hops away with
    # two equal-cost first hops
    assert {h.ifname for h in inter.nexthops} == {"port_BASE", "port_GENE"}


def test_fib_covers_all_live_routers(ladder6):
    routers = [key for key, state in ladder6.devices.items()
               if state.kind in ("router", "route_server")]
    assert set(ladder6.fibs) == set(routers)


# --- traces ------------------------------------------------------------------


def test_ecmp_split_by_flow(ladder6):
    dst = parse_ip("3.108.0.1")  # MILA's host LAN
    first = trace(ladder6, (3, "host_ZURI"), dst, flow_id=0)
    second = trace(ladder6, (3, "host_ZURI"), dst, flow_id=1)
    assert first.delivered and second.delivered
    assert {first.hops[2], second.hops[2]} == {(3, "BASE"), (3, "GENE")}
    assert first.delay_us == second.delay_us


def test_trace_crosses_exchange_directly(ladder6):
    got = trace(ladder6, (3, "h1"), parse_ip("1.101.0.1"))
    assert got.delivered
    assert (3, "VIEN") in got.hops and (1, "ZURI") in got.hops
    assert all(asn != 81 for asn, _ in got.hops)  # server stays out of band


def test_trace_from_router(ladder6):
    got = trace(ladder6, (3, "ZURI"), parse_ip("3.150.0.8"))
    assert got.delivered and got.hops[-1] == (3, "MILA")


def test_trace_to_unallocated_space_blackholes(ladder6):
    got = trace(ladder6, (3, "host_MUNI"), parse_ip("5.99.99.99"))
    assert got.outcome == "NoRoute"
    assert got.failed_at == (5, "ZURI")  # dies at the announcing border


def test_ttl_runs_out(ladder6):
    got = trace(ladder6, (3, "host_ZURI"), parse_ip("6.101.0.1"), ttl=3)
    assert got.outcome == "TtlExceeded"
    assert len(got.hops) >= 3


def test_forwarding_loop_detected(make_ladder):
    network = make_ladder()
    prefix = parse_prefix("6.0.0.0/8")
    # plant a two-router ping-pong in the forwarding tables
    network.fibs[(3, "ZURI")][prefix] = FibEntry(
        prefix=prefix, proto="static",
        nexthops=(FibNextHop(ifname="port_BASE"),))
    network.fibs[(3, "BASE")][prefix] = FibEntry(
        prefix=prefix, proto="static",
        nexthops=(FibNextHop(ifname="port_ZURI"),))
    got = trace(network, (3, "host_ZURI"), parse_ip("6.101.0.1"))
    assert got.outcome == "Loop"


def test_stale_fib_hits_dead_link(make_ladder):
    network = make_ladder()
    wire = network.find_inter_wire((3, "LYON"), (5, "ZURI"))
    wire.up = False  # control plane has not seen it yet
    got = trace(network, (3, "host_MUNI"), parse_ip("5.101.0.1"))
    assert got.outcome == "LinkDown"
    assert got.failed_at == (3, "LYON")
    converge_network(network)
    healed = trace(network, (3, "host_MUNI"), parse_ip("5.101.0.1"))
    assert healed.delivered
    assert (3, "VIEN") in healed.hops  # around over the exchange
    assert (3, "LYON") not in healed.hops


def test_failed_router_routed_around(make_ladder):
    network = make_ladder()
    network.failed_devices.add((3, "MUNI"))
    network.invalidate_caches()
    converge_network(network)
    assert (3, "MUNI") not in network.fibs
    got = trace(network, (3, "host_ZURI"), parse_ip("3.106.0.1"))  # LYON's LAN
    assert got.delivered
    assert (3, "MUNI") not in got.hops


# --- switched segment interaction --------------------------------------------


def test_same_vlan_stays_in_l2(ladder6):
    got = ping(ladder6, (3, "h1"), (3, "h4"))
    assert got.success and got.rtt_us == 0
    assert got.forward.hops == [(3, "h1"), (3, "h4")]


def test_cross_vlan_goes_through_gateway(ladder6):
    got = ping(ladder6, (3, "h1"), (3, "h2"))
    assert got.success
    assert got.forward.hops == [(3, "h1"), (3, "ZURI"), (3, "h2")]


def test_remote_host_reaches_vlan_host(ladder6):
    got = ping(ladder6, (5, "host_ZURI"), (3, "h5"))
    assert got.success
    assert got.forward.hops[-2:] == [(3, "ZURI"), (3, "h5")]


# --- pings -------------------------------------------------------------------


def test_ping_self_is_instant(ladder6):
    got = ping(ladder6, (3, "h1"), (3, "h1"))
    assert got.success and got.rtt_us == 0


def test_cross_as_rtt_sums_both_directions(ladder6):
    got = ping(ladder6, (3, "host_MUNI"), (5, "host_ZURI"))
    assert got.success
    # one intra hop and the customer link, each way
    assert got.rtt_us == 2 * (1000 + 2500)


def test_asymmetric_paths_allowed(ladder6):
    # AS3 reaches AS6 over its direct customer link; AS6 answers over the
    # exchange, preferring it to its provider
    got = ping(ladder6, (3, "h1"), (6, "host_ZURI"))
    assert got.success
    assert (3, "MILA") in got.forward.hops
    assert (3, "VIEN") in got.reverse.hops
    assert got.rtt_us == got.forward.delay_us + got.reverse.delay_us


def test_intra_as_full_reachability(ladder6):
    hosts = sorted(name for (asn, name), state in ladder6.devices.items()
                   if asn == 3 and state.kind == "host")
    assert len(hosts) == 16
    for src in hosts:
        for dst in hosts:
            got = ping(ladder6, (3, src), (3, dst))
            assert got.success, (src, dst, got.forward.outcome)


def test_mesh_all_green(ladder6):
    # every AS has a ZURI router with a probe host on its LAN
    asns = sorted({asn for (asn, name) in ladder6.devices
                   if name == "host_ZURI"})
    assert len(asns) == 6
    for a in asns:
        for b in asns:
            got = ping(ladder6, (a, "host_ZURI"), (b, "host_ZURI"))
            assert got.success, (a, b)


# --- hijack on the wire -------------------------------------------------------


def test_more_specific_hijack_redirects_traffic(make_ladder):
    network = make_ladder()
    before = trace(network, (2, "host_ZURI"), parse_ip("5.101.0.1"))
    assert before.delivered and before.hops[-1] == (5, "host_ZURI")
    inject_hijack(network, 6, parse_prefix("5.0.0.0/8"), more_specific=True)
    converge_network(network)
    got = trace(network, (2, "host_ZURI"), parse_ip("5.101.0.1"))
    assert got.outcome == "NoRoute"
    assert got.failed_at == (6, "ZURI")  # swallowed by the attacker


def test_victim_mitigates_with_more_specifics(make_ladder):
    network = make_ladder()
    inject_hijack(network, 6, parse_prefix("5.0.0.0/8"), more_specific=True)
    for half in ("5.0.0.0/9", "5.128.0.0/9"):
        originate_prefix(network, 5, parse_prefix(half))
    converge_network(network)
    for asn in (1, 2, 3, 4):
        probe = "host_ZURI"
        got = trace(network, (asn, probe), parse_ip("5.101.0.1"))
        assert got.delivered, (asn, got.outcome, got.failed_at)
        assert got.hops[-1] == (5, "host_ZURI")


def test_withdrawn_prefix_unreachable(make_ladder):
    network = make_ladder()
    withdraw_prefix(network, 5, parse_prefix("5.0.0.0/8"))
    converge_network(network)
    got = trace(network, (1, "host_ZURI"), parse_ip("5.101.0.1"))
    assert got.outcome == "NoRoute"
