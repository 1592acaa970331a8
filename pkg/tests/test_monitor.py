"""Connectivity matrix, fault hints, looking glass, and AS-level paths."""

import json

import pytest

from minisim.addrs import parse_prefix
from minisim.bgp import inject_hijack, withdraw_prefix
from minisim.confcli import DeviceState, apply_script, load_config_script
from minisim.dataplane import trace
from minisim.monitor import (Cell, ConnectivityMatrix, as_path_between,
                             connectivity_matrix, diagnose, looking_glass,
                             probe_host, probe_target)
from minisim.network import instantiate
from minisim.refconfig import apply_reference_configs
from minisim.runtime import converge_network
from minisim.topology import generate_reference_topology


def bare_ladder():
    """Reference topology with nothing configured anywhere."""
    spec = generate_reference_topology(1, 6)
    for asys in spec.ases:
        asys.auto_configured = False
    return instantiate(spec)


# --- matrix ------------------------------------------------------------------


def test_matrix_all_green(ladder6):
    matrix = connectivity_matrix(ladder6)
    assert matrix.asns == [1, 2, 3, 4, 5, 6]
    assert all(cell.green for row in matrix.cells for cell in row)
    assert matrix.round == ladder6.generation


def test_matrix_json_shape(ladder6):
    payload = connectivity_matrix(ladder6).to_json()
    assert sorted(payload) == ["asns", "cells", "round"]
    assert payload["asns"] == [1, 2, 3, 4, 5, 6]
    assert payload["cells"] == [["g"] * 6 for _ in range(6)]
    assert isinstance(payload["round"], int)
    json.dumps(payload)  # must be serializable as-is


def test_matrix_agrees_with_traces(ladder6):
    matrix = connectivity_matrix(ladder6)
    for src in (1, 3, 6):
        for dst in (2, 3, 5):
            walked = trace(ladder6, probe_host(ladder6, src),
                           probe_target(ladder6, dst, diagonal=src == dst))
            assert matrix.cell(src, dst).green == walked.delivered


def test_blank_as_goes_red(make_ladder):
    network = bare_ladder()
    for asn in (1, 2, 3, 5, 6):
        apply_reference_configs(network, asn)
    converge_network(network)
    matrix = connectivity_matrix(network)
    others = [1, 2, 3, 5, 6]
    for asn in others:
        assert not matrix.cell(asn, 4).green
        assert not matrix.cell(4, asn).green
    assert not matrix.cell(4, 4).green
    for a in others:
        for b in others:
            assert matrix.cell(a, b).green, (a, b)


def test_phase_one_turns_diagonal_green():
    network = bare_ladder()
    for asn in (1, 2, 3, 4, 5, 6):
        apply_reference_configs(network, asn, phase=1)
    converge_network(network)
    matrix = connectivity_matrix(network)
    for asn in matrix.asns:
        assert matrix.cell(asn, asn).green, asn
    off = [(a, b) for a in matrix.asns for b in matrix.asns if a != b]
    assert all(not matrix.cell(a, b).green for a, b in off)
    # finishing the configuration turns everything green
    for asn in (1, 2, 3, 4, 5, 6):
        apply_reference_configs(network, asn, phase=2)
    converge_network(network)
    matrix = connectivity_matrix(network)
    assert all(cell.green for row in matrix.cells for cell in row)


# --- diagnosis ---------------------------------------------------------------


def synthetic(asns, red):
    cells = [[Cell(status="r" if (a, b) in red else "g",
                   outcome="NoRoute" if (a, b) in red else "Delivered")
              for b in asns] for a in asns]
    return ConnectivityMatrix(asns=list(asns), cells=cells, round=1)


def test_diagnose_all_green_is_empty():
    assert diagnose(synthetic([1, 2, 3], set())).findings == []


def test_diagnose_red_diagonal():
    result = diagnose(synthetic([4, 5, 6], {(5, 5)}))
    assert [(f.asn, f.code) for f in result.findings] == [
        (5, "IntraDomainFault")]
    assert result.findings[0].cells == [(5, 5)]


def test_diagnose_red_column():
    red = {(a, 7) for a in (5, 6, 8)}
    result = diagnose(synthetic([5, 6, 7, 8], red))
    assert [(f.asn, f.code) for f in result.findings] == [(7, "MissingEbgp")]
    assert set(result.findings[0].cells) == red


def test_diagnose_asymmetry():
    result = diagnose(synthetic([1, 2, 3], {(2, 1)}))
    assert [(f.asn, f.code) for f in result.findings] == [
        (2, "PolicyAsymmetry")]
    assert result.findings[0].cells == [(2, 1)]


def test_diagnose_column_suppresses_asymmetry():
    # column 2 fully red: the per-cell asymmetry hints would be noise
    red = {(1, 2), (3, 2)}
    result = diagnose(synthetic([1, 2, 3], red))
    assert [(f.asn, f.code) for f in result.findings] == [(2, "MissingEbgp")]


def test_missing_ebgp_detected_end_to_end():
    network = bare_ladder()
    for asn in (1, 2, 3, 4, 5, 6):
        apply_reference_configs(network, asn,
                                phase=1 if asn == 4 else None)
    converge_network(network)
    result = diagnose(connectivity_matrix(network))
    assert [(f.asn, f.code) for f in result.findings] == [(4, "MissingEbgp")]


def test_intra_fault_detected_end_to_end(make_ladder):
    network = make_ladder()
    network.failed_devices.update({(3, "MUNI"), (3, "LYON")})
    network.invalidate_caches()
    converge_network(network)
    result = diagnose(connectivity_matrix(network))
    assert (3, "IntraDomainFault") in [(f.asn, f.code)
                                       for f in result.findings]


# --- looking glass -----------------------------------------------------------


def test_route_view_codes(ladder6):
    text = looking_glass(ladder6, 3, "ZURI", "route")
    assert "C  3.0.200.0/25 is directly connected, l2.10" in text
    assert "S  3.0.0.0/8 [1/0] unreachable (blackhole)" in text
    assert "[110/" in text  # intra-domain routes present
    # iBGP next hops are shown resolved through the IGP, one line per path
    assert "B  5.0.0.0/8 [200/0] via 3.0.3.1, port_BASE" in text
    assert "B  5.0.0.0/8 [200/0] via 3.0.5.1, port_GENE" in text


def test_bgp_view_lists_best_routes(ladder6):
    text = looking_glass(ladder6, 3, "ZURI", "bgp")
    assert text.startswith("BGP table of 3.ZURI, local AS 3")
    lines = [l for l in text.splitlines() if l.startswith(">")]
    rib = ladder6.bgp_ribs[(3, "ZURI")].loc_rib
    assert len(lines) == len(rib)
    assert any("5.0.0.0/8" in l and "179.3.5.2" in l and " 300 " in l
               for l in lines)


def test_bgp_view_on_plain_host_is_header_only(ladder6):
    text = looking_glass(ladder6, 3, "h1", "bgp")
    assert "BGP table of 3.h1" in text
    assert not [l for l in text.splitlines() if l.startswith(">")]


def test_stp_view_shows_roles(ladder6):
    root = looking_glass(ladder6, 3, "SW1", "spanning-tree")
    assert "this bridge is the root" in root
    assert "role=designated" in root
    side = looking_glass(ladder6, 3, "SW3", "spanning-tree")
    assert "root id 32768.1" in side
    lines = dict()
    for line in side.splitlines():
        parts = line.split()
        if parts and parts[0].startswith("port_"):
            lines[parts[0]] = line
    assert "role=root" in lines["port_SW2"]
    assert "role=alternate" in lines["port_SW4"]
    assert "state=blocking" in lines["port_SW4"]


def test_stp_view_on_router_is_header_only(ladder6):
    assert looking_glass(ladder6, 3, "ZURI", "spanning-tree") == \
        "Spanning tree of 3.ZURI\n"


def test_running_config_round_trip(ladder6):
    text = looking_glass(ladder6, 3, "MUNI", "running-config")
    fresh = DeviceState(kind="router", asn=3, name="MUNI")
    applied, diagnostics = apply_script(fresh, text)
    assert not [d for d in diagnostics if d.severity == "error"]
    again = looking_glass(ladder6, 3, "MUNI", "running-config")
    from minisim.confcli import render_running_config
    assert render_running_config(fresh) == again


def test_looking_glass_rejects_unknowns(ladder6):
    with pytest.raises(KeyError):
        looking_glass(ladder6, 3, "NOPE", "route")
    with pytest.raises(ValueError):
        looking_glass(ladder6, 3, "ZURI", "telemetry")


def test_looking_glass_stable_across_runs(ladder6, make_ladder):
    other = make_ladder()
    for view in ("route", "bgp", "running-config"):
        assert looking_glass(ladder6, 3, "MUNI", view) == \
            looking_glass(other, 3, "MUNI", view)


# --- AS-level paths ----------------------------------------------------------


def test_path_over_exchange(ladder6):
    view = as_path_between(ladder6, 5, 3)
    assert view.asns == [5, 3]
    assert view.labels == ["ixp"]
    assert view.valley_free and view.outcome == "Delivered"


def test_path_down_to_customer(ladder6):
    view = as_path_between(ladder6, 3, 5)
    assert view.asns == [3, 5]
    assert view.labels == ["customer"]
    assert view.valley_free


def test_path_climbs_providers_when_exchange_dies(make_ladder):
    network = make_ladder()
    network.failed_devices.add((81, "RS"))
    network.invalidate_caches()
    converge_network(network)
    view = as_path_between(network, 5, 2)
    assert view.asns[0] == 5 and view.asns[-1] == 2
    assert view.labels[0] == "provider"
    assert view.valley_free


def test_path_to_hijacked_prefix_ends_at_attacker(make_ladder):
    network = make_ladder()
    inject_hijack(network, 6, parse_prefix("5.0.0.0/8"), more_specific=True)
    converge_network(network)
    view = as_path_between(network, 2, 5)
    assert view.asns[-1] == 6
    assert view.outcome != "Delivered"


def test_path_unreachable_is_empty(make_ladder):
    network = make_ladder()
    withdraw_prefix(network, 5, parse_prefix("5.0.0.0/8"))
    converge_network(network)
    view = as_path_between(network, 1, 5)
    assert view.asns == [] and view.labels == []
    assert view.outcome == "NoRoute"


def test_route_leak_flagged_as_valley(make_ladder):
    network = make_ladder()
    # AS5 leaks everything to its lateral peer by prepending a permit-all
    # entry in front of the peer export policy
    load_config_script(network, 5, "ZURI", "route-map PEER_OUT permit 5\n")
    network.failed_devices.update({(80, "RS"), (81, "RS")})
    network.invalidate_caches()
    converge_network(network)
    view = as_path_between(network, 6, 2)
    assert view.asns[:2] == [6, 5]
    assert view.labels[0] == "peer" and "provider" in view.labels[1:]
    assert view.valley_free is False
    assert view.outcome == "Delivered"
