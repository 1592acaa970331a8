"""Record console test fixtures from the emulator.

Run from the repository root with the package installed:

    python3 frontend/tools/record-fixtures.py

Writes the JSON and text payloads under frontend/test/fixtures/, exactly
as the HTTP endpoints would serve them: an all-green 20-AS matrix, a
red-column matrix (one AS withdrew its prefix), a matrix with a single
red cell (one AS filters one prefix), an asymmetric matrix (one AS
denies every import), a path payload, and a bgp looking-glass view.
"""

import json
from pathlib import Path

from minisim.addrs import format_ip, parse_prefix
from minisim.bgp import withdraw_prefix
from minisim.confcli import load_config_script
from minisim.monitor import as_path_between, connectivity_matrix, diagnose, \
    looking_glass
from minisim.network import instantiate
from minisim.runtime import converge_network
from minisim.topology import generate_reference_topology

OUT = Path(__file__).parent.parent / "test" / "fixtures"


def build(regions, per_region):
    spec = generate_reference_topology(regions, per_region)
    for asys in spec.ases:
        asys.auto_configured = True
    network = instantiate(spec)
    assert converge_network(network).converged
    return network


def dump(name, payload):
    (OUT / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print("wrote", name)


def snapshot(network, tag):
    matrix = connectivity_matrix(network)
    dump(f"matrix-{tag}.json", matrix.to_json())
    dump(f"diagnosis-{tag}.json", diagnose(matrix).to_json())


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    snapshot(build(2, 10), "green-20")

    ladder = build(1, 6)
    snapshot(ladder, "green-6")
    dump("path-1-5.json", as_path_between(ladder, 1, 5).to_json())
    (OUT / "lg-3-zuri-bgp.txt").write_text(looking_glass(ladder, 3, "ZURI", "bgp"))

    withdrawn = build(1, 6)
    withdraw_prefix(withdrawn, 5, parse_prefix("5.0.0.0/8"))
    assert converge_network(withdrawn).converged
    snapshot(withdrawn, "red-column")

    oneflip = build(1, 6)
    block = "\n".join(
        ["ip prefix-list BLOCK5 permit 5.0.0.0/8 le 32"]
        + [f"route-map {name} deny 5\n match ip address prefix-list BLOCK5"
           for name in ("CUSTOMER_IN", "PEER_IN", "IXP_IN")])
    for router in oneflip.spec.as_by_number(1).l3_template.routers:
        load_config_script(oneflip, 1, router, block + "\n")
    assert converge_network(oneflip).converged
    snapshot(oneflip, "one-flip")

    asym = build(1, 6)
    for router in asym.spec.as_by_number(3).l3_template.routers:
        state = asym.devices[(3, router)]
        lines = ["router bgp 3"]
        lines += [f" neighbor {format_ip(addr)} route-map DENYALL in"
                  for addr, neighbor in sorted(state.bgp.neighbors.items())
                  if neighbor.route_map_in]
        if len(lines) > 1:
            load_config_script(asym, 3, router, "\n".join(lines) + "\n")
    assert converge_network(asym).converged
    snapshot(asym, "asymmetric")


if __name__ == "__main__":
    main()
