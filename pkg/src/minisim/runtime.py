"""One-call convergence: link state, then BGP, then forwarding tables."""

from __future__ import annotations

from . import bgp, igp
from .dataplane import build_all_fibs
from .network import Network


def converge_network(network: Network) -> "bgp.ConvergeReport":
    """Recompute every table from current device state.

    Safe to call after any configuration or failure change; each stage
    starts from scratch, so stale state never leaks across calls.
    """
    network.igp = {}
    for asn in sorted(asys.asn for asys in network.spec.ases):
        network.igp[asn] = igp.compute_igp(network, asn)
    report = bgp.converge(network)
    build_all_fibs(network)
    return report
