"""Deterministic control-plane emulator for classroom mini-Internets.

Builds multi-AS topologies, applies router/switch/host configuration
through a vtysh-like command language, computes L2/IGP/BGP state to a
fixed point, simulates forwarding, and exposes the operator tooling
(looking glass, connectivity matrix, grading, scenarios) over a CLI,
a session shell and an HTTP API.
"""

__version__ = "0.1.0"
