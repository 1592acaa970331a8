"""Interactive operator shell bound to a single AS.

The session starts in a lobby where `goto <device>` opens one of the AS's
own devices. Inside a device, lines are configuration commands applied
live, `show` renders the usual views, and `exit` climbs back out. Devices
of other ASes are off limits; naming one raises PermissionDenied.

    goto ZURI
    interface lo
    ip address 3.150.0.1/32
    exit
    converge
    matrix
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

from .confcli import TOP, apply_line
from .monitor import connectivity_matrix, looking_glass
from .network import Network
from .runtime import converge_network


class PermissionDenied(Exception):
    """A session tried to address a device outside its own AS."""


SHOW_VIEWS = {
    "ip bgp": "bgp",
    "ip route": "route",
    "route": "route",
    "bgp": "bgp",
    "spanning-tree": "spanning-tree",
    "running-config": "running-config",
    "run": "running-config",
}

_CONTEXT_TAGS = {
    "interface": "config-if",
    "router": "config-router",
    "route-map": "config-route-map",
}


@dataclass
class Session:
    """One operator's view of the network, scoped to an AS."""

    network: Network
    asn: int
    device: str | None = None
    context: tuple = TOP
    closed: bool = False
    dirty: bool = False  # configuration changed since the last converge
    log: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.network.spec.as_by_number(self.asn) is None:
            raise KeyError(f"no AS {self.asn} in this network")

    def prompt(self) -> str:
        if self.device is None:
            return f"as{self.asn}> "
        tag = ""
        if self.context != TOP:
            tag = f"({_CONTEXT_TAGS.get(self.context[0], 'config')})"
        return f"as{self.asn}:{self.device}{tag}> "

    def handle_line(self, raw: str) -> str:
        """Process one input line and return the text to display."""
        line = raw.strip()
        if not line or line.startswith("#"):
            return ""
        tokens = line.split()
        verb = tokens[0]

        if verb == "exit":
            if self.device is not None and self.context != TOP:
                self.context = TOP
            elif self.device is not None:
                self.device = None
            else:
                self.closed = True
            return ""
        if verb == "goto":
            return self._goto(tokens[1:])
        if verb == "show":
            return self._show(tokens[1:])
        if verb == "converge":
            return self._converge()
        if verb == "matrix":
            return self._matrix()
        if self.device is not None:
            return self._configure(raw)
        return f"% unknown command {verb!r} (try goto, show, converge, matrix, exit)"

    def _resolve(self, name: str) -> tuple[int, str]:
        asn_str, sep, rest = name.partition(".")
        if sep and asn_str.isdigit():
            target_asn, device = int(asn_str), rest
            if target_asn != self.asn:
                raise PermissionDenied(
                    f"as{self.asn} session cannot address AS {target_asn}")
            return target_asn, device
        return self.asn, name

    def _goto(self, args: list[str]) -> str:
        if len(args) != 1:
            return "% goto takes one device name"
        asn, device = self._resolve(args[0])
        if (asn, device) not in self.network.devices:
            owners = sorted(a for a, d in self.network.devices if d == device)
            if owners:
                raise PermissionDenied(
                    f"device {device!r} belongs to AS {owners[0]}, "
                    f"not AS {self.asn}")
            return f"% no such device {device!r} in AS {self.asn}"
        self.device = device
        self.context = TOP
        return ""

    def _show(self, args: list[str]) -> str:
        if self.device is None:
            return "% goto a device first"
        key = " ".join(args)
        view = SHOW_VIEWS.get(key)
        if view is None:
            options = ", ".join(sorted(set(SHOW_VIEWS)))
            return f"% unknown view {key!r} (one of: {options})"
        return looking_glass(self.network, self.asn, self.device, view)

    def _configure(self, raw: str) -> str:
        state = self.network.devices[(self.asn, self.device)]
        self.context, diag = apply_line(state, raw, self.context)
        if diag is not None:
            return f"% {diag.severity}: {diag.message}"
        self.dirty = True
        self.log.append(f"{self.asn}.{self.device}: {raw.strip()}")
        return ""

    def _converge(self) -> str:
        report = converge_network(self.network)
        self.dirty = False
        if not report.converged:
            return f"% did not converge after {report.rounds} rounds"
        return f"converged in {report.rounds} rounds"

    def _matrix(self) -> str:
        matrix = connectivity_matrix(self.network)
        i = matrix.asns.index(self.asn)

        def fmt(cell) -> str:
            return "ok" if cell.green else "FAIL"

        row = " ".join(f"{asn}:{fmt(matrix.cells[i][j])}"
                       for j, asn in enumerate(matrix.asns))
        column = " ".join(f"{asn}:{fmt(matrix.cells[j][i])}"
                          for j, asn in enumerate(matrix.asns))
        lines = [f"as{self.asn} -> {row}", f"-> as{self.asn} {column}"]
        if self.dirty:
            lines.append("(configuration changed, run converge to apply)")
        return "\n".join(lines)


def repl(network: Network, asn: int, stdin=None, stdout=None) -> Session:
    """Line loop around a session; PermissionDenied prints instead of raising."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    session = Session(network, asn)
    while not session.closed:
        stdout.write(session.prompt())
        stdout.flush()
        line = stdin.readline()
        if not line:
            break
        try:
            output = session.handle_line(line)
        except PermissionDenied as err:
            output = f"% permission denied: {err}"
        if output:
            stdout.write(output + "\n")
    return session
