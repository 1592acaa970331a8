"""HTTP face of the emulator for consoles, scripts, and the web UI.

Read endpoints are open and always answer from the latest converged
snapshot. Mutations need a bearer token: each AS gets its own, which only
unlocks that AS's devices, and an instructor token unlocks everything
including scenario events. One writer runs at a time; it mutates a copy
of the network, converges it, and swaps it in, so readers never see a
half-converged table and never wait for a converge to finish.

    GET  /matrix                     connectivity grid
    GET  /matrix/diagnosis           per-AS fault findings
    GET  /lg/{asn}/{device}/{view}   looking-glass text
    GET  /path?src=&dst=             AS-level forwarding path
    GET  /topology                   nodes and edges for drawing
    POST /as/{asn}/device/{dev}/config   config script (text body)
    POST /event                      scenario event (instructor only)

Mutating calls converge automatically; pass ?defer=1 to batch several and
settle them with the next undeferred call or a {"type": "converge"} event.
"""

from __future__ import annotations

import copy
import secrets
import threading

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from .addrs import parse_prefix
from .bgp import ConvergeReport, inject_hijack, withdraw_prefix
from .confcli import load_config_script
from .grading import parse_rubric, run_rubric
from .monitor import VIEWS, as_path_between, connectivity_matrix, diagnose, \
    looking_glass
from .network import Network
from .runtime import converge_network
from .topology import TopologySpec


def generate_tokens(spec: TopologySpec) -> tuple[dict[int, str], str]:
    """One secret per AS plus the instructor's."""
    tokens = {asys.asn: secrets.token_hex(8) for asys in spec.ases}
    return tokens, secrets.token_hex(8)


def topology_json(spec: TopologySpec) -> dict:
    ases = []
    for asys in sorted(spec.ases, key=lambda a: a.asn):
        ases.append({
            "asn": asys.asn,
            "role": asys.role,
            "region": asys.region,
            "routers": list(asys.l3_template.routers),
            "switches": [name for name, _ in asys.l2_template.switches],
            "hosts": ([f"host_{r}" for r in asys.l3_template.routers]
                      + [host for _, host, _ in asys.l2_template.host_ports]),
        })
    links = []
    for link in spec.inter_as_links:
        provider = link.provider_asn()
        if provider is None:
            links.append({"kind": "peer", "a": link.a[0], "b": link.b[0],
                          "a_router": link.a[1], "b_router": link.b[1]})
        else:
            customer = link.b[0] if provider == link.a[0] else link.a[0]
            provider_router = link.a[1] if provider == link.a[0] else link.b[1]
            customer_router = link.b[1] if provider == link.a[0] else link.a[1]
            links.append({"kind": "transit",
                          "provider": provider, "customer": customer,
                          "provider_router": provider_router,
                          "customer_router": customer_router})
    ixps = [{"id": ixp.ixp_id,
             "members": [{"asn": asn, "router": router}
                         for asn, router in ixp.members]}
            for ixp in spec.ixps]
    return {"ases": ases, "links": links, "ixps": ixps}


class Service:
    """Holds the published snapshot and serializes writers."""

    def __init__(self, network: Network, tokens: dict[int, str],
                 instructor_token: str, refresh_ms: int = 0):
        self.tokens = dict(tokens)
        self.instructor_token = instructor_token
        self.refresh_ms = refresh_ms
        self._lock = threading.Lock()
        self._pending: Network | None = None
        self._stop = threading.Event()
        self._refresher: threading.Thread | None = None
        report = converge_network(network)
        self._publish(network, report)
        self.topology = topology_json(network.spec)
        if refresh_ms > 0:
            self._refresher = threading.Thread(target=self._refresh_loop,
                                               daemon=True)
            self._refresher.start()

    # -- read side ---------------------------------------------------------

    def _publish(self, network: Network, report: ConvergeReport) -> None:
        matrix = connectivity_matrix(network)
        self.matrix_json = matrix.to_json()
        self.diagnosis_json = diagnose(matrix).to_json()
        self.last_report = report
        self.published = network

    def _refresh_loop(self) -> None:
        while not self._stop.wait(self.refresh_ms / 1000):
            with self._lock:
                matrix = connectivity_matrix(self.published)
                self.matrix_json = matrix.to_json()
                self.diagnosis_json = diagnose(matrix).to_json()

    def stop(self) -> None:
        self._stop.set()
        if self._refresher is not None:
            self._refresher.join(timeout=1)

    # -- write side --------------------------------------------------------

    def mutate(self, fn, defer: bool = False):
        """Run fn on a private copy; publish the converged result.

        With defer the copy is parked instead, invisible to readers, and
        picked up again by the next mutation.
        """
        with self._lock:
            network = self._pending if self._pending is not None \
                else copy.deepcopy(self.published)
            result = fn(network)
            if defer:
                self._pending = network
                return result, None
            report = converge_network(network)
            self._publish(network, report)
            self._pending = None
            return result, report

    def settle(self) -> ConvergeReport:
        """Converge and publish whatever is parked."""
        with self._lock:
            network = self._pending if self._pending is not None \
                else self.published
            report = converge_network(network)
            self._publish(network, report)
            self._pending = None
            return report

    # -- auth --------------------------------------------------------------

    def authorize(self, request: Request, asn: int | None) -> None:
        header = request.headers.get("authorization", "")
        scheme, _, token = header.partition(" ")
        if scheme.lower() != "bearer" or not token:
            raise HTTPException(401, "bearer token required")
        if token == self.instructor_token:
            return
        if asn is None:
            raise HTTPException(403, "instructor token required")
        if self.tokens.get(asn) == token:
            return
        if token in self.tokens.values():
            raise HTTPException(403, f"token does not unlock AS {asn}")
        raise HTTPException(401, "unknown token")


def _endpoint(value: str) -> tuple[int, str]:
    asn_str, sep, device = value.partition(".")
    if not sep or not asn_str.isdigit() or not device:
        raise HTTPException(400, f"expected <asn>.<device>, got {value!r}")
    return int(asn_str), device


def _prefix(value) -> tuple:
    try:
        return parse_prefix(str(value))
    except ValueError as exc:
        raise HTTPException(400, str(exc))


def _convergence(report: ConvergeReport | None) -> dict:
    if report is None:
        return {"deferred": True, "converged": None, "rounds": None}
    return {"deferred": False, "converged": report.converged,
            "rounds": report.rounds}


def create_app(network: Network, tokens: dict[int, str] | None = None,
               instructor_token: str | None = None,
               refresh_ms: int = 0) -> FastAPI:
    if tokens is None or instructor_token is None:
        generated, instructor = generate_tokens(network.spec)
        tokens = tokens if tokens is not None else generated
        instructor_token = instructor_token or instructor
    service = Service(network, tokens, instructor_token, refresh_ms)
    app = FastAPI(title="mininet-sim", docs_url=None, redoc_url=None)
    app.state.service = service
    known_asns = {asys.asn for asys in network.spec.ases}

    @app.get("/matrix")
    def get_matrix() -> JSONResponse:
        return JSONResponse(service.matrix_json)

    @app.get("/matrix/diagnosis")
    def get_diagnosis() -> JSONResponse:
        return JSONResponse(service.diagnosis_json)

    @app.get("/topology")
    def get_topology() -> JSONResponse:
        return JSONResponse(service.topology)

    @app.get("/lg/{asn}/{device}/{view}")
    def get_lg(asn: int, device: str, view: str) -> PlainTextResponse:
        if view not in VIEWS:
            raise HTTPException(400, f"view must be one of {', '.join(VIEWS)}")
        try:
            text = looking_glass(service.published, asn, device, view)
        except KeyError:
            raise HTTPException(404, f"no device {asn}.{device}")
        return PlainTextResponse(text)

    @app.get("/path")
    def get_path(src: int = Query(...), dst: int = Query(...)) -> JSONResponse:
        for asn in (src, dst):
            if asn not in known_asns:
                raise HTTPException(404, f"no AS {asn}")
        return JSONResponse(as_path_between(service.published, src, dst)
                            .to_json())

    @app.post("/as/{asn}/device/{device}/config")
    async def post_config(asn: int, device: str, request: Request,
                          defer: int = 0) -> JSONResponse:
        service.authorize(request, asn)
        script = (await request.body()).decode()

        def apply(net: Network):
            try:
                return load_config_script(net, asn, device, script)
            except KeyError:
                raise HTTPException(404, f"no device {asn}.{device}")

        (applied, diagnostics), report = service.mutate(apply,
                                                        defer=bool(defer))
        body = {"applied": applied,
                "diagnostics": [{"line": d.line, "severity": d.severity,
                                 "message": d.message} for d in diagnostics]}
        body.update(_convergence(report))
        return JSONResponse(body)

    @app.post("/event")
    async def post_event(request: Request, defer: int = 0) -> JSONResponse:
        service.authorize(request, None)
        data = await request.json()
        if not isinstance(data, dict) or "type" not in data:
            raise HTTPException(400, "event body needs a 'type'")
        kind = data["type"]

        if kind == "converge":
            report = service.settle()
            return JSONResponse({"event": kind} | _convergence(report))

        if kind == "grade":
            try:
                rubric = parse_rubric(str(data.get("rubric", "")))
            except ValueError as exc:
                raise HTTPException(400, f"bad rubric: {exc}")
            if not rubric.checks:
                raise HTTPException(400, "empty rubric")
            asn = data.get("asn")
            if asn not in known_asns:
                raise HTTPException(404, f"no AS {asn}")
            report = run_rubric(service.published, asn, rubric)
            return JSONResponse({"event": kind, "asn": asn,
                                 "report": report.to_json(),
                                 "max_score": report.max_score,
                                 "passed": report.all_passed})

        mutation = _build_mutation(kind, data)
        result, report = service.mutate(mutation, defer=bool(defer))
        body = {"event": kind} | _convergence(report)
        if isinstance(result, dict):
            body |= result
        return JSONResponse(body)

    return app


def _build_mutation(kind: str, data: dict):
    """Turn an event JSON body into a function over the working network."""

    if kind in ("fail_link", "restore_link"):
        a = _endpoint(str(data.get("a", "")))
        b = _endpoint(str(data.get("b", "")))

        def toggle(net: Network):
            wire = net.find_inter_wire(a, b)
            if wire is None:
                raise HTTPException(
                    404, f"no link between {a[0]}.{a[1]} and {b[0]}.{b[1]}")
            wire.up = kind == "restore_link"
        return toggle

    if kind == "fail_router":
        asn, device = int(data.get("asn", -1)), str(data.get("device", ""))

        def fail(net: Network):
            if (asn, device) not in net.devices:
                raise HTTPException(404, f"no device {asn}.{device}")
            net.failed_devices.add((asn, device))
        return fail

    if kind == "apply_config":
        asn, device = int(data.get("asn", -1)), str(data.get("device", ""))
        script = str(data.get("script", ""))

        def apply(net: Network):
            try:
                applied, diagnostics = load_config_script(net, asn, device,
                                                          script)
            except KeyError:
                raise HTTPException(404, f"no device {asn}.{device}")
            return {"applied": applied,
                    "diagnostics": [{"line": d.line, "severity": d.severity,
                                     "message": d.message}
                                    for d in diagnostics]}
        return apply

    if kind == "hijack":
        attacker = int(data.get("attacker", -1))
        prefix = _prefix(data.get("prefix", ""))
        more_specific = bool(data.get("more_specific", False))

        def attack(net: Network):
            inject_hijack(net, attacker, prefix, more_specific=more_specific)
        return attack

    if kind == "withdraw":
        asn = int(data.get("asn", -1))
        prefix = _prefix(data.get("prefix", ""))

        def retract(net: Network):
            for record in reversed(net.hijacks):
                if record.attacker_asn == asn \
                        and record.victim_prefix == prefix:
                    for injected in record.injected:
                        withdraw_prefix(net, asn, injected)
                    return
            withdraw_prefix(net, asn, prefix)
        return retract

    raise HTTPException(400, f"unknown event type {kind!r}")


def serve(network: Network, port: int, host: str = "127.0.0.1",
          refresh_ms: int = 0, show_tokens: bool = True) -> None:
    """Run the API under uvicorn until interrupted."""
    import uvicorn

    tokens, instructor_token = generate_tokens(network.spec)
    app = create_app(network, tokens, instructor_token,
                     refresh_ms=refresh_ms)
    if show_tokens:
        for asn in sorted(tokens):
            print(f"token as{asn}: {tokens[asn]}")
        print(f"token instructor: {instructor_token}")
    uvicorn.run(app, host=host, port=port, log_level="warning")
