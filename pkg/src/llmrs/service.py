"""HTTP recommendation service on the stdlib http.server.

The engine snapshot is immutable and queries are pure, so one engine is
shared across the threading server without locks. Intended for local and
internal use; no TLS or auth.
"""

from __future__ import annotations

import json
import re
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import LlmrsError
from .rank import QueryRequest

_PRODUCT_PATH = re.compile(r"^/v1/products/([^/]+)$")

_MAX_BODY = 1 << 20  # requests are tiny; anything bigger is abuse


def _query_request(payload: dict) -> QueryRequest:
    if not isinstance(payload, dict):
        raise ValueError("request body must be a JSON object")
    constraints = payload.get("constraints") or {}
    if not isinstance(constraints, dict):
        raise ValueError("constraints must be a JSON object")
    known = {"max_price", "max_license_fee", "max_implementation_cost",
             "max_maintenance_cost"}
    unknown = set(constraints) - known
    if unknown:
        raise ValueError(f"unknown constraint(s): {', '.join(sorted(unknown))}")

    def money(name):
        value = constraints.get(name)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{name} must be a number")
        return float(value)

    request = QueryRequest(
        text=payload.get("text", ""),
        max_price=money("max_price"),
        max_license_fee=money("max_license_fee"),
        max_implementation_cost=money("max_implementation_cost"),
        max_maintenance_cost=money("max_maintenance_cost"),
        top_k=payload.get("top_k", 5),
        preselect_m=payload.get("preselect_m", 50),
        ranker=payload.get("ranker", "llmrs"),
    )
    request.validate()
    return request


class _Handler(BaseHTTPRequestHandler):
    engine = None  # set by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):  # keep test output clean
        pass

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/healthz":
            self._send(200, {"status": "ok",
                             "products": len(self.engine.catalog.products)})
            return
        match = _PRODUCT_PATH.match(self.path)
        if match:
            product = self.engine.product(match.group(1))
            if product is None:
                self._send(404, {"error": f"no product {match.group(1)!r}"})
                return
            self._send(200, vars(product))
            return
        self._send(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/v1/query":
            self._send(404, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
        except ValueError:
            self._send(400, {"error": "bad Content-Length"})
            return
        if length > _MAX_BODY:
            self._send(413, {"error": "request body too large"})
            return
        raw = self.rfile.read(length)
        try:
            payload = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            self._send(400, {"error": "request body is not valid JSON"})
            return
        try:
            request = _query_request(payload)
        except ValueError as exc:
            self._send(400, {"error": str(exc)})
            return
        try:
            result = self.engine.query(request)
        except LlmrsError as exc:
            self._send(500, {"error": str(exc)})
            return
        self._send(200, result.as_dict())


def make_server(engine, port: int, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    """Bind the service; caller drives serve_forever/shutdown."""
    handler = type("BoundHandler", (_Handler,), {"engine": engine})
    return ThreadingHTTPServer((host, port), handler)


def serve(engine, port: int, host: str = "127.0.0.1") -> None:
    server = make_server(engine, port, host)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
