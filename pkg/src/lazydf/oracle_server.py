"""HTTP front end for the in-memory executor.

Exposes a catalog over the same wire contract the HTTP client speaks, so
client code, the benchmark harness, and integration tests can run without
an external database. Requests are handled sequentially; query failures
come back as HTTP 200 with an error payload (which the client passes
through as an ERROR result), while unknown paths get a plain 404.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from typing import Optional
from urllib.parse import parse_qs

from .errors import LazyDfError
from .http_client import DEFAULT_PATH
from .memory import MemoryCatalog
from .sqlpp_parser import execute_statement


class OracleServer:
    def __init__(self, catalog: Optional[MemoryCatalog] = None,
                 host: str = "127.0.0.1", port: int = 0,
                 path: str = DEFAULT_PATH):
        self.catalog = catalog if catalog is not None else MemoryCatalog()
        self.path = path
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def do_POST(self):  # noqa: N802 (stdlib naming)
                server._handle(self)

            def log_message(self, *args):
                pass

        self._httpd = HTTPServer((host, port), Handler)
        self._thread: Optional[threading.Thread] = None

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def _handle(self, request: BaseHTTPRequestHandler) -> None:
        # One connection per request: a parked keep-alive socket would
        # wedge this sequential server (and its shutdown).
        request.close_connection = True
        if request.path != self.path:
            request.send_error(404, "unknown path")
            return
        length = int(request.headers.get("Content-Length", 0))
        raw = request.rfile.read(length)
        statement = self._extract_statement(request, raw)
        if statement is None:
            self._respond(request, 400, {"status": "fatal",
                                         "errors": [{"msg": "missing statement"}]})
            return
        try:
            rows = execute_statement(self.catalog, statement)
        except LazyDfError as exc:
            self._respond(request, 200, {"status": "fatal",
                                         "errors": [{"msg": str(exc)}]})
            return
        self._respond(request, 200, {"status": "success", "results": rows})

    @staticmethod
    def _extract_statement(request, raw: bytes) -> Optional[str]:
        content_type = request.headers.get("Content-Type", "")
        try:
            if "json" in content_type:
                body = json.loads(raw.decode("utf-8"))
                value = body.get("statement") if isinstance(body, dict) else None
                return value if isinstance(value, str) else None
            fields = parse_qs(raw.decode("utf-8"))
            values = fields.get("statement")
            return values[0] if values else None
        except (ValueError, UnicodeDecodeError):
            return None

    @staticmethod
    def _respond(request, code: int, body: dict) -> None:
        payload = json.dumps(body).encode("utf-8")
        request.send_response(code)
        request.send_header("Content-Type", "application/json")
        request.send_header("Content-Length", str(len(payload)))
        request.send_header("Connection", "close")
        request.end_headers()
        request.wfile.write(payload)

    # -- lifecycle ---------------------------------------------------------------

    def start(self) -> "OracleServer":
        """Serve on a background thread; returns self for chaining."""
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "OracleServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
