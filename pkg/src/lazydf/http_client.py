"""HTTP client for a remote query service.

The wire contract is configuration, not code: POST {base_url}{path} with a
JSON body carrying the statement under a configurable field (default
``statement``), success being HTTP 200 with a JSON object containing a
``results`` list. The LAZYDF_ENDPOINT environment variable supplies the
base URL when none is given.

Failures map to distinct typed errors, each carrying the statement that
was sent:

* connection problems and timeouts -> :class:`TransportError`
* non-success HTTP status           -> :class:`HttpStatusError`
* unparseable or shapeless bodies   -> :class:`MalformedResponseError`

A body that parses but reports a server-side query failure is not an
exception here; it becomes an ERROR :class:`QueryResult` with the server's
message passed through.
"""

from __future__ import annotations

import os
import threading
import time
from typing import Optional

import requests

from .errors import HttpStatusError, MalformedResponseError, TransportError
from .result import QueryResult, failure, success

DEFAULT_PATH = "/query/service"
DEFAULT_TIMEOUT_SECS = 300.0
ENDPOINT_ENV_VAR = "LAZYDF_ENDPOINT"


def endpoint_from_env(explicit: Optional[str] = None) -> str:
    url = explicit or os.environ.get(ENDPOINT_ENV_VAR)
    if not url:
        raise TransportError(
            f"no endpoint configured; pass one or set {ENDPOINT_ENV_VAR}"
        )
    return url


class HttpBackend:
    """Thread-safe client; the request counter increments once per
    statement submitted, whether or not the submission succeeds."""

    def __init__(
        self,
        base_url: Optional[str] = None,
        path: str = DEFAULT_PATH,
        timeout: float = DEFAULT_TIMEOUT_SECS,
        statement_field: str = "statement",
        session: Optional[requests.Session] = None,
    ):
        self.base_url = endpoint_from_env(base_url).rstrip("/")
        self.path = path
        self.timeout = timeout
        self.statement_field = statement_field
        self._session = session if session is not None else requests.Session()
        self._count = 0
        self._lock = threading.Lock()

    @property
    def url(self) -> str:
        return f"{self.base_url}{self.path}"

    @property
    def request_count(self) -> int:
        return self._count

    def execute(self, statement: str, payload=None) -> QueryResult:
        """POST one statement; `payload` is accepted for interface parity
        with the memory backend and ignored here."""
        return http_execute(self, statement)


def http_execute(endpoint: HttpBackend, statement: str) -> QueryResult:
    if not statement:
        raise TransportError("empty statement")
    with endpoint._lock:
        endpoint._count += 1
    start = time.perf_counter()
    try:
        response = endpoint._session.post(
            endpoint.url,
            json={endpoint.statement_field: statement},
            timeout=endpoint.timeout,
        )
    except requests.exceptions.Timeout as exc:
        raise TransportError(f"request timed out: {exc}", statement) from exc
    except requests.exceptions.RequestException as exc:
        raise TransportError(f"transport failure: {exc}", statement) from exc
    elapsed = time.perf_counter() - start

    if not (200 <= response.status_code < 300):
        raise HttpStatusError(
            f"HTTP {response.status_code}: {response.reason}",
            response.status_code,
            statement,
        )

    try:
        body = response.json()
    except ValueError as exc:
        raise MalformedResponseError(
            f"response body is not JSON: {exc}", statement
        ) from exc
    if not isinstance(body, dict):
        raise MalformedResponseError("response body is not an object", statement)

    if "errors" in body or body.get("status") not in (None, "success"):
        messages = body.get("errors") or []
        if isinstance(messages, list):
            text = "; ".join(str(m.get("msg", m)) if isinstance(m, dict) else str(m)
                             for m in messages)
        else:
            text = str(messages)
        return failure(text or "server reported an error", elapsed=elapsed)

    results = body.get("results")
    if not isinstance(results, list):
        raise MalformedResponseError("response lacks a results list", statement)
    return success(results, elapsed=elapsed)
