"""Bundled protocol server with a tiny deterministic model.

Lets every remote-path feature run with no external model process: the CLI
protocol checker, integration tests and demos all talk to this. The model is
a 3-nearest-neighbour vote over the supplied context, so answers depend on
the queries and are reproducible.

``FaultSpec`` switches on deliberate misbehavior for exercising the client's
validation paths.
"""

from __future__ import annotations

import socketserver
import sys
import threading
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .wire import (
    MAX_LINE_BYTES,
    OP_HELLO,
    OP_PREDICT,
    PROTOCOL_VERSION,
    dump_record,
    parse_record,
)

MODEL_NAME = "bundled-mock-3nn"
DEFAULT_MAX_CONTEXT = 4096
DEFAULT_MAX_BATCH = 32


@dataclass(frozen=True)
class FaultSpec:
    """Deliberate protocol violations for client tests."""

    wrong_id: bool = False
    bad_probs: bool = False
    delay_ms: float = 0.0
    accept_oversized_batch: bool = False


def _mock_proba(context_x, context_y, queries, n_classes: int) -> list:
    if not context_x:
        return [[1.0 / n_classes] * n_classes for _ in queries]
    features = np.asarray(context_x, dtype=np.float64)
    labels = np.asarray(context_y, dtype=np.int64)
    out = []
    for query in queries:
        q = np.asarray(query, dtype=np.float64)
        distances = np.sqrt(((features - q) ** 2).sum(axis=1))
        k = min(3, distances.shape[0])
        nearest = np.argsort(distances)[:k]
        weights = 1.0 / (distances[nearest] + 1e-12)
        votes = np.bincount(labels[nearest], weights=weights, minlength=n_classes)
        out.append((votes / votes.sum()).tolist())
    return out


class _ServerState:
    """Limits, fault switches and the request counter, transport-agnostic."""

    def __init__(self, max_context: int, max_batch: int, fault: Optional[FaultSpec]):
        self.max_context = max_context
        self.max_batch = max_batch
        self.fault = fault or FaultSpec()
        self.request_count = 0
        self._lock = threading.Lock()

    def count_request(self) -> None:
        with self._lock:
            self.request_count += 1


class _Session:
    """Per-connection protocol state machine; shared by TCP and stdio."""

    def __init__(self, server: _ServerState):
        self.server = server
        self.last_id = 0

    def handle_line(self, line: bytes) -> bytes:
        try:
            record = parse_record(line)
        except ValueError as exc:
            return dump_record({"id": 0, "ok": False, "error": f"parse: {exc}"})
        op = record.get("op")
        if op == OP_HELLO:
            return dump_record(
                {
                    "ok": True,
                    "protocol": PROTOCOL_VERSION,
                    "max_context": self.server.max_context,
                    "max_batch": self.server.max_batch,
                }
            )
        if op == OP_PREDICT:
            return self._handle_predict(record)
        return dump_record(
            {"id": record.get("id", 0), "ok": False, "error": f"unknown op {op!r}"}
        )

    def _fail(self, request_id, reason: str) -> bytes:
        return dump_record({"id": request_id, "ok": False, "error": reason})

    def _handle_predict(self, record: dict) -> bytes:
        request_id = record.get("id")
        if not isinstance(request_id, int) or request_id <= self.last_id:
            return self._fail(
                request_id if isinstance(request_id, int) else 0,
                f"id must be an integer above {self.last_id}",
            )
        self.last_id = request_id

        schema = record.get("schema")
        if not isinstance(schema, dict):
            return self._fail(request_id, "missing schema")
        n_features = schema.get("n_features")
        n_classes = schema.get("n_classes")
        if not (isinstance(n_features, int) and n_features >= 1):
            return self._fail(request_id, "schema.n_features must be a positive integer")
        if not (isinstance(n_classes, int) and n_classes >= 1):
            return self._fail(request_id, "schema.n_classes must be a positive integer")

        context = record.get("context")
        if not isinstance(context, dict):
            return self._fail(request_id, "missing context")
        ctx_x, ctx_y = context.get("x"), context.get("y")
        if not isinstance(ctx_x, list) or not isinstance(ctx_y, list):
            return self._fail(request_id, "context.x and context.y must be lists")
        if len(ctx_x) != len(ctx_y):
            return self._fail(request_id, "context.x and context.y lengths differ")
        if len(ctx_x) > self.server.max_context:
            return self._fail(
                request_id,
                f"context of {len(ctx_x)} exceeds max_context {self.server.max_context}",
            )
        queries = record.get("queries")
        if not isinstance(queries, list) or not queries:
            return self._fail(request_id, "queries must be a non-empty list")
        fault = self.server.fault
        if len(queries) > self.server.max_batch and not fault.accept_oversized_batch:
            return self._fail(
                request_id,
                f"batch of {len(queries)} exceeds max_batch {self.server.max_batch}",
            )
        for row in list(ctx_x) + list(queries):
            if not isinstance(row, list) or len(row) != n_features:
                return self._fail(request_id, "feature row does not match schema.n_features")
        if any(not isinstance(y, int) or not 0 <= y < n_classes for y in ctx_y):
            return self._fail(request_id, "context label outside schema.n_classes")

        if fault.delay_ms > 0:
            time.sleep(fault.delay_ms / 1000.0)
        started = time.perf_counter()
        proba = _mock_proba(ctx_x, ctx_y, queries, n_classes)
        if fault.bad_probs:
            proba = [[p * 0.8 for p in row] for row in proba]
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        self.server.count_request()
        return dump_record(
            {
                "id": request_id + 1 if fault.wrong_id else request_id,
                "ok": True,
                "proba": proba,
                "model": MODEL_NAME,
                "elapsed_ms": elapsed_ms,
            }
        )


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        session = _Session(self.server.owner.state)
        try:
            while True:
                line = self.rfile.readline(MAX_LINE_BYTES + 1)
                if not line:
                    return
                self.wfile.write(session.handle_line(line))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            return


class _ThreadingServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class MockPredictServer:
    """Threaded TCP server; also usable as a context manager.

    ``request_count`` counts successfully served predict requests, which is
    what batching tests assert on.
    """

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        max_context: int = DEFAULT_MAX_CONTEXT,
        max_batch: int = DEFAULT_MAX_BATCH,
        fault: Optional[FaultSpec] = None,
    ):
        self.state = _ServerState(max_context, max_batch, fault)
        self._server = _ThreadingServer((host, port), _Handler)
        self._server.owner = self
        self._thread: Optional[threading.Thread] = None

    @property
    def request_count(self) -> int:
        return self.state.request_count

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> "MockPredictServer":
        self._thread = threading.Thread(
            target=self._server.serve_forever, name="mock-predict-server", daemon=True
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None

    def __enter__(self) -> "MockPredictServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def serve_forever(self) -> None:
        """Run in the foreground until interrupted (CLI mock-server mode)."""
        try:
            self._server.serve_forever()
        finally:
            self._server.server_close()


def serve_stdio(
    max_context: int = DEFAULT_MAX_CONTEXT,
    max_batch: int = DEFAULT_MAX_BATCH,
    stdin=None,
    stdout=None,
) -> None:
    """Speak the protocol over stdin/stdout instead of a socket."""
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout.buffer
    session = _Session(_ServerState(max_context, max_batch, None))
    while True:
        line = stdin.readline(MAX_LINE_BYTES + 1)
        if not line:
            return
        stdout.write(session.handle_line(line))
        stdout.flush()
