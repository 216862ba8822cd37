"""Conformance battery for servers speaking the predict protocol.

Connects to an endpoint and exercises the contract the client relies on:
handshake shape, prediction, well-formed probability rows, exact id echo,
batch-ceiling enforcement, and graceful rejection of malformed requests.
Each check reports pass/fail with a one-line detail; the battery never
raises for server misbehavior, only for local bugs.
"""

from __future__ import annotations

import math
import socket
from dataclasses import dataclass, field
from typing import List, Optional

from .wire import (
    OP_HELLO,
    OP_PREDICT,
    PROTOCOL_VERSION,
    dump_record,
    read_record,
    split_endpoint,
)

PROBA_SUM_TOLERANCE = 1e-6

# largest advertised ceiling the battery will probe by sending ceiling+1
# queries; servers advertising more get the check marked as not exercised
MAX_PROBED_BATCH = 1024

CHECK_HANDSHAKE = "handshake"
CHECK_PREDICT = "predict"
CHECK_PROBS = "probability_rows"
CHECK_ID_ECHO = "id_echo"
CHECK_BATCH_LIMIT = "batch_limit"
CHECK_MALFORMED = "malformed_rejected"


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ConformanceReport:
    endpoint: str
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(self.checks) and all(check.passed for check in self.checks)

    def to_dict(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "ok": self.ok,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
        }


class _Probe:
    """One connection with strictly increasing request ids."""

    def __init__(self, endpoint: str, timeout_s: float):
        host, port = split_endpoint(endpoint)
        self._sock = socket.create_connection((host, port), timeout=timeout_s)
        self._reader = self._sock.makefile("rb")
        self._next_id = 1

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass

    def take_id(self) -> int:
        value = self._next_id
        self._next_id += 1
        return value

    def roundtrip(self, record: dict) -> dict:
        self._sock.sendall(dump_record(record))
        reply = read_record(self._reader)
        if reply is None:
            raise ConnectionError("server closed the connection")
        return reply

    def predict(self, queries: list, request_id: Optional[int] = None) -> dict:
        context_x = [[0.0, 0.0], [1.0, 1.0], [0.2, 0.1], [0.9, 1.1]]
        context_y = [0, 1, 0, 1]
        return self.roundtrip(
            {
                "id": self.take_id() if request_id is None else request_id,
                "op": OP_PREDICT,
                "schema": {"n_features": 2, "n_classes": 2},
                "context": {"x": context_x, "y": context_y},
                "queries": queries,
                "n_permutations": 1,
                "seed": 0,
            }
        )


def _proba_problem(proba, n_queries: int, n_classes: int) -> str:
    if not isinstance(proba, list) or len(proba) != n_queries:
        return f"expected {n_queries} rows, got {type(proba).__name__}"
    for index, row in enumerate(proba):
        if not isinstance(row, list) or len(row) != n_classes:
            return f"row {index} is not a length-{n_classes} list"
        if any(not isinstance(v, (int, float)) or not math.isfinite(v) for v in row):
            return f"row {index} has non-finite entries"
        if any(v < 0 for v in row):
            return f"row {index} has negative entries"
        total = sum(row)
        if abs(total - 1.0) > PROBA_SUM_TOLERANCE:
            return f"row {index} sums to {total!r}"
    return ""


def check_protocol(endpoint: str, timeout_ms: float = 5000.0) -> ConformanceReport:
    """Run the full battery against ``endpoint``; never raises for failures."""
    report = ConformanceReport(endpoint=endpoint)
    try:
        probe = _Probe(endpoint, timeout_ms / 1000.0)
    except (OSError, ValueError) as exc:
        report.checks.append(
            CheckResult(CHECK_HANDSHAKE, False, f"cannot connect: {exc}")
        )
        return report
    try:
        _run_battery(probe, report)
    except (OSError, ValueError, ConnectionError) as exc:
        report.checks.append(
            CheckResult("connection", False, f"server broke the connection: {exc}")
        )
    finally:
        probe.close()
    return report


def _run_battery(probe: _Probe, report: ConformanceReport) -> None:
    hello = probe.roundtrip({"op": OP_HELLO, "protocol": PROTOCOL_VERSION})
    handshake_ok = (
        hello.get("ok") is True
        and hello.get("protocol") == PROTOCOL_VERSION
        and isinstance(hello.get("max_context"), int)
        and hello["max_context"] >= 1
        and isinstance(hello.get("max_batch"), int)
        and hello["max_batch"] >= 1
    )
    report.checks.append(
        CheckResult(
            CHECK_HANDSHAKE,
            handshake_ok,
            "" if handshake_ok else f"bad hello reply: {hello!r}",
        )
    )
    if not handshake_ok:
        return
    max_batch = hello["max_batch"]

    request_id = probe.take_id()
    reply = probe.predict([[0.1, 0.2], [0.8, 0.9]], request_id=request_id)
    predict_ok = reply.get("ok") is True
    report.checks.append(
        CheckResult(
            CHECK_PREDICT,
            predict_ok,
            "" if predict_ok else f"predict failed: {reply.get('error', reply)!r}",
        )
    )

    problem = _proba_problem(reply.get("proba"), 2, 2) if predict_ok else "predict failed"
    report.checks.append(CheckResult(CHECK_PROBS, problem == "", problem))

    echo_ok = reply.get("id") == request_id
    report.checks.append(
        CheckResult(
            CHECK_ID_ECHO,
            echo_ok,
            "" if echo_ok else f"sent id {request_id}, got {reply.get('id')!r}",
        )
    )

    if max_batch > MAX_PROBED_BATCH:
        report.checks.append(
            CheckResult(
                CHECK_BATCH_LIMIT,
                True,
                f"advertised ceiling {max_batch} above probe size; not exercised",
            )
        )
    else:
        oversized = [[0.5, 0.5]] * (max_batch + 1)
        reply = probe.predict(oversized)
        rejected = reply.get("ok") is False
        report.checks.append(
            CheckResult(
                CHECK_BATCH_LIMIT,
                rejected,
                ""
                if rejected
                else f"accepted {max_batch + 1} queries over advertised {max_batch}",
            )
        )

    reply = probe.predict([[0.1]])  # row narrower than schema.n_features
    rejected = reply.get("ok") is False
    alive = probe.roundtrip({"op": OP_HELLO, "protocol": PROTOCOL_VERSION})
    survived = alive.get("ok") is True
    if rejected and survived:
        detail = ""
    elif not rejected:
        detail = "accepted a feature row that does not match the schema"
    else:
        detail = "rejected the request but the connection died"
    report.checks.append(CheckResult(CHECK_MALFORMED, rejected and survived, detail))
