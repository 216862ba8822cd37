"""TCP client for an external in-context model speaking the line protocol.

The client owns one connection, performs the hello handshake to learn the
server's context and batch ceilings, and splits query batches accordingly.
Requests are pure reads of (context, queries), so transport failures are
retried on a fresh connection up to the configured count.
"""

from __future__ import annotations

import socket
from typing import List, Optional, Sequence

import numpy as np

from ..core import ClassDistribution, Context, Query, Schema
from ..errors import ContextTooLarge, RemoteProtocol, RemoteUnavailable, Timeout
from .base import Predictor, PredictorConfig, REMOTE
from .wire import (
    OP_HELLO,
    OP_PREDICT,
    PROTOCOL_VERSION,
    dump_record,
    read_record,
    split_endpoint,
)

PROBA_SUM_TOLERANCE = 1e-6


class RemotePredictor(Predictor):
    def __init__(self, schema: Schema, config: PredictorConfig):
        if config.kind != REMOTE:
            raise ValueError(f"expected a remote config, got {config.kind!r}")
        super().__init__(schema)
        self.config = config
        self._host, self._port = split_endpoint(config.endpoint)
        self._sock: Optional[socket.socket] = None
        self._reader = None
        self._next_id = 1
        self.max_context: Optional[int] = None
        self.max_batch: Optional[int] = None

    # -- connection management -------------------------------------------

    def _close_socket(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        self._sock = None
        self._reader = None

    def close(self) -> None:
        self._close_socket()

    def _handshake(self) -> None:
        self._send({"op": OP_HELLO, "protocol": PROTOCOL_VERSION})
        reply = self._read()
        if not (
            reply.get("ok") is True
            and reply.get("protocol") == PROTOCOL_VERSION
            and isinstance(reply.get("max_context"), int)
            and isinstance(reply.get("max_batch"), int)
        ):
            raise RemoteProtocol(f"bad handshake reply: {reply!r}")
        self.max_context = reply["max_context"]
        self.max_batch = reply["max_batch"]

    def _ensure_connected(self) -> None:
        if self._sock is not None:
            return
        try:
            self._sock = socket.create_connection(
                (self._host, self._port), timeout=self.config.timeout_ms / 1000.0
            )
        except OSError as exc:
            raise RemoteUnavailable(f"cannot reach {self.config.endpoint}: {exc}") from exc
        self._reader = self._sock.makefile("rb")
        try:
            self._handshake()
        except Exception:
            self._close_socket()
            raise

    def _send(self, record: dict) -> None:
        self._sock.sendall(dump_record(record))

    def _read(self) -> dict:
        try:
            record = read_record(self._reader)
        except ValueError as exc:
            raise RemoteProtocol(str(exc)) from exc
        if record is None:
            raise RemoteUnavailable("server closed the connection")
        return record

    # -- prediction --------------------------------------------------------

    def predict(self, ctx: Context, queries: Sequence[Query]) -> List[ClassDistribution]:
        if not queries:
            return []
        self._connect_with_retries()
        effective_batch = min(self.config.batch_size, self.max_batch)
        out: List[ClassDistribution] = []
        for chunk_start in range(0, len(queries), effective_batch):
            chunk = queries[chunk_start : chunk_start + effective_batch]
            out.extend(self._predict_chunk(ctx, chunk))
        return out

    def _connect_with_retries(self) -> None:
        last_error: Optional[Exception] = None
        for _ in range(self.config.retries + 1):
            try:
                self._ensure_connected()
                return
            except (RemoteUnavailable, Timeout) as exc:
                last_error = exc
                self._close_socket()
        raise last_error

    def _predict_chunk(self, ctx: Context, chunk: Sequence[Query]) -> List[ClassDistribution]:
        last_error: Optional[Exception] = None
        for _ in range(self.config.retries + 1):
            try:
                return self._predict_once(ctx, chunk)
            except (RemoteUnavailable, Timeout) as exc:
                last_error = exc
                self._close_socket()
        raise last_error

    def _predict_once(self, ctx: Context, chunk: Sequence[Query]) -> List[ClassDistribution]:
        self._ensure_connected()
        if len(ctx) > self.max_context:
            raise ContextTooLarge(
                f"context of {len(ctx)} exceeds the server ceiling {self.max_context}"
            )
        request_id = self._next_id
        self._next_id += 1
        request = {
            "id": request_id,
            "op": OP_PREDICT,
            "schema": {
                "n_features": self.schema.n_features,
                "n_classes": self.schema.n_classes,
            },
            "context": {
                "x": ctx.features.tolist(),
                "y": ctx.labels.tolist(),
            },
            "queries": [q.features.tolist() for q in chunk],
            "n_permutations": self.config.n_permutations,
            "seed": self.config.seed,
        }
        try:
            self._send(request)
            reply = self._read()
        except socket.timeout as exc:
            raise Timeout(
                f"no reply within {self.config.timeout_ms:.0f} ms"
            ) from exc
        except OSError as exc:
            raise RemoteUnavailable(f"transport failure: {exc}") from exc
        return self._validate_reply(reply, request_id, len(chunk))

    def _validate_reply(self, reply: dict, request_id: int, n_queries: int) -> List[ClassDistribution]:
        if reply.get("id") != request_id:
            raise RemoteProtocol(
                f"response id {reply.get('id')!r} does not match request {request_id}"
            )
        if reply.get("ok") is not True:
            raise RemoteProtocol(f"server error: {reply.get('error', 'unspecified')!r}")
        proba = reply.get("proba")
        if not isinstance(proba, list) or len(proba) != n_queries:
            raise RemoteProtocol(
                f"expected {n_queries} probability rows, got {proba!r:.200}"
            )
        out = []
        for row in proba:
            arr = np.asarray(row, dtype=np.float64)
            if arr.ndim != 1 or arr.shape[0] != self.schema.n_classes:
                raise RemoteProtocol(
                    f"probability row of wrong shape: {getattr(arr, 'shape', None)}"
                )
            if not np.isfinite(arr).all() or (arr < 0).any():
                raise RemoteProtocol("probability row has negative or non-finite entries")
            total = float(arr.sum())
            if abs(total - 1.0) > PROBA_SUM_TOLERANCE:
                raise RemoteProtocol(f"probability row sums to {total!r}")
            out.append(ClassDistribution(arr / total))
        return out


def remote_predict(
    endpoint: str,
    schema: Schema,
    ctx: Context,
    queries: Sequence[Query],
    n_permutations: int = 4,
    timeout_ms: float = 5000.0,
    seed: int = 0,
    retries: int = 2,
) -> List[ClassDistribution]:
    """One-shot batch prediction: the whole query list in a single request."""
    config = PredictorConfig(
        kind=REMOTE,
        endpoint=endpoint,
        batch_size=max(len(queries), 1),
        timeout_ms=timeout_ms,
        n_permutations=n_permutations,
        seed=seed,
        retries=retries,
    )
    client = RemotePredictor(schema, config)
    try:
        return client.predict(ctx, queries)
    finally:
        client.close()
