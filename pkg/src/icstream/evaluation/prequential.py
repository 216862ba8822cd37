"""Test-then-memorize evaluation loop and its report.

Per instance, in this exact order: predict from the current context (if past
warm-up), score, reveal the label to the predictor, then store the instance
in memory. The instance being scored is therefore never part of the context
used to score it.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from ..core import Query, argmax_label
from ..errors import EngineError
from ..memory import (
    LONG_DROP,
    SHORT_DROP,
    SHORT_TO_LONG,
    DualMemory,
    MemoryConfig,
)
from ..predictor import Predictor, PredictorConfig, build_predictor

REPORT_FORMAT = "icstream.run_report"
REPORT_VERSION = 1
DEFAULT_WINDOW = 1000


@dataclass(frozen=True)
class InstanceRecord:
    arrival_index: int
    predicted: int
    label: int
    latency_ms: float


@dataclass(frozen=True)
class TimingSummary:
    count: int
    mean_ms: Optional[float]
    p50_ms: Optional[float]
    p99_ms: Optional[float]


@dataclass(frozen=True)
class RunReport:
    """Everything one prequential run produced.

    ``canonical_bytes`` is the determinism witness: two runs of the same
    (config, seed) must agree on it byte for byte. Latencies are wall-clock
    noise, so they are excluded from it (and only from it).
    """

    records: Tuple[InstanceRecord, ...]
    a_t: Optional[float]
    windowed: Tuple[Tuple[int, float], ...]
    config: dict
    seed: int
    eviction_stats: dict
    n_instances: int
    n_evaluated: int

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "seed": self.seed,
            "config": self.config,
            "a_t": self.a_t,
            "n_instances": self.n_instances,
            "n_evaluated": self.n_evaluated,
            "eviction_stats": dict(self.eviction_stats),
            "windowed": [list(pair) for pair in self.windowed],
            "records": [asdict(record) for record in self.records],
        }

    @staticmethod
    def from_dict(doc: dict) -> "RunReport":
        if doc.get("format") != REPORT_FORMAT or doc.get("version") != REPORT_VERSION:
            raise ValueError(f"not a version-{REPORT_VERSION} {REPORT_FORMAT} document")
        return RunReport(
            records=tuple(InstanceRecord(**record) for record in doc["records"]),
            a_t=doc["a_t"],
            windowed=tuple((int(end), float(acc)) for end, acc in doc["windowed"]),
            config=doc["config"],
            seed=doc["seed"],
            eviction_stats=doc["eviction_stats"],
            n_instances=doc["n_instances"],
            n_evaluated=doc["n_evaluated"],
        )

    def save_json(self, path) -> None:
        with open(path, "w") as handle:
            json.dump(self.to_dict(), handle, indent=2)
            handle.write("\n")

    @staticmethod
    def load_json(path) -> "RunReport":
        with open(path) as handle:
            return RunReport.from_dict(json.load(handle))

    def save_windowed_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["window_end_index", "accuracy"])
            writer.writerows(self.windowed)

    def canonical_bytes(self) -> bytes:
        doc = self.to_dict()
        for record in doc["records"]:
            del record["latency_ms"]
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def _attach_arrival(error: Exception, arrival_index: int) -> Exception:
    if isinstance(error, EngineError) and not hasattr(error, "arrival_index"):
        error.arrival_index = arrival_index
    return error


def run_prequential(
    source,
    memory_config: MemoryConfig,
    predictor_config: Union[PredictorConfig, Predictor],
    seed: int = 0,
    window: int = DEFAULT_WINDOW,
    max_instances: Optional[int] = None,
    dataset: str = "",
) -> RunReport:
    """Consume a stream prequentially and report accuracy over it.

    ``predictor_config`` may also be an already-built Predictor (tests use
    this to wrap predictors with instrumentation); it is closed either way.
    Evaluation starts once more than ``memory_config.t_warm`` instances have
    been seen, counting the current one, so with T_warm = 100 the 101st
    instance is the first one scored.
    """
    schema = source.schema
    memory = DualMemory(memory_config, schema.n_classes, schema.n_features)
    if isinstance(predictor_config, PredictorConfig):
        predictor = build_predictor(predictor_config, schema)
        predictor_echo = {
            key: value
            for key, value in asdict(predictor_config).items()
            if value not in ("", None)
        }
    else:
        predictor = predictor_config
        predictor_echo = {"kind": type(predictor).__name__}

    records: List[InstanceRecord] = []
    windowed: List[Tuple[int, float]] = []
    evictions = {SHORT_TO_LONG: 0, LONG_DROP: 0, SHORT_DROP: 0}
    correct = 0
    window_correct = 0
    window_size = 0
    seen = 0
    t_warm = memory_config.t_warm

    try:
        for example in source:
            seen += 1
            try:
                if seen > t_warm:
                    ctx = memory.context()
                    query = Query(example.features, example.arrival_index)
                    started = time.perf_counter()
                    dist = predictor.predict(ctx, [query])[0]
                    latency_ms = (time.perf_counter() - started) * 1000.0
                    predicted = argmax_label(dist)
                    if predicted == example.label:
                        correct += 1
                        window_correct += 1
                    window_size += 1
                    records.append(
                        InstanceRecord(
                            arrival_index=example.arrival_index,
                            predicted=predicted,
                            label=example.label,
                            latency_ms=latency_ms,
                        )
                    )
                    if window_size == window:
                        windowed.append((example.arrival_index, window_correct / window))
                        window_correct = 0
                        window_size = 0
                predictor.record_label(example)
                for event in memory.observe(example):
                    evictions[event.kind] += 1
            except Exception as error:
                raise _attach_arrival(error, example.arrival_index)
            if max_instances is not None and seen >= max_instances:
                break
    finally:
        predictor.close()

    if window_size > 0:
        windowed.append((records[-1].arrival_index, window_correct / window_size))

    n_evaluated = len(records)
    return RunReport(
        records=tuple(records),
        a_t=(correct / n_evaluated) if n_evaluated else None,
        windowed=tuple(windowed),
        config={
            "dataset": dataset or source.origin.name,
            "memory": {
                "m": memory_config.m,
                "short_ratio": memory_config.short_ratio,
                "short_size": memory_config.short_size,
                "t_warm": memory_config.t_warm,
                "variant": memory_config.variant,
            },
            "predictor": predictor_echo,
            "window": window,
        },
        seed=seed,
        eviction_stats=evictions,
        n_instances=seen,
        n_evaluated=n_evaluated,
    )


def summarize_latencies(latencies) -> TimingSummary:
    values = np.asarray(list(latencies), dtype=np.float64)
    if values.size == 0:
        return TimingSummary(count=0, mean_ms=None, p50_ms=None, p99_ms=None)
    return TimingSummary(
        count=int(values.size),
        mean_ms=float(values.mean()),
        p50_ms=float(np.percentile(values, 50)),
        p99_ms=float(np.percentile(values, 99)),
    )


def timing_report(report: RunReport) -> TimingSummary:
    """Latency summary of the evaluated instances (predict calls only)."""
    return summarize_latencies(record.latency_ms for record in report.records)


def bench_latencies(
    source,
    memory_config: MemoryConfig,
    predictor_config: PredictorConfig,
    max_instances: Optional[int] = None,
) -> List[float]:
    """Batch-amortized per-instance latencies; predictions are not scored.

    Unlike the scored loop above, queries past warm-up are buffered up to
    the predictor's batch_size and sent as one predict call over the context
    frozen at the start of the batch; the call's elapsed time divided by the
    batch size is recorded once per member. This measures the throughput a
    batching deployment actually gets, which the one-query-at-a-time scored
    loop deliberately does not.
    """
    schema = source.schema
    memory = DualMemory(memory_config, schema.n_classes, schema.n_features)
    predictor = build_predictor(predictor_config, schema)
    batch = max(1, predictor_config.batch_size)
    latencies: List[float] = []
    pending = []

    def flush() -> None:
        if not pending:
            return
        ctx = memory.context()
        queries = [Query(example.features, example.arrival_index) for example in pending]
        started = time.perf_counter()
        predictor.predict(ctx, queries)
        per_instance = (time.perf_counter() - started) * 1000.0 / len(pending)
        latencies.extend([per_instance] * len(pending))
        for example in pending:
            predictor.record_label(example)
            memory.observe(example)
        pending.clear()

    seen = 0
    try:
        for example in source:
            seen += 1
            if seen > memory_config.t_warm:
                pending.append(example)
                if len(pending) == batch:
                    flush()
            else:
                predictor.record_label(example)
                memory.observe(example)
            if max_instances is not None and seen >= max_instances:
                break
        flush()
    finally:
        predictor.close()
    return latencies
