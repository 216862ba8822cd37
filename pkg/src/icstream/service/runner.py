"""Experiment orchestration: a validated config in, JSON-ready results out.

The HTTP layer and the CLI both call these functions; neither touches the
filesystem here. Grid cells (one predictor, one seed) are independent, so
``execute_runs`` can fan them out over a thread pool; results are merged in
config order afterwards.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from typing import List, Optional

from ..config import (
    ExperimentConfig,
    memory_config,
    predictor_configs,
    stream_factory,
)
from ..evaluation.ablation import ablation_grid, write_ablation_csv
from ..evaluation.prequential import (
    bench_latencies,
    run_prequential,
    summarize_latencies,
)
from ..predictor.conformance import check_protocol


def execute_runs(config: ExperimentConfig, jobs: int = 1) -> dict:
    """One prequential run per (predictor, seed) cell, in config order."""
    label = config.label()
    factory = stream_factory(config)
    memory = memory_config(config)
    predictors = predictor_configs(config)

    def one(cell) -> dict:
        index, predictor, seed = cell
        report = run_prequential(
            factory(seed),
            memory,
            predictor,
            seed=seed,
            window=config.window,
            max_instances=config.max_instances,
            dataset=label,
        )
        return {
            "predictor": predictor.kind,
            "predictor_index": index,
            "seed": seed,
            "a_t": report.a_t,
            "n_evaluated": report.n_evaluated,
            "n_instances": report.n_instances,
            "report": report.to_dict(),
        }

    cells = [
        (index, predictor, seed)
        for index, predictor in enumerate(predictors)
        for seed in config.seeds
    ]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(one, cells))
    else:
        entries = [one(cell) for cell in cells]
    return {"label": label, "entries": entries}


def execute_ablation(config: ExperimentConfig) -> dict:
    """Run the configured ablation grid with the first predictor."""
    label = config.label()
    predictor = predictor_configs(config)[0]
    report = ablation_grid(
        stream_factory(config),
        predictor,
        m_values=tuple(config.ablation.m_values),
        ratio_values=tuple(config.ablation.ratio_values),
        variants=tuple(config.ablation.variants),
        seeds=tuple(config.seeds),
        t_warm=config.memory.t_warm,
        max_instances=config.max_instances,
        dataset=label,
    )
    buffer = io.StringIO()
    write_ablation_csv(report, buffer)
    deltas = []
    for delta in report.deltas:
        row = {
            "kind": delta.kind,
            "m": delta.m,
            "ratio": delta.short_ratio,
            "mean": delta.mean,
            "p_value": None,
            "significant": None,
        }
        if delta.t_test is not None:
            row["p_value"] = delta.t_test.p_value
            row["significant"] = delta.t_test.significant
        deltas.append(row)
    return {
        "label": label,
        "predictor": predictor.kind,
        "report": asdict(report),
        "csv": buffer.getvalue(),
        "deltas": deltas,
    }


def execute_bench(config: ExperimentConfig, jobs: int = 1) -> dict:
    """One batch-amortized timing row per configured predictor."""
    label = config.label()
    factory = stream_factory(config)
    memory = memory_config(config)

    def one(cell) -> List[float]:
        predictor, seed = cell
        return bench_latencies(
            factory(seed), memory, predictor, max_instances=config.max_instances
        )

    rows = []
    for index, predictor in enumerate(predictor_configs(config)):
        cells = [(predictor, seed) for seed in config.seeds]
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                chunks = list(pool.map(one, cells))
        else:
            chunks = [one(cell) for cell in cells]
        pooled = [value for chunk in chunks for value in chunk]
        summary = summarize_latencies(pooled)
        rows.append(
            {
                "predictor": predictor.kind,
                "predictor_index": index,
                "count": summary.count,
                "mean_ms": summary.mean_ms,
                "p50_ms": summary.p50_ms,
                "p99_ms": summary.p99_ms,
            }
        )
    return {"label": label, "rows": rows}


def execute_protocol_check(endpoint: str, timeout_ms: float = 5000.0) -> dict:
    return check_protocol(endpoint, timeout_ms=timeout_ms).to_dict()
