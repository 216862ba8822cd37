"""Memory-design ablation: dual sketch vs its two degenerate halves.

Runs a grid of (total budget M, short-term ratio, memory variant) cells with
paired seeds, so every accuracy difference between two cells is measured on
byte-identical streams. Emits per-cell summaries plus the three standard
paired deltas: dual minus long-only, dual minus short-only, and largest-M
minus smallest-M.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import InvalidVariantConfig
from ..ingestion.base import StreamSource
from ..ingestion.synthetic import DriftSpec, GaussianDriftSource
from ..memory import DUAL, LONG_ONLY, SHORT_ONLY, VARIANTS, MemoryConfig
from ..predictor.base import PredictorConfig
from .prequential import run_prequential
from .stats import StatTestResult, paired_t_test

DUAL_MINUS_LONG = "dual_minus_long"
DUAL_MINUS_SHORT = "dual_minus_short"
M_MAX_MINUS_M_MIN = "m_max_minus_m_min"


@dataclass(frozen=True)
class AblationResult:
    """One grid cell: a memory configuration with its paired-run accuracies.

    ``short_ratio`` is None for the single-buffer variants, where the split
    does not exist. ``accuracies`` is ordered like ``seeds``.
    """

    variant: str
    m: int
    short_ratio: Optional[float]
    seeds: Tuple[int, ...]
    accuracies: Tuple[float, ...]
    mean_accuracy: float
    std_accuracy: float


@dataclass(frozen=True)
class PairedDelta:
    """Per-seed accuracy difference between two cells of the grid.

    ``t_test`` is None when there are fewer than two repeats. Positive mean
    favours the first-named side of ``kind``.
    """

    kind: str
    m: int
    short_ratio: Optional[float]
    deltas: Tuple[float, ...]
    mean: float
    t_test: Optional[StatTestResult]


@dataclass(frozen=True)
class AblationReport:
    dataset: str
    results: Tuple[AblationResult, ...]
    deltas: Tuple[PairedDelta, ...]
    m_values: Tuple[int, ...]
    ratio_values: Tuple[float, ...]
    variants: Tuple[str, ...]
    seeds: Tuple[int, ...]
    t_warm: int

    def cell(self, variant: str, m: int, short_ratio: Optional[float] = None) -> AblationResult:
        for result in self.results:
            if (result.variant, result.m, result.short_ratio) == (variant, m, short_ratio):
                return result
        raise KeyError(f"no cell ({variant}, {m}, {short_ratio})")


def _as_stream_factory(stream) -> Callable[[int], StreamSource]:
    if isinstance(stream, DriftSpec):
        return lambda seed: GaussianDriftSource(stream, seed)
    if callable(stream):
        return stream
    raise ValueError(
        f"stream must be a DriftSpec or a callable seed -> source, got {type(stream).__name__}"
    )


def _delta(kind, first: AblationResult, second: AblationResult) -> PairedDelta:
    assert first.seeds == second.seeds
    deltas = tuple(x - y for x, y in zip(first.accuracies, second.accuracies))
    t_test = paired_t_test(first.accuracies, second.accuracies) if len(deltas) >= 2 else None
    return PairedDelta(
        kind=kind,
        m=first.m,
        short_ratio=first.short_ratio,
        deltas=deltas,
        mean=float(np.mean(deltas)),
        t_test=t_test,
    )


def ablation_grid(
    stream: Union[DriftSpec, Callable[[int], StreamSource]],
    predictor: PredictorConfig,
    m_values: Sequence[int],
    ratio_values: Sequence[float],
    variants: Sequence[str] = VARIANTS,
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
    t_warm: int = 100,
    max_instances: Optional[int] = None,
    dataset: str = "",
) -> AblationReport:
    """Run the paired ablation grid and summarize it.

    The dual variant spans the full m x ratio grid; long_only and short_only
    have no split, so they span m alone. Every cell runs the same ``seeds``
    list, which is what makes the deltas paired. The dual variant is
    mandatory: without it none of the comparisons the grid exists for can be
    formed.
    """
    variants = tuple(dict.fromkeys(variants))
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown:
        raise InvalidVariantConfig(f"unknown variants {unknown!r}")
    if DUAL not in variants:
        raise InvalidVariantConfig("variant grid must include the dual baseline")
    if not isinstance(predictor, PredictorConfig):
        raise ValueError("ablation needs a predictor config; runs must not share state")
    m_values = tuple(int(m) for m in m_values)
    ratio_values = tuple(float(r) for r in ratio_values)
    seeds = tuple(int(s) for s in seeds)
    if not m_values:
        raise ValueError("need at least one m value")
    if not ratio_values:
        raise ValueError("need at least one short_ratio value")
    if not seeds:
        raise ValueError("need at least one seed")
    if len(set(seeds)) != len(seeds):
        raise ValueError("seeds must be distinct for the deltas to be paired")
    factory = _as_stream_factory(stream)

    def memory_cells() -> List[Tuple[str, int, Optional[float]]]:
        cells: List[Tuple[str, int, Optional[float]]] = []
        for m in m_values:
            for variant in variants:
                if variant == DUAL:
                    cells.extend((DUAL, m, ratio) for ratio in ratio_values)
                else:
                    cells.append((variant, m, None))
        return cells

    results: Dict[Tuple[str, int, Optional[float]], AblationResult] = {}
    for variant, m, ratio in memory_cells():
        config = MemoryConfig(m=m, short_ratio=ratio, t_warm=t_warm, variant=variant)
        accuracies = []
        for run_seed in seeds:
            report = run_prequential(
                factory(run_seed),
                config,
                predictor,
                seed=run_seed,
                max_instances=max_instances,
                dataset=dataset,
            )
            if report.a_t is None:
                raise ValueError(
                    "stream ended inside the warm-up period; no instance was evaluated"
                )
            accuracies.append(report.a_t)
        accuracies = tuple(accuracies)
        results[(variant, m, ratio)] = AblationResult(
            variant=variant,
            m=m,
            short_ratio=ratio,
            seeds=seeds,
            accuracies=accuracies,
            mean_accuracy=float(np.mean(accuracies)),
            std_accuracy=float(np.std(accuracies, ddof=1)) if len(seeds) > 1 else 0.0,
        )

    deltas: List[PairedDelta] = []
    for m in m_values:
        for ratio in ratio_values:
            dual_cell = results[(DUAL, m, ratio)]
            if LONG_ONLY in variants:
                deltas.append(_delta(DUAL_MINUS_LONG, dual_cell, results[(LONG_ONLY, m, None)]))
            if SHORT_ONLY in variants:
                deltas.append(_delta(DUAL_MINUS_SHORT, dual_cell, results[(SHORT_ONLY, m, None)]))
    if len(set(m_values)) >= 2:
        m_max, m_min = max(m_values), min(m_values)
        for ratio in ratio_values:
            deltas.append(
                _delta(M_MAX_MINUS_M_MIN, results[(DUAL, m_max, ratio)], results[(DUAL, m_min, ratio)])
            )

    return AblationReport(
        dataset=dataset,
        results=tuple(results.values()),
        deltas=tuple(deltas),
        m_values=m_values,
        ratio_values=ratio_values,
        variants=variants,
        seeds=seeds,
        t_warm=t_warm,
    )


def write_ablation_csv(report: AblationReport, path_or_file) -> None:
    """One row per (cell, seed) so downstream tools can re-pair runs at will."""
    if hasattr(path_or_file, "write"):
        _write_ablation_rows(report, path_or_file)
        return
    with open(path_or_file, "w", newline="") as handle:
        _write_ablation_rows(report, handle)


def _write_ablation_rows(report: AblationReport, handle) -> None:
    writer = csv.writer(handle)
    writer.writerow(["dataset", "M", "ratio", "variant", "seed", "accuracy"])
    for result in report.results:
        ratio = "" if result.short_ratio is None else repr(result.short_ratio)
        for run_seed, accuracy in zip(result.seeds, result.accuracies):
            writer.writerow(
                [report.dataset, result.m, ratio, result.variant, run_seed, repr(accuracy)]
            )
