"""Statistical comparison of streaming classifiers.

Two procedures: the paired two-tailed t-test for comparing a pair of
algorithms run on identical seeds/streams, and the Friedman rank analysis
with the Nemenyi post-hoc critical difference for comparing many algorithms
across datasets.

The t cumulative distribution is evaluated locally through the regularized
incomplete beta function (continued fraction, target tolerance 1e-12) so the
engine carries no statistics-package dependency; the test suite cross-checks
it against an independent reference implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..errors import LengthMismatch, TooFewDatasets

SIGNIFICANCE_LEVEL = 0.05

_BETA_TOL = 1e-12
_BETA_MAX_ITER = 500


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, modified Lentz method."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        # even step
        numerator = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        # odd step
        numerator = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < _BETA_TOL:
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not (a > 0.0 and b > 0.0):
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # the continued fraction converges fast only below the symmetry point
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: float) -> float:
    """P(T <= t) for Student's t with ``df`` degrees of freedom.

    Uses the exact identity P(|T| >= t) = I_{df/(df+t^2)}(df/2, 1/2) for
    t >= 0, mirrored for negative t. Accurate to roughly 1e-12.
    """
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    if t == 0.0:
        return 0.5
    t2 = t * t
    # choose the formulation whose beta argument stays away from 1, where
    # forming df/(df+t^2) in floats would round the complement away
    if t2 < df:
        central = regularized_incomplete_beta(0.5, df / 2.0, t2 / (df + t2))
        upper = 0.5 + central / 2.0
    else:
        both_tails = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t2))
        upper = 1.0 - both_tails / 2.0
    return upper if t > 0 else 1.0 - upper


@dataclass(frozen=True)
class StatTestResult:
    """Outcome of a two-tailed paired comparison.

    ``significant`` is judged at the 0.05 level. ``mean_difference`` keeps
    the direction (positive means the first sample scored higher).
    """

    statistic: float
    p_value: float
    significant: bool
    n: int
    mean_difference: float


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> StatTestResult:
    """Two-tailed paired t-test on per-seed (or per-dataset) score pairs.

    Degenerate inputs follow a fixed convention instead of raising: when every
    difference is exactly zero the samples are indistinguishable (statistic
    0.0, p = 1.0, not significant); when the differences are a nonzero
    constant the direction is certain at the data's resolution (statistic
    +/-inf, p = 0.0, significant).
    """
    if len(a) != len(b) or len(a) < 2:
        raise LengthMismatch(
            f"paired samples need equal lengths >= 2, got {len(a)} and {len(b)}"
        )
    diffs = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    if not np.isfinite(diffs).all():
        raise ValueError("samples must be finite")
    n = int(diffs.size)
    mean = float(diffs.mean())
    spread = float(diffs.std(ddof=1))
    if spread == 0.0:
        if mean == 0.0:
            return StatTestResult(0.0, 1.0, False, n, 0.0)
        statistic = math.inf if mean > 0 else -math.inf
        return StatTestResult(statistic, 0.0, True, n, mean)
    statistic = mean / (spread / math.sqrt(n))
    p_value = 2.0 * (1.0 - student_t_cdf(abs(statistic), n - 1))
    p_value = min(max(p_value, 0.0), 1.0)
    return StatTestResult(statistic, p_value, p_value < SIGNIFICANCE_LEVEL, n, mean)


# Two-tailed Nemenyi critical values (studentized range over sqrt(2)) with
# infinite degrees of freedom, from Demsar's classifier-comparison tables.
# Columns: alpha = 0.01 / 0.05 / 0.10; row index = number of algorithms - 2.
_NEMENYI_Q = [
    [2.576, 1.960, 1.645],  # 2
    [2.913, 2.344, 2.052],  # 3
    [3.113, 2.569, 2.291],  # 4
    [3.255, 2.728, 2.460],  # 5
    [3.364, 2.850, 2.589],  # 6
    [3.452, 2.948, 2.693],  # 7
    [3.526, 3.031, 2.780],  # 8
    [3.590, 3.102, 2.855],  # 9
    [3.646, 3.164, 2.920],  # 10
    [3.696, 3.219, 2.978],  # 11
    [3.741, 3.268, 3.030],  # 12
    [3.781, 3.313, 3.077],  # 13
    [3.818, 3.354, 3.120],  # 14
    [3.853, 3.391, 3.159],  # 15
    [3.884, 3.426, 3.196],  # 16
    [3.914, 3.458, 3.230],  # 17
    [3.941, 3.489, 3.261],  # 18
    [3.967, 3.517, 3.291],  # 19
    [3.992, 3.544, 3.319],  # 20
    [4.015, 3.569, 3.346],  # 21
    [4.037, 3.593, 3.371],  # 22
    [4.057, 3.616, 3.394],  # 23
    [4.077, 3.637, 3.417],  # 24
    [4.096, 3.658, 3.439],  # 25
    [4.114, 3.678, 3.459],  # 26
    [4.132, 3.696, 3.479],  # 27
    [4.148, 3.714, 3.498],  # 28
    [4.164, 3.732, 3.516],  # 29
    [4.179, 3.749, 3.533],  # 30
    [4.194, 3.765, 3.550],  # 31
    [4.208, 3.780, 3.567],  # 32
    [4.222, 3.795, 3.582],  # 33
    [4.236, 3.810, 3.597],  # 34
    [4.249, 3.824, 3.612],  # 35
    [4.261, 3.837, 3.626],  # 36
    [4.273, 3.850, 3.640],  # 37
    [4.285, 3.863, 3.653],  # 38
    [4.296, 3.876, 3.666],  # 39
    [4.307, 3.888, 3.679],  # 40
    [4.318, 3.899, 3.691],  # 41
    [4.329, 3.911, 3.703],  # 42
    [4.339, 3.922, 3.714],  # 43
    [4.349, 3.933, 3.726],  # 44
    [4.359, 3.943, 3.737],  # 45
    [4.368, 3.954, 3.747],  # 46
    [4.378, 3.964, 3.758],  # 47
    [4.387, 3.973, 3.768],  # 48
    [4.395, 3.983, 3.778],  # 49
    [4.404, 3.992, 3.788],  # 50
]

_ALPHA_COLUMN = {0.01: 0, 0.05: 1, 0.10: 2}


def nemenyi_critical_value(alpha: float, n_algorithms: int) -> float:
    if alpha not in _ALPHA_COLUMN:
        raise ValueError("alpha must be one of 0.01, 0.05, or 0.10")
    if not 2 <= n_algorithms <= 50:
        raise ValueError("tabulated critical values cover 2..50 algorithms")
    return _NEMENYI_Q[n_algorithms - 2][_ALPHA_COLUMN[alpha]]


def _rank_row(scores: np.ndarray) -> np.ndarray:
    """Ranks within one dataset: 1 = best (highest score), ties averaged."""
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    ranks = np.empty(scores.size, dtype=np.float64)
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # positions are 1-based; a tie block shares the mean of its positions
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@dataclass(frozen=True)
class FriedmanResult:
    """Rank summary of k algorithms over N datasets.

    ``cliques`` are the maximal groups of algorithms whose average ranks all
    sit within one critical difference of each other, each listed best-first.
    """

    average_ranks: Tuple[float, ...]
    critical_difference: float
    cliques: Tuple[Tuple[int, ...], ...]
    statistic: float
    n_algorithms: int
    n_datasets: int
    alpha: float


def _maximal_cliques(average_ranks: np.ndarray, cd: float) -> Tuple[Tuple[int, ...], ...]:
    order = np.argsort(average_ranks, kind="stable")
    sorted_ranks = average_ranks[order]
    k = order.size
    spans: List[Tuple[int, int]] = []
    for i in range(k):
        j = i
        while j + 1 < k and sorted_ranks[j + 1] - sorted_ranks[i] < cd:
            j += 1
        spans.append((i, j))
    cliques = []
    for i, j in spans:
        contained = any(
            p <= i and j <= q and (p, q) != (i, j) for p, q in spans
        )
        if not contained:
            cliques.append(tuple(int(x) for x in order[i : j + 1]))
    return tuple(cliques)


def friedman_nemenyi(scores, alpha: float = 0.05) -> FriedmanResult:
    """Friedman rank analysis with Nemenyi critical-difference grouping.

    ``scores`` is a datasets x algorithms matrix of a higher-is-better metric
    (e.g. prequential accuracy). Each dataset row is converted to ranks, ranks
    are averaged per algorithm, and two algorithms differ significantly when
    their average ranks differ by at least CD = q_alpha * sqrt(k(k+1)/(6N)).
    The returned statistic is the Friedman chi-square over the same ranks.

    Ranks depend only on the within-dataset ordering, so any strictly
    monotone transformation of the scores leaves the result unchanged.
    """
    matrix = np.asarray(scores, dtype=np.float64)
    if matrix.ndim != 2:
        raise TooFewDatasets("scores must be a 2-D datasets x algorithms matrix")
    n_datasets, k = matrix.shape
    if n_datasets < 2 or k < 2:
        raise TooFewDatasets(
            f"need >= 2 algorithms over >= 2 datasets, got {k} over {n_datasets}"
        )
    if not np.isfinite(matrix).all():
        raise ValueError("scores must be finite")
    ranks = np.vstack([_rank_row(row) for row in matrix])
    average = ranks.mean(axis=0)
    cd = nemenyi_critical_value(alpha, k) * math.sqrt(k * (k + 1) / (6.0 * n_datasets))
    statistic = (
        12.0 * n_datasets / (k * (k + 1))
        * (float(np.sum(average * average)) - k * (k + 1) ** 2 / 4.0)
    )
    return FriedmanResult(
        average_ranks=tuple(float(r) for r in average),
        critical_difference=float(cd),
        cliques=_maximal_cliques(average, cd),
        statistic=float(statistic),
        n_algorithms=int(k),
        n_datasets=int(n_datasets),
        alpha=alpha,
    )
