"""Why a bigger context helps: a concentration bound and an empirical probe.

Analytic side: treat the predictor as a function of its context examples and
assume swapping the i-th most recent example moves the output by at most
c_i = delta * i**(-alpha) (older examples matter less). McDiarmid's
inequality then bounds the deviation from the mean prediction by
2*exp(-2 t^2 / sum_i c_i^2); for alpha > 1/2 the infinite sum converges to
delta^2 * zeta(2*alpha).

Empirical side: ``variance_probe`` resamples contexts of growing size from a
synthetic generator whose true conditional is known and decomposes the
prediction error at fixed probe points into variance, squared bias, and
irreducible noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core import Context, LabeledExample, Query, Schema
from ..errors import DivergentSeries, GeneratorLacksTruth, LengthMismatch
from ..ingestion.synthetic import Concept, DriftSpec
from ..predictor.base import Predictor, PredictorConfig, build_predictor

_ZETA_TOL = 1e-14

# Bernoulli numbers B_2, B_4, ..., B_24
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
)


def zeta_tail_sum(s: float, start: int) -> float:
    """Sum of k**(-s) over k > start, via Euler-Maclaurin off the cut point.

    Requires s > 1 (the tail diverges otherwise) and start >= 1. The
    correction series is truncated once a term falls below a 1e-14 relative
    tolerance; because the series is asymptotic this only happens when
    ``start`` is large enough relative to s, so too small a cut raises
    ArithmeticError instead of returning a silently degraded value.
    """
    if s <= 1.0:
        raise DivergentSeries(f"tail of k**(-s) needs s > 1, got s={s}")
    if start < 1:
        raise ValueError(f"start must be >= 1, got {start}")
    n = float(start)
    total = n ** (1.0 - s) / (s - 1.0) - 0.5 * n ** (-s)
    rising = s  # s * (s+1) * ... * (s + 2j - 2), grown incrementally
    power = n ** (-s - 1.0)
    factorial = 2.0  # (2j)!
    previous = math.inf
    for j, bernoulli in enumerate(_BERNOULLI, start=1):
        term = bernoulli / factorial * rising * power
        if abs(term) >= previous:
            break  # asymptotic turnaround: later terms only get worse
        total += term
        if abs(term) < _ZETA_TOL * max(1.0, abs(total)):
            return total
        previous = abs(term)
        rising *= (s + 2.0 * j - 1.0) * (s + 2.0 * j)
        power /= n * n
        factorial *= (2.0 * j + 1.0) * (2.0 * j + 2.0)
    raise ArithmeticError(
        f"Euler-Maclaurin correction stalled above tolerance for s={s}, "
        f"start={start}; use a larger start"
    )


def _zeta(s: float) -> float:
    """zeta(s) for real s > 1, accurate to ~1e-14 relative."""
    # cut grows with s so the correction terms shrink well before turnaround
    cut = max(32, int(math.ceil(2.0 * s)))
    head = math.fsum(k ** -s for k in range(1, cut + 1))
    return head + zeta_tail_sum(s, cut)


@dataclass(frozen=True)
class LipschitzBoundConfig:
    """Sensitivity profile of a context-conditioned predictor.

    Swapping the i-th most recent context example moves the prediction by at
    most ``delta * i**(-alpha)``; ``t`` is the deviation the tail bound is
    evaluated at. ``alpha`` must exceed 1/2 or the squared sensitivities sum
    to infinity and no concentration statement exists.
    """

    delta: float
    alpha: float
    t: float

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0.0):
            raise ValueError(f"delta must be positive and finite, got {self.delta}")
        if not (math.isfinite(self.t) and self.t > 0.0):
            raise ValueError(f"t must be positive and finite, got {self.t}")
        if not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha}")
        if self.alpha <= 0.5:
            raise DivergentSeries(
                f"alpha={self.alpha}: squared sensitivities need alpha > 0.5 to converge"
            )


def mcdiarmid_bound(config: LipschitzBoundConfig, n_terms: Optional[int] = None) -> float:
    """P(|prediction - mean prediction| >= t) upper bound, clipped to 1.

    ``n_terms=None`` sums the full infinite sensitivity series,
    delta^2 * zeta(2*alpha), evaluated to 1e-14; an integer ``n_terms``
    models a context truncated to that many examples and sums the series
    exactly that far.
    """
    s = 2.0 * config.alpha
    if n_terms is None:
        total = _zeta(s)
    else:
        if n_terms < 1:
            raise ValueError(f"n_terms must be >= 1, got {n_terms}")
        total = math.fsum(i ** -s for i in range(1, n_terms + 1))
    norm_squared = config.delta * config.delta * total
    return min(1.0, 2.0 * math.exp(-2.0 * config.t * config.t / norm_squared))


@dataclass(frozen=True)
class ProbeCell:
    """Error decomposition for one (context size, probe point) pair.

    ``mse`` is measured against labels drawn from the true conditional, so up
    to Monte-Carlo error it equals variance + bias_squared + noise.
    """

    context_size: int
    probe_index: int
    variance: float
    bias_squared: float
    noise: float
    mse: float

    @property
    def decomposition_gap(self) -> float:
        return self.mse - (self.variance + self.bias_squared + self.noise)


@dataclass(frozen=True)
class VarianceReport:
    cells: Tuple[ProbeCell, ...]
    context_sizes: Tuple[int, ...]
    resamples: int
    seed: int
    probe_features: Tuple[Tuple[float, ...], ...]
    n_classes: int

    def cells_at(self, context_size: int) -> Tuple[ProbeCell, ...]:
        return tuple(c for c in self.cells if c.context_size == context_size)


def _stationary_concept(generator, t: int) -> Concept:
    if isinstance(generator, Concept):
        return generator
    if isinstance(generator, DriftSpec):
        return generator.concept_at(t)
    raise GeneratorLacksTruth(
        f"{type(generator).__name__} does not expose its true conditional; "
        "pass a Concept or DriftSpec"
    )


def variance_probe(
    generator: Union[Concept, DriftSpec],
    predictor: Union[Predictor, PredictorConfig],
    context_sizes: Sequence[int],
    probe_queries: Union[int, Sequence[Sequence[float]]] = 8,
    resamples: int = 30,
    seed: int = 0,
    context_at: int = 0,
    truth_at: Optional[int] = None,
) -> VarianceReport:
    """Empirical bias/variance/noise decomposition over resampled contexts.

    For each context size n, draws ``resamples`` independent contexts of n
    labeled examples from the concept active at stream position
    ``context_at``, asks the predictor for class probabilities at the fixed
    probe points, and measures across the resamples, per probe point:

    * variance: total variance of the predicted probability vector,
    * bias_squared: squared distance of the mean prediction from the true
      conditional of the concept at ``truth_at`` (defaults to ``context_at``),
    * noise: irreducible Bayes term sum_y p*(y)(1 - p*(y)),
    * mse: mean squared distance to one-hot labels sampled from the truth.

    Setting ``truth_at`` inside a later segment scores predictions built from
    stale contexts against the current truth, isolating drift-induced bias.

    ``probe_queries`` is either explicit feature rows or a count to sample
    from the truth concept. Predictors that ignore the context (constant
    output) come out with zero variance at every size.
    """
    context_concept = _stationary_concept(generator, context_at)
    truth_concept = _stationary_concept(
        generator, context_at if truth_at is None else truth_at
    )
    sizes = tuple(int(n) for n in context_sizes)
    if not sizes or any(n < 1 for n in sizes):
        raise ValueError(f"context sizes must be positive, got {context_sizes!r}")
    if resamples < 2:
        raise ValueError(f"need at least 2 resamples, got {resamples}")
    n_features = context_concept.n_features
    n_classes = context_concept.n_classes

    rng = np.random.default_rng(seed)
    if isinstance(probe_queries, (int, np.integer)):
        if probe_queries < 1:
            raise ValueError(f"need at least 1 probe query, got {probe_queries}")
        probes, _ = truth_concept.sample(rng, int(probe_queries))
    else:
        probes = np.asarray(probe_queries, dtype=np.float64)
        if probes.ndim != 2 or probes.shape[1] != n_features:
            raise LengthMismatch(
                f"probe queries must be rows of {n_features} features"
            )
    n_probes = probes.shape[0]

    if isinstance(predictor, PredictorConfig):
        predictor = build_predictor(
            predictor, Schema.numeric(n_features, n_classes)
        )
    queries = [Query(features=x) for x in probes]
    truth = np.stack([truth_concept.posterior(x) for x in probes])
    noise = (truth * (1.0 - truth)).sum(axis=1)

    cells: List[ProbeCell] = []
    for size in sizes:
        predictions = np.empty((resamples, n_probes, n_classes))
        onehot = np.zeros((resamples, n_probes, n_classes))
        for r in range(resamples):
            features, labels = context_concept.sample(rng, size)
            examples = tuple(
                LabeledExample(features=features[i], label=int(labels[i]), arrival_index=i)
                for i in range(size)
            )
            ctx = Context.build(examples, n_long=0, validate=False)
            for p, dist in enumerate(predictor.predict(ctx, queries)):
                predictions[r, p] = dist.probs
            for p in range(n_probes):
                onehot[r, p, rng.choice(n_classes, p=truth[p])] = 1.0
        for p in range(n_probes):
            mean_prediction = predictions[:, p].mean(axis=0)
            cells.append(
                ProbeCell(
                    context_size=size,
                    probe_index=p,
                    variance=float(predictions[:, p].var(axis=0).sum()),
                    bias_squared=float(((mean_prediction - truth[p]) ** 2).sum()),
                    noise=float(noise[p]),
                    mse=float(
                        ((predictions[:, p] - onehot[:, p]) ** 2).sum(axis=1).mean()
                    ),
                )
            )
    return VarianceReport(
        cells=tuple(cells),
        context_sizes=sizes,
        resamples=resamples,
        seed=seed,
        probe_features=tuple(tuple(float(v) for v in row) for row in probes),
        n_classes=n_classes,
    )
