"""Local reference predictors; no model weights required.

All of them honor the same contract as the remote model: one distribution
per query, uniform on an empty context, deterministic, and blind to the
query's true label.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence

import numpy as np

from ..core import ClassDistribution, Context, Query, Schema
from .base import Predictor

KNN_EPSILON = 1e-12
VARIANCE_FLOOR = 1e-9


def _knn_weights(ctx: Context, query_features: np.ndarray, k: int, n_classes: int) -> np.ndarray:
    diff = ctx.features - query_features
    distances = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if k < distances.shape[0]:
        # take everything tied with the k-th distance so the selected set
        # does not depend on the order of the context
        cutoff = np.partition(distances, k - 1)[k - 1]
        nearest = distances <= cutoff
        distances = distances[nearest]
        labels = ctx.labels[nearest]
    else:
        labels = ctx.labels
    weights = 1.0 / (distances + KNN_EPSILON)
    return np.bincount(labels, weights=weights, minlength=n_classes)


def knn_distribution(ctx: Context, query: Query, k: int) -> ClassDistribution:
    """Inverse-distance-weighted vote over the k nearest context examples.

    Uses all of the context when it holds fewer than k examples, and widens
    the neighbourhood to everything tied with the k-th distance so the vote
    is independent of context order. The class count is inferred as
    max(label)+1; prefer KnnPredictor when the schema is at hand, it pads
    the distribution to the full class set.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(ctx) == 0:
        raise ValueError("empty context has no class information; use KnnPredictor")
    n_classes = int(ctx.labels.max()) + 1
    return ClassDistribution.from_weights(
        _knn_weights(ctx, query.features, k, n_classes)
    )


class KnnPredictor(Predictor):
    """k-nearest-neighbour vote with 1/(distance+eps) weights."""

    def __init__(self, schema: Schema, k: int = 5):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        super().__init__(schema)
        self.k = k

    def predict(self, ctx: Context, queries: Sequence[Query]) -> List[ClassDistribution]:
        if len(ctx) == 0:
            return self._uniform_batch(len(queries))
        return [
            ClassDistribution.from_weights(
                _knn_weights(ctx, q.features, self.k, self.schema.n_classes)
            )
            for q in queries
        ]


class GaussianNaiveBayesPredictor(Predictor):
    """Per-class diagonal Gaussian fit to the context at every call.

    Class priors are Laplace-smoothed: (count + a) / (|ctx| + a*K). Classes
    absent from the context use the pooled mean and variance of the whole
    context, and single-example classes borrow the pooled variance, so their
    likelihood is a neutral baseline rather than a degenerate spike.
    """

    def __init__(self, schema: Schema, laplace: float = 1.0):
        if not laplace > 0:
            raise ValueError(f"laplace smoothing must be > 0, got {laplace}")
        super().__init__(schema)
        self.laplace = laplace

    def predict(self, ctx: Context, queries: Sequence[Query]) -> List[ClassDistribution]:
        n_classes = self.schema.n_classes
        if len(ctx) == 0:
            return self._uniform_batch(len(queries))

        features, labels = ctx.features, ctx.labels
        n = features.shape[0]
        pooled_mean = features.mean(axis=0)
        pooled_var = np.maximum(features.var(axis=0), VARIANCE_FLOOR)

        counts = np.bincount(labels, minlength=n_classes).astype(np.float64)
        means = np.tile(pooled_mean, (n_classes, 1))
        variances = np.tile(pooled_var, (n_classes, 1))
        for label in np.flatnonzero(counts):
            rows = features[labels == label]
            means[label] = rows.mean(axis=0)
            if rows.shape[0] >= 2:
                variances[label] = np.maximum(rows.var(axis=0), VARIANCE_FLOOR)

        log_priors = np.log((counts + self.laplace) / (n + self.laplace * n_classes))
        log_norm = -0.5 * (np.log(2.0 * math.pi * variances)).sum(axis=1)

        out = []
        for q in queries:
            z = (q.features[None, :] - means) ** 2 / variances
            log_post = log_priors + log_norm - 0.5 * z.sum(axis=1)
            log_post -= log_post.max()
            out.append(ClassDistribution.from_weights(np.exp(log_post)))
        return out


class NoChangePredictor(Predictor):
    """Predicts the last revealed label; uniform before any label is known."""

    def __init__(self, schema: Schema):
        super().__init__(schema)
        self._last_label: Optional[int] = None

    def predict(self, ctx: Context, queries: Sequence[Query]) -> List[ClassDistribution]:
        if self._last_label is None:
            return self._uniform_batch(len(queries))
        dist = ClassDistribution.point_mass(self._last_label, self.schema.n_classes)
        return [dist] * len(queries)

    def record_label(self, example) -> None:
        self._last_label = example.label


class MajorityClassPredictor(Predictor):
    """Predicts the running label frequencies; uniform before any label."""

    def __init__(self, schema: Schema):
        super().__init__(schema)
        self._counts = np.zeros(schema.n_classes, dtype=np.int64)

    def predict(self, ctx: Context, queries: Sequence[Query]) -> List[ClassDistribution]:
        if self._counts.sum() == 0:
            return self._uniform_batch(len(queries))
        dist = ClassDistribution.from_weights(self._counts)
        return [dist] * len(queries)

    def record_label(self, example) -> None:
        self._counts[example.label] += 1
