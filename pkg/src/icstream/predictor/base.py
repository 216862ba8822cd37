"""Predictor contract: classify queries against a context, nothing else.

A predictor approximates p(y | context, x). It must never see a query's true
label through ``predict``; labels reach it only through ``record_label``
after the evaluation loop has scored the instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Sequence

from ..core import ClassDistribution, Context, Query, Schema

KNN = "knn"
NAIVE_BAYES = "naive_bayes"
NO_CHANGE = "no_change"
MAJORITY_CLASS = "majority_class"
REMOTE = "remote"

KINDS = (KNN, NAIVE_BAYES, NO_CHANGE, MAJORITY_CLASS, REMOTE)

EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class PredictorConfig:
    """Which predictor to build and its knobs.

    Only the fields of the selected ``kind`` matter; the rest keep their
    defaults. ``seed`` is forwarded to the remote model so repeated requests
    are reproducible.
    """

    kind: str
    k: int = 5
    distance: str = EUCLIDEAN
    laplace: float = 1.0
    endpoint: str = ""
    batch_size: int = 10
    timeout_ms: float = 5000.0
    n_permutations: int = 4
    retries: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown predictor kind {self.kind!r}")
        if self.kind == KNN:
            if self.k < 1:
                raise ValueError(f"k must be >= 1, got {self.k}")
            if self.distance != EUCLIDEAN:
                raise ValueError(f"unsupported distance {self.distance!r}")
        if self.kind == NAIVE_BAYES and not self.laplace > 0:
            raise ValueError(f"laplace smoothing must be > 0, got {self.laplace}")
        if self.kind == REMOTE:
            if not self.endpoint:
                raise ValueError("remote predictor needs an endpoint")
            if self.batch_size < 1:
                raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
            if self.n_permutations < 1:
                raise ValueError(
                    f"n_permutations must be >= 1, got {self.n_permutations}"
                )
            if self.timeout_ms <= 0:
                raise ValueError(f"timeout_ms must be > 0, got {self.timeout_ms}")
            if self.retries < 0:
                raise ValueError(f"retries must be >= 0, got {self.retries}")

    def with_endpoint(self, endpoint: str) -> "PredictorConfig":
        return replace(self, endpoint=endpoint)


class Predictor:
    """Base class; subclasses override predict and optionally record_label."""

    def __init__(self, schema: Schema):
        self.schema = schema

    def predict(self, ctx: Context, queries: Sequence[Query]) -> List[ClassDistribution]:
        raise NotImplementedError

    def record_label(self, example) -> None:
        """Reveal a label after scoring. Default: stateless, nothing to do."""

    def close(self) -> None:
        """Release any transport resources. Default: nothing to release."""

    def _uniform_batch(self, n: int) -> List[ClassDistribution]:
        uniform = ClassDistribution.uniform(self.schema.n_classes)
        return [uniform] * n


def build_predictor(config: PredictorConfig, schema: Schema) -> Predictor:
    """Instantiate the predictor a config describes."""
    from .local import (
        GaussianNaiveBayesPredictor,
        KnnPredictor,
        MajorityClassPredictor,
        NoChangePredictor,
    )
    from .remote import RemotePredictor

    if config.kind == KNN:
        return KnnPredictor(schema, k=config.k)
    if config.kind == NAIVE_BAYES:
        return GaussianNaiveBayesPredictor(schema, laplace=config.laplace)
    if config.kind == NO_CHANGE:
        return NoChangePredictor(schema)
    if config.kind == MAJORITY_CLASS:
        return MajorityClassPredictor(schema)
    return RemotePredictor(schema, config)
