"""Domain types shared by all engine modules.

Everything here is immutable after construction and safe to share across
threads. Feature vectors are float64 numpy arrays with the write flag
cleared; mutating them raises.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    InvalidDistribution,
    LengthMismatch,
    NonFiniteFeature,
    UnknownLabel,
)

PROB_TOLERANCE = 1e-9

NUMERIC = "numeric"
CATEGORICAL = "categorical"


def _frozen_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise LengthMismatch(f"expected 1-D vector, got shape {arr.shape}")
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FeatureKind:
    """Declared kind of one feature column.

    ``cardinality`` is the declared number of categories for categorical
    features; ``None`` means the category set is open (grown while streaming).
    """

    kind: str
    cardinality: Optional[int] = None

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.kind == NUMERIC and self.cardinality is not None:
            raise ValueError("numeric features carry no cardinality")
        if self.cardinality is not None and self.cardinality < 1:
            raise ValueError("cardinality must be >= 1")

    @staticmethod
    def numeric() -> "FeatureKind":
        return FeatureKind(NUMERIC)

    @staticmethod
    def categorical(cardinality: Optional[int] = None) -> "FeatureKind":
        return FeatureKind(CATEGORICAL, cardinality)


@dataclass(frozen=True)
class Schema:
    """Fixed description of the stream: feature columns and the class set.

    The class set is fixed before streaming begins; labels outside it are a
    schema error, never an online extension.
    """

    feature_names: tuple
    feature_kinds: tuple
    class_names: tuple

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "feature_kinds", tuple(self.feature_kinds))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if not self.feature_names:
            raise ValueError("schema needs at least one feature")
        if len(self.feature_names) != len(self.feature_kinds):
            raise ValueError("feature_names and feature_kinds lengths differ")
        if not self.class_names:
            raise ValueError("schema needs at least one class")
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("duplicate class names")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @staticmethod
    def numeric(n_features: int, n_classes: int) -> "Schema":
        """Convenience schema for all-numeric synthetic streams."""
        return Schema(
            feature_names=tuple(f"f{i}" for i in range(n_features)),
            feature_kinds=tuple(FeatureKind.numeric() for _ in range(n_features)),
            class_names=tuple(f"c{i}" for i in range(n_classes)),
        )


@dataclass(frozen=True)
class LabeledExample:
    """One stream instance after encoding: features, label, stream position."""

    features: np.ndarray
    label: int
    arrival_index: int

    def __post_init__(self):
        if not isinstance(self.features, np.ndarray):
            object.__setattr__(self, "features", _frozen_vector(self.features))


@dataclass(frozen=True)
class Query:
    """An unlabeled instance to be classified. Deliberately has no label field."""

    features: np.ndarray
    arrival_index: int = -1

    def __post_init__(self):
        if not isinstance(self.features, np.ndarray):
            object.__setattr__(self, "features", _frozen_vector(self.features))


def validate_example(schema: Schema, raw, label: int) -> LabeledExample:
    """Validate one raw numeric row against the schema.

    Never coerces silently: wrong length, non-finite values and out-of-range
    labels each raise their dedicated error.
    """
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != schema.n_features:
        raise LengthMismatch(
            f"expected {schema.n_features} features, got {arr.shape}"
        )
    if not np.isfinite(arr).all():
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise NonFiniteFeature(f"feature {schema.feature_names[bad]!r} is not finite")
    if not (0 <= int(label) < schema.n_classes):
        raise UnknownLabel(f"label index {label} outside {schema.n_classes} classes")
    frozen = np.array(arr, copy=True)
    frozen.setflags(write=False)
    return LabeledExample(features=frozen, label=int(label), arrival_index=-1)


@dataclass(frozen=True)
class ClassDistribution:
    """Normalized probability vector over the schema's class set."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] == 0:
            raise InvalidDistribution(f"expected non-empty 1-D vector, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise InvalidDistribution("distribution contains non-finite entries")
        if (arr < 0.0).any():
            raise InvalidDistribution("distribution contains negative entries")
        total = float(arr.sum())
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise InvalidDistribution(f"probabilities sum to {total!r}, not 1")
        arr = np.array(arr, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def n_classes(self) -> int:
        return int(self.probs.shape[0])

    @staticmethod
    def uniform(n_classes: int) -> "ClassDistribution":
        return ClassDistribution(np.full(n_classes, 1.0 / n_classes))

    @staticmethod
    def point_mass(label: int, n_classes: int) -> "ClassDistribution":
        probs = np.zeros(n_classes)
        probs[label] = 1.0
        return ClassDistribution(probs)

    @staticmethod
    def from_weights(weights) -> "ClassDistribution":
        """Normalize a vector of non-negative scores; zero total becomes uniform."""
        arr = np.asarray(weights, dtype=np.float64)
        if (arr < 0.0).any() or not np.isfinite(arr).all():
            raise InvalidDistribution("weights must be finite and non-negative")
        total = arr.sum()
        if total <= 0.0:
            return ClassDistribution.uniform(arr.shape[0])
        probs = arr / total
        # guard against accumulated rounding drift
        probs = probs / probs.sum()
        return ClassDistribution(probs)


def argmax_label(dist: ClassDistribution) -> int:
    """Most probable class; ties resolve to the lowest class index."""
    return int(np.argmax(dist.probs))


@dataclass(frozen=True)
class Context:
    """The in-context example set handed to a predictor.

    Long-term portion first, then short-term, each in chronological order.
    ``features``/``labels``/``arrivals`` are parallel array views of
    ``examples``, pre-assembled so predictors never rebuild matrices on the
    hot path.
    """

    examples: tuple
    features: np.ndarray
    labels: np.ndarray
    arrivals: np.ndarray
    n_long: int = 0

    def __len__(self) -> int:
        return len(self.examples)

    @staticmethod
    def empty(n_features: int) -> "Context":
        return Context(
            examples=(),
            features=np.empty((0, n_features)),
            labels=np.empty(0, dtype=np.int64),
            arrivals=np.empty(0, dtype=np.int64),
            n_long=0,
        )

    @staticmethod
    def build(examples: Sequence[LabeledExample], n_long: int = 0, validate: bool = True) -> "Context":
        """Assemble a context from example objects.

        ``validate`` checks the ordering invariants (non-decreasing arrival
        within each portion, no duplicate arrival index); the memory module
        constructs trusted contexts with ``validate=False``.
        """
        examples = tuple(examples)
        if examples:
            features = np.stack([ex.features for ex in examples])
            labels = np.fromiter((ex.label for ex in examples), dtype=np.int64, count=len(examples))
            arrivals = np.fromiter(
                (ex.arrival_index for ex in examples), dtype=np.int64, count=len(examples)
            )
        else:
            features = np.empty((0, 0))
            labels = np.empty(0, dtype=np.int64)
            arrivals = np.empty(0, dtype=np.int64)
        if validate and examples:
            if len(set(arrivals.tolist())) != len(examples):
                raise ValueError("duplicate arrival_index in context")
            for portion in (arrivals[:n_long], arrivals[n_long:]):
                if portion.size > 1 and (np.diff(portion) < 0).any():
                    raise ValueError("context portion not in chronological order")
        return Context(
            examples=examples,
            features=features,
            labels=labels,
            arrivals=arrivals,
            n_long=n_long,
        )
