"""Seeded synthetic streams with known ground truth.

Two generator families:

* ``gaussian_drift_stream`` concatenates concept segments, each a mixture of
  per-class diagonal Gaussians with its own label priors. Segment boundaries
  are abrupt, or gradual over a window in which instances are drawn from the
  incoming concept with linearly rising probability.
* ``rotating_hyperplane_stream`` labels uniform points by the side of a
  hyperplane whose normal vector rotates in the plane of the first two axes,
  with optional label-flip noise.

Both expose the true conditional class distribution at any (t, x), which the
diagnostic probes need, and are byte-for-byte reproducible from their seed.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core import Schema
from ..errors import InvalidSpec
from .base import SYNTHETIC, Origin, StreamSource

ABRUPT = "abrupt"
GRADUAL = "gradual"

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Concept:
    """One stationary generating distribution.

    ``priors`` are label weights (normalized at construction); class y emits
    x ~ Normal(means[y], diag(scales[y]^2)).
    """

    priors: np.ndarray
    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        priors = np.asarray(self.priors, dtype=np.float64)
        means = np.asarray(self.means, dtype=np.float64)
        scales = np.asarray(self.scales, dtype=np.float64)
        if priors.ndim != 1 or priors.size == 0:
            raise InvalidSpec("priors must be a non-empty vector")
        if (priors < 0).any() or not np.isfinite(priors).all() or priors.sum() <= 0:
            raise InvalidSpec("priors must be non-negative, finite, not all zero")
        if means.ndim != 2 or means.shape[0] != priors.size:
            raise InvalidSpec("means must have one row per class")
        scales = np.broadcast_to(scales, means.shape).copy()
        if (scales <= 0).any() or not np.isfinite(scales).all():
            raise InvalidSpec("scales must be positive and finite")
        if not np.isfinite(means).all():
            raise InvalidSpec("means must be finite")
        priors = priors / priors.sum()
        for arr in (priors, means, scales):
            arr.setflags(write=False)
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "scales", scales)

    @property
    def n_classes(self) -> int:
        return int(self.priors.size)

    @property
    def n_features(self) -> int:
        return int(self.means.shape[1])

    def log_joint(self, x: np.ndarray) -> np.ndarray:
        """log(priors[y] * density(x | y)) for every class y."""
        z = (x[None, :] - self.means) / self.scales
        log_density = -0.5 * (z * z).sum(axis=1) - np.log(self.scales).sum(axis=1)
        log_density -= 0.5 * self.n_features * _LOG_2PI
        with np.errstate(divide="ignore"):
            return np.log(self.priors) + log_density

    def posterior(self, x: np.ndarray) -> np.ndarray:
        """Exact p(y | x) under this concept alone."""
        return _mixture_posterior(((1.0, self),), np.asarray(x, dtype=np.float64))

    def sample(self, rng: np.random.Generator, n: int):
        """Draw n iid (features, label) pairs; features shaped (n, d)."""
        labels = rng.choice(self.n_classes, size=n, p=self.priors)
        noise = rng.standard_normal((n, self.n_features))
        features = self.means[labels] + self.scales[labels] * noise
        return features, labels


@dataclass(frozen=True)
class Segment:
    concept: Concept
    length: int

    def __post_init__(self):
        if self.length <= 0:
            raise InvalidSpec(f"segment length must be positive, got {self.length}")


@dataclass(frozen=True)
class DriftSpec:
    """A piecewise-stationary stream plan: segments plus a transition style."""

    segments: Tuple[Segment, ...]
    transition: str = ABRUPT
    width: int = 0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise InvalidSpec("need at least one segment")
        first = self.segments[0].concept
        for seg in self.segments:
            if seg.concept.n_classes != first.n_classes:
                raise InvalidSpec("all segments must share the class count")
            if seg.concept.n_features != first.n_features:
                raise InvalidSpec("all segments must share the feature count")
        if self.transition not in (ABRUPT, GRADUAL):
            raise InvalidSpec(f"unknown transition {self.transition!r}")
        if self.transition == GRADUAL:
            if self.width < 1:
                raise InvalidSpec("gradual transition needs width >= 1")
            if any(self.width >= seg.length for seg in self.segments):
                raise InvalidSpec("transition width must be smaller than every segment")
        elif self.width != 0:
            raise InvalidSpec("width is only meaningful for gradual transitions")

    @property
    def total_length(self) -> int:
        return sum(seg.length for seg in self.segments)

    @property
    def n_classes(self) -> int:
        return self.segments[0].concept.n_classes

    @property
    def n_features(self) -> int:
        return self.segments[0].concept.n_features

    def concept_at(self, t: int) -> Concept:
        """The concept owning position t (by segment, ignoring blend windows)."""
        if not 0 <= t < self.total_length:
            raise InvalidSpec(f"position {t} outside stream of length {self.total_length}")
        total = 0
        for seg in self.segments:
            total += seg.length
            if t < total:
                return seg.concept
        raise AssertionError("unreachable")


def _mixture_posterior(parts: Sequence[Tuple[float, Concept]], x: np.ndarray) -> np.ndarray:
    """Class posterior under a weighted mixture of concepts."""
    logs = []
    weights = []
    for weight, concept in parts:
        if weight <= 0.0:
            continue
        logs.append(concept.log_joint(x) + math.log(weight))
        weights.append(weight)
    stacked = np.stack(logs)
    shift = stacked.max()
    if not np.isfinite(shift):
        # every class impossible at this x under every part: fall back to uniform
        n = stacked.shape[1]
        return np.full(n, 1.0 / n)
    joint = np.exp(stacked - shift).sum(axis=0)
    return joint / joint.sum()


class GaussianDriftSource(StreamSource):
    """Finite stream realized from a DriftSpec.

    ``class_posterior(t, x)`` returns the exact conditional distribution the
    instance at position t was drawn from, including the blend inside a
    gradual transition window.
    """

    def __init__(self, spec: DriftSpec, seed: int):
        super().__init__(
            Schema.numeric(spec.n_features, spec.n_classes),
            Origin(SYNTHETIC, "gaussian_drift", seed),
        )
        self.spec = spec
        self._rng = np.random.default_rng(seed)
        self._starts = []
        total = 0
        for seg in spec.segments:
            self._starts.append(total)
            total += seg.length
        self._total = total
        # cumulative label priors per segment, for inverse-CDF label draws
        self._prior_cdfs = [np.cumsum(seg.concept.priors) for seg in spec.segments]

    def __len__(self) -> int:
        return self._total

    def _blend_at(self, t: int) -> Tuple[int, float]:
        """Segment index and probability of drawing from the next concept."""
        i = bisect_right(self._starts, t) - 1
        if self.spec.transition == GRADUAL and i + 1 < len(self.spec.segments):
            boundary = self._starts[i] + self.spec.segments[i].length
            offset = t - (boundary - self.spec.width)
            if offset >= 0:
                return i, (offset + 1.0) / (self.spec.width + 1.0)
        return i, 0.0

    def _concept_parts(self, t: int) -> Tuple[Tuple[float, Concept], ...]:
        i, p_next = self._blend_at(t)
        segments = self.spec.segments
        if p_next <= 0.0:
            return ((1.0, segments[i].concept),)
        return ((1.0 - p_next, segments[i].concept), (p_next, segments[i + 1].concept))

    def class_posterior(self, t: int, x: np.ndarray) -> np.ndarray:
        if not 0 <= t < self._total:
            raise InvalidSpec(f"position {t} outside stream of length {self._total}")
        return _mixture_posterior(self._concept_parts(t), np.asarray(x, dtype=np.float64))

    def _produce(self):
        t = self.position
        if t >= self._total:
            return None
        i, p_next = self._blend_at(t)
        if p_next > 0.0 and self._rng.random() < p_next:
            i += 1
        concept = self.spec.segments[i].concept
        label = int(np.searchsorted(self._prior_cdfs[i], self._rng.random(), side="right"))
        label = min(label, concept.n_classes - 1)
        features = (
            concept.means[label]
            + concept.scales[label] * self._rng.standard_normal(concept.n_features)
        )
        features.setflags(write=False)
        return features, label


def gaussian_drift_stream(spec: DriftSpec, seed: int) -> GaussianDriftSource:
    """Materialize a DriftSpec as a seeded stream source."""
    return GaussianDriftSource(spec, seed)


class RotatingHyperplaneSource(StreamSource):
    """Uniform points in [-1, 1]^d labeled by a slowly rotating hyperplane.

    The boundary normal at position t is
    ``[cos(rate * t), sin(rate * t), 0, ...]``; rate is radians per instance.
    With ``noise`` > 0 each label is flipped with that probability.
    """

    def __init__(
        self,
        dims: int,
        rotation_rate: float,
        noise: float,
        seed: int,
        length: Optional[int] = None,
    ):
        if dims < 2:
            raise InvalidSpec("need at least 2 dimensions to rotate in")
        if not 0.0 <= noise <= 1.0:
            raise InvalidSpec(f"noise must be a probability, got {noise}")
        if not math.isfinite(rotation_rate):
            raise InvalidSpec("rotation rate must be finite")
        if length is not None and length <= 0:
            raise InvalidSpec(f"length must be positive, got {length}")
        super().__init__(
            Schema.numeric(dims, 2),
            Origin(SYNTHETIC, "rotating_hyperplane", seed),
        )
        self.dims = dims
        self.rotation_rate = float(rotation_rate)
        self.noise = float(noise)
        self.length = length
        self._rng = np.random.default_rng(seed)

    def normal_at(self, t: int) -> np.ndarray:
        w = np.zeros(self.dims)
        angle = self.rotation_rate * t
        w[0] = math.cos(angle)
        w[1] = math.sin(angle)
        return w

    def class_posterior(self, t: int, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        clean = 1.0 if float(self.normal_at(t) @ x) >= 0.0 else 0.0
        p_one = clean * (1.0 - self.noise) + (1.0 - clean) * self.noise
        return np.array([1.0 - p_one, p_one])

    def _produce(self):
        t = self.position
        if self.length is not None and t >= self.length:
            return None
        x = self._rng.uniform(-1.0, 1.0, self.dims)
        label = 1 if float(self.normal_at(t) @ x) >= 0.0 else 0
        if self.noise > 0.0 and self._rng.random() < self.noise:
            label = 1 - label
        x.setflags(write=False)
        return x, label


def rotating_hyperplane_stream(
    dims: int,
    rotation_rate: float,
    noise: float,
    seed: int,
    length: Optional[int] = None,
) -> RotatingHyperplaneSource:
    """Seeded gradual-drift benchmark stream."""
    return RotatingHyperplaneSource(dims, rotation_rate, noise, seed, length)
