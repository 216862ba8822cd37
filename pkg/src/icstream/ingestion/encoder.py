"""Online feature encoding: running z-scores and ordinal categorical maps.

Statistics are strictly causal. Encoding the example at position t uses only
what was learned from positions 0..t-1; the state is updated afterwards, so a
value never participates in its own scaling.
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..core import CATEGORICAL, LabeledExample, Schema
from ..errors import NonFinite, UnknownCategoricalValue

MISSING_TOKENS = frozenset({"", "?"})


class _RunningMoments:
    """Welford accumulator for mean and population variance of one column."""

    __slots__ = ("count", "mean", "_m2")

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def update(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (value - self.mean)

    @property
    def std(self) -> float:
        if self.count == 0:
            return 0.0
        return math.sqrt(self._m2 / self.count)


class EncoderState:
    """Mutable per-stream encoding state.

    Numeric columns carry running moments used for z-scoring once at least
    two values have been observed (before that the value passes through
    unchanged; with zero running spread it is only centered). Categorical
    columns carry value -> ordinal maps, seeded from ``declared_values`` when
    the format fixes the category order, grown first-seen otherwise.

    ``strict`` freezes the categorical maps: an unseen value then raises
    instead of extending the map.

    Missing numeric values are imputed with the running mean and counted in
    ``imputed_count``; missing categorical values encode as -1 and are counted
    in ``missing_categorical_count``. Imputed values never update the running
    statistics.
    """

    def __init__(
        self,
        schema: Schema,
        strict: bool = False,
        declared_values: Optional[Dict[int, Sequence[str]]] = None,
        normalize: bool = True,
    ):
        self.schema = schema
        self.strict = strict
        self.normalize = normalize
        self.imputed_count = 0
        self.missing_categorical_count = 0
        self._moments: List[Optional[_RunningMoments]] = []
        self._categories: List[Optional[Dict[str, int]]] = []
        for idx, kind in enumerate(schema.feature_kinds):
            if kind.kind == CATEGORICAL:
                mapping: Dict[str, int] = {}
                if declared_values and idx in declared_values:
                    for value in declared_values[idx]:
                        mapping[value] = len(mapping)
                self._moments.append(None)
                self._categories.append(mapping)
            else:
                self._moments.append(_RunningMoments())
                self._categories.append(None)

    def _encode_numeric(self, idx: int, raw) -> float:
        moments = self._moments[idx]
        missing = isinstance(raw, str) and raw.strip() in MISSING_TOKENS
        if missing:
            self.imputed_count += 1
            value = moments.mean
        else:
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise NonFinite(
                    f"feature {self.schema.feature_names[idx]!r}: not a number: {raw!r}"
                )
            if not math.isfinite(value):
                raise NonFinite(
                    f"feature {self.schema.feature_names[idx]!r}: non-finite value {value!r}"
                )
        if self.normalize and moments.count >= 2:
            spread = moments.std
            encoded = (value - moments.mean) / spread if spread > 0.0 else value - moments.mean
        else:
            encoded = value
        if not missing:
            moments.update(value)
        return encoded

    def _encode_categorical(self, idx: int, raw) -> float:
        key = str(raw).strip()
        if key in MISSING_TOKENS:
            self.missing_categorical_count += 1
            return -1.0
        mapping = self._categories[idx]
        if key not in mapping:
            if self.strict:
                raise UnknownCategoricalValue(
                    f"feature {self.schema.feature_names[idx]!r}: unseen value {key!r}"
                )
            mapping[key] = len(mapping)
        return float(mapping[key])

    def encode_features(self, values: Sequence) -> np.ndarray:
        out = np.empty(self.schema.n_features, dtype=np.float64)
        for idx in range(self.schema.n_features):
            if self._categories[idx] is not None:
                out[idx] = self._encode_categorical(idx, values[idx])
            else:
                out[idx] = self._encode_numeric(idx, values[idx])
        out.setflags(write=False)
        return out


def encode(state: EncoderState, values: Sequence, label: int, arrival_index: int = -1) -> LabeledExample:
    """Encode one raw row into a LabeledExample using (then updating) ``state``."""
    features = state.encode_features(values)
    return LabeledExample(features=features, label=int(label), arrival_index=arrival_index)
