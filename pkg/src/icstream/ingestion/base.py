"""Stream sources: single-consumer iterators of encoded, validated examples."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from ..core import LabeledExample, Schema

CSV = "csv"
ARFF = "arff"
SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class Origin:
    """Where a stream came from: a file format or a seeded generator."""

    kind: str
    name: str
    seed: Optional[int] = None


class StreamSource:
    """Base for all example streams.

    A source yields ``LabeledExample`` objects with arrival_index counting up
    from 0, each exactly once. Sources are single-consumer: share the yielded
    examples, not the iterator.

    Subclasses implement ``_produce() -> (features, label) | None`` where
    ``None`` signals exhaustion.
    """

    def __init__(self, schema: Schema, origin: Origin):
        self.schema = schema
        self.origin = origin
        self._next_arrival = 0

    def __iter__(self) -> Iterator[LabeledExample]:
        return self

    def __next__(self) -> LabeledExample:
        item = self._produce()
        if item is None:
            raise StopIteration
        features, label = item
        example = LabeledExample(
            features=features, label=label, arrival_index=self._next_arrival
        )
        self._next_arrival += 1
        return example

    @property
    def position(self) -> int:
        """Arrival index the next yielded example will carry."""
        return self._next_arrival

    def _produce(self):
        raise NotImplementedError
