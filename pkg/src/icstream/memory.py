"""Dual-memory FIFO context sketch.

The sketch bounds context size over an unbounded stream with two buffers:

* a short-term FIFO of the most recent examples (recency, intra-class
  responsiveness), and
* a long-term FIFO fed by short-term overflow, which evicts the oldest
  member of the currently most-populous class so that no single class
  dominates (inter-class balance), tracked by a per-class count ledger.

The context handed to predictors is the long-term buffer followed by the
short-term buffer, both in chronological order.

Feature vectors live in preallocated slot matrices so that context
assembly is a single vectorized gather instead of a per-example copy;
this is what keeps the prequential loop above the throughput floor.
"""

from __future__ import annotations

import json
import math
import os
from collections import deque
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .core import Context, LabeledExample
from .errors import (
    CheckpointFormat,
    EmptyLongMemory,
    NonMonotonicArrival,
)

DUAL = "dual"
LONG_ONLY = "long_only"
SHORT_ONLY = "short_only"
VARIANTS = (DUAL, LONG_ONLY, SHORT_ONLY)

SHORT_TO_LONG = "short_to_long"
LONG_DROP = "long_drop"
SHORT_DROP = "short_drop"

CHECKPOINT_FORMAT = "icstream.memory.checkpoint"
CHECKPOINT_VERSION = 1


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class MemoryConfig:
    """Capacity split of the dual memory.

    ``m`` is the total instance budget. The short-term share can be given
    either as ``short_ratio`` (fraction of ``m``, rounded half-up) or as an
    absolute ``short_size``; exactly one of the two applies. ``t_warm`` is
    the number of initial instances observed before any prediction is
    scored.

    ``variant`` selects between the full dual sketch and the two ablation
    degenerations: ``long_only`` routes every arrival straight into the
    balanced long-term buffer (capacity ``m``), ``short_only`` keeps a plain
    recency FIFO of capacity ``m`` and drops overflow outright.
    """

    m: int
    short_ratio: Optional[float] = None
    short_size: Optional[int] = None
    t_warm: int = 100
    variant: str = DUAL

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown memory variant {self.variant!r}")
        if self.t_warm < 0:
            raise ValueError("t_warm must be >= 0")
        if self.variant == DUAL:
            if self.m < 2:
                raise ValueError("dual memory needs m >= 2")
            if (self.short_ratio is None) == (self.short_size is None):
                raise ValueError("give exactly one of short_ratio or short_size")
            if self.short_ratio is not None and not (0.0 < self.short_ratio < 1.0):
                raise ValueError("short_ratio must lie in (0, 1)")
            if not (1 <= self.m_short <= self.m - 1):
                raise ValueError(
                    f"derived m_short={self.m_short} outside [1, {self.m - 1}]"
                )
        else:
            if self.m < 1:
                raise ValueError("memory needs m >= 1")

    @property
    def m_short(self) -> int:
        if self.variant == LONG_ONLY:
            return 0
        if self.variant == SHORT_ONLY:
            return self.m
        if self.short_size is not None:
            return int(self.short_size)
        return _round_half_up(self.short_ratio * self.m)

    @property
    def m_long(self) -> int:
        return self.m - self.m_short


@dataclass(frozen=True)
class EvictionEvent:
    """One structural change produced by an observe step, in order."""

    kind: str
    arrival_index: int
    label: int


class DualMemory:
    """Bounded dual-buffer sketch over a labeled stream.

    Owned by exactly one stream-processing loop; `observe` is single
    threaded. `context()` returns an immutable snapshot that is safe to
    hand to a concurrent predictor call.
    """

    def __init__(self, config: MemoryConfig, n_classes: int, n_features: int):
        if n_classes < 1:
            raise ValueError("n_classes must be >= 1")
        if n_features < 1:
            raise ValueError("n_features must be >= 1")
        self.config = config
        self.n_classes = n_classes
        self.n_features = n_features

        capacity = config.m + 2  # headroom for the transient overflow states
        self._feat = np.empty((capacity, n_features), dtype=np.float64)
        self._slot_labels = np.empty(capacity, dtype=np.int64)
        self._slot_arrivals = np.empty(capacity, dtype=np.int64)
        self._free = list(range(capacity - 1, -1, -1))

        self._short: deque = deque()  # (example, slot), oldest left
        self._long_order: dict = {}  # slot -> example, insertion = chronological
        self._long_by_class = [deque() for _ in range(n_classes)]
        self._counts = [0] * n_classes

        self._t_warm = 0
        self._last_arrival = -1

    # --- introspection ------------------------------------------------------

    @property
    def t_warm(self) -> int:
        """Number of instances observed so far."""
        return self._t_warm

    @property
    def is_warm(self) -> bool:
        return self._t_warm > self.config.t_warm

    @property
    def counts(self) -> List[int]:
        """Copy of the long-term per-class count ledger."""
        return list(self._counts)

    @property
    def short_size(self) -> int:
        return len(self._short)

    @property
    def long_size(self) -> int:
        return len(self._long_order)

    def short_examples(self) -> List[LabeledExample]:
        return [ex for ex, _ in self._short]

    def long_examples(self) -> List[LabeledExample]:
        return list(self._long_order.values())

    def state_signature(self):
        """(short arrivals, long arrivals, counts) — cheap exact state probe."""
        return (
            tuple(ex.arrival_index for ex, _ in self._short),
            tuple(ex.arrival_index for ex in self._long_order.values()),
            tuple(self._counts),
        )

    # --- the algorithm ------------------------------------------------------

    def observe(self, ex: LabeledExample) -> List[EvictionEvent]:
        """Insert one example; returns the eviction events it caused, in order.

        Dual variant: the example enters the short-term FIFO; short-term
        overflow moves the oldest short-term example into long-term memory
        and bumps its class count; long-term overflow then drops the oldest
        member of the most overrepresented class.
        """
        if ex.arrival_index <= self._last_arrival:
            raise NonMonotonicArrival(
                f"arrival {ex.arrival_index} not greater than {self._last_arrival}"
            )
        if not (0 <= ex.label < self.n_classes):
            raise ValueError(f"label {ex.label} outside {self.n_classes} classes")
        self._last_arrival = ex.arrival_index
        self._t_warm += 1

        events: List[EvictionEvent] = []
        variant = self.config.variant

        if variant == SHORT_ONLY:
            self._short.append((ex, self._alloc(ex)))
            if len(self._short) > self.config.m_short:
                victim, slot = self._short.popleft()
                self._free.append(slot)
                events.append(EvictionEvent(SHORT_DROP, victim.arrival_index, victim.label))
            return events

        if variant == LONG_ONLY:
            self._push_long(ex, self._alloc(ex))
            if len(self._long_order) > self.config.m_long:
                events.append(self._drop_from_long())
            return events

        self._short.append((ex, self._alloc(ex)))
        if len(self._short) > self.config.m_short:
            moved, slot = self._short.popleft()
            self._push_long(moved, slot)
            events.append(EvictionEvent(SHORT_TO_LONG, moved.arrival_index, moved.label))
            if len(self._long_order) > self.config.m_long:
                events.append(self._drop_from_long())
        return events

    def most_overrepresented(self) -> int:
        """Class with the highest long-term count.

        Ties resolve to the class whose oldest long-term member is globally
        oldest, preserving the FIFO spirit of eviction.
        """
        if not self._long_order:
            raise EmptyLongMemory("long-term memory is empty")
        max_count = max(self._counts)
        best = -1
        best_arrival = None
        for y, count in enumerate(self._counts):
            if count != max_count:
                continue
            oldest = self._long_by_class[y][0][0].arrival_index
            if best_arrival is None or oldest < best_arrival:
                best, best_arrival = y, oldest
        return best

    def context(self) -> Context:
        """Immutable snapshot: long-term portion first, then short-term."""
        n_long = len(self._long_order)
        n_short = len(self._short)
        if n_long + n_short == 0:
            return Context.empty(self.n_features)
        slots = list(self._long_order.keys())
        examples = list(self._long_order.values())
        if n_short:
            short_examples, short_slots = zip(*self._short)
            slots.extend(short_slots)
            examples.extend(short_examples)
        idx = np.array(slots, dtype=np.intp)
        features = self._feat[idx]
        features.setflags(write=False)
        return Context(
            examples=tuple(examples),
            features=features,
            labels=self._slot_labels[idx],
            arrivals=self._slot_arrivals[idx],
            n_long=n_long,
        )

    # --- internals ----------------------------------------------------------

    def _alloc(self, ex: LabeledExample) -> int:
        slot = self._free.pop()
        self._feat[slot] = ex.features
        self._slot_labels[slot] = ex.label
        self._slot_arrivals[slot] = ex.arrival_index
        return slot

    def _push_long(self, ex: LabeledExample, slot: int) -> None:
        self._long_order[slot] = ex
        self._long_by_class[ex.label].append((ex, slot))
        self._counts[ex.label] += 1

    def _drop_from_long(self) -> EvictionEvent:
        y = self.most_overrepresented()
        victim, slot = self._long_by_class[y].popleft()
        del self._long_order[slot]
        self._counts[y] -= 1
        self._free.append(slot)
        return EvictionEvent(LONG_DROP, victim.arrival_index, y)


def is_warm(mem: DualMemory, config: MemoryConfig) -> bool:
    """True once the number of observed instances exceeds the warm-up length."""
    return mem.t_warm > config.t_warm


# --- checkpointing ----------------------------------------------------------

def _example_to_doc(ex: LabeledExample) -> dict:
    return {"x": ex.features.tolist(), "y": ex.label, "t": ex.arrival_index}


def _example_from_doc(doc: dict) -> LabeledExample:
    return LabeledExample(
        features=np.asarray(doc["x"], dtype=np.float64),
        label=int(doc["y"]),
        arrival_index=int(doc["t"]),
    )


def save_checkpoint(mem: DualMemory, path) -> None:
    """Write a versioned, self-describing snapshot of the memory state.

    The write is atomic (temp file + rename) so an interrupted save never
    corrupts an existing checkpoint.
    """
    cfg = mem.config
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": {
            "m": cfg.m,
            "short_ratio": cfg.short_ratio,
            "short_size": cfg.short_size,
            "t_warm": cfg.t_warm,
            "variant": cfg.variant,
        },
        "n_classes": mem.n_classes,
        "n_features": mem.n_features,
        "observed": mem.t_warm,
        "last_arrival": mem._last_arrival,
        "short": [_example_to_doc(ex) for ex in mem.short_examples()],
        "long": [_example_to_doc(ex) for ex in mem.long_examples()],
        "counts": mem.counts,
    }
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def load_checkpoint(path) -> DualMemory:
    """Rebuild a DualMemory from a checkpoint written by save_checkpoint."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointFormat(f"cannot read checkpoint: {exc}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointFormat("not a memory checkpoint file")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointFormat(f"unsupported checkpoint version {doc.get('version')!r}")

    cfg_doc = doc["config"]
    config = MemoryConfig(
        m=cfg_doc["m"],
        short_ratio=cfg_doc.get("short_ratio"),
        short_size=cfg_doc.get("short_size"),
        t_warm=cfg_doc["t_warm"],
        variant=cfg_doc.get("variant", DUAL),
    )
    mem = DualMemory(config, int(doc["n_classes"]), int(doc["n_features"]))

    for entry in doc["long"]:
        ex = _example_from_doc(entry)
        mem._push_long(ex, mem._alloc(ex))
    for entry in doc["short"]:
        ex = _example_from_doc(entry)
        mem._short.append((ex, mem._alloc(ex)))

    if mem.counts != [int(c) for c in doc["counts"]]:
        raise CheckpointFormat("count ledger does not match stored long-term buffer")
    if mem.short_size > config.m_short or mem.long_size > config.m_long:
        raise CheckpointFormat("stored buffers exceed configured capacities")
    mem._t_warm = int(doc["observed"])
    mem._last_arrival = int(doc["last_arrival"])
    return mem
