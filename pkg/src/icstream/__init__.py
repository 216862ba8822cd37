"""Bounded-memory streaming classification with in-context predictors.

The package keeps a dual FIFO memory (a recency window plus a class-balanced
reservoir) over an unbounded labeled stream, hands that memory to a pluggable
predictor as its context, and scores everything prequentially. The usual entry
points:

    from icstream import DualMemory, MemoryConfig, PredictorConfig, run_prequential

Submodules hold the rest: `icstream.ingestion` for stream sources and
encoding, `icstream.predictor` for local and remote predictors plus the wire
protocol, `icstream.evaluation` for prequential runs, ablations, statistics,
and diagnostics, `icstream.service` for the HTTP facade, and `icstream.cli`
for the command line.
"""

from .core import (
    ClassDistribution,
    Context,
    FeatureKind,
    LabeledExample,
    Query,
    Schema,
    argmax_label,
    validate_example,
)
from .errors import EngineError
from .memory import (
    DualMemory,
    EvictionEvent,
    MemoryConfig,
    is_warm,
    load_checkpoint,
    save_checkpoint,
)
from .predictor import Predictor, PredictorConfig, build_predictor
from .evaluation import RunReport, run_prequential
from .config import ExperimentConfig, load_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "Schema",
    "FeatureKind",
    "LabeledExample",
    "Query",
    "ClassDistribution",
    "Context",
    "argmax_label",
    "validate_example",
    "EngineError",
    "MemoryConfig",
    "DualMemory",
    "EvictionEvent",
    "is_warm",
    "save_checkpoint",
    "load_checkpoint",
    "Predictor",
    "PredictorConfig",
    "build_predictor",
    "RunReport",
    "run_prequential",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "__version__",
]
