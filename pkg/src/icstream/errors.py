"""Exception hierarchy shared by all engine modules.

Every error raised deliberately by the engine derives from EngineError, so
callers (CLI, service) can separate engine failures from genuine bugs.
"""


class EngineError(Exception):
    """Base class for all deliberate engine errors."""


# --- validation / core ------------------------------------------------------

class LengthMismatch(EngineError):
    """A vector does not have the length required by the schema or contract."""


class NonFiniteFeature(EngineError):
    """A feature value is NaN or infinite after encoding."""


class UnknownLabel(EngineError):
    """A label index or label value is outside the schema's class set."""


class InvalidDistribution(EngineError):
    """A probability vector violates non-negativity or normalization."""


# --- ingestion --------------------------------------------------------------

class IngestError(EngineError):
    """Base for stream ingestion failures."""


class Io(IngestError):
    """Underlying file could not be opened or read."""


class ParseRow(IngestError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class SchemaMismatch(IngestError):
    """Row or option set is inconsistent with the declared schema."""


class ArffSyntax(IngestError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnsupportedAttribute(IngestError):
    """ARFF attribute type the engine does not ingest (string, date, ...)."""


class UnknownCategoricalValue(IngestError):
    """Strict-mode encoder met a categorical value outside the declared set."""


class NonFinite(IngestError):
    """Numeric cell parsed to NaN or infinity."""


class InvalidSpec(IngestError):
    """Synthetic stream specification is internally inconsistent."""


# --- memory -----------------------------------------------------------------

class NonMonotonicArrival(EngineError):
    """An example arrived with an index not greater than all stored indices."""


class EmptyLongMemory(EngineError):
    """Operation requires at least one long-term example."""


class CheckpointFormat(EngineError):
    """Memory checkpoint file is malformed or has an unsupported version."""


# --- predictors -------------------------------------------------------------

class RemoteUnavailable(EngineError):
    """Remote predictor endpoint could not be reached (after retries)."""


class RemoteProtocol(EngineError):
    """Remote endpoint sent a record that violates the wire protocol."""


class Timeout(EngineError):
    """Remote predictor did not answer within the configured deadline."""


class ContextTooLarge(EngineError):
    """Context exceeds the maximum advertised by the remote endpoint."""


# --- evaluation -------------------------------------------------------------

class EvalError(EngineError):
    """Base for evaluation-layer failures."""


class ZeroVariance(EvalError):
    """Paired differences have zero variance (degenerate t-test input)."""


class TooFewDatasets(EvalError):
    """Rank comparison needs at least two algorithms and two datasets."""


class GeneratorLacksTruth(EvalError):
    """Diagnostic requires a generator that exposes its true conditional."""


class DivergentSeries(EvalError):
    """Sensitivity-decay exponent too small for the coefficient series to converge."""


class InvalidVariantConfig(EvalError):
    """Ablation variant set is unusable (e.g. missing the dual baseline)."""


# --- configuration ----------------------------------------------------------

class ConfigError(EngineError):
    """Experiment configuration failed validation; message lists all problems."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
