"""Declarative experiment configuration.

One versioned YAML or JSON document drives every command: which stream to
read, how the memory is sized, which predictors run, which seeds repeat the
experiment, and where reports land. Validation is all-at-once: a bad file
raises a single ConfigError listing every problem found, not just the first.

The only environment override is ICSTREAM_REMOTE_ENDPOINT, which replaces the
endpoint of remote predictors; everything else lives in the file.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Callable, List, Literal, Optional, Union

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    TypeAdapter,
    ValidationError,
    field_validator,
)
from typing_extensions import Annotated

from .errors import ConfigError, EngineError
from .ingestion import StreamSource, open_arff, open_csv
from .ingestion.synthetic import (
    Concept,
    DriftSpec,
    GaussianDriftSource,
    RotatingHyperplaneSource,
    Segment,
)
from .memory import MemoryConfig
from .predictor.base import REMOTE, PredictorConfig

CONFIG_VERSION = 1
ENDPOINT_ENV = "ICSTREAM_REMOTE_ENDPOINT"

JSON_REPORT = "json"
CSV_REPORT = "csv"


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CsvSourceSpec(_StrictModel):
    kind: Literal["csv"]
    path: str
    class_names: List[str] = Field(min_length=2)
    header: bool = True
    label_column: Union[int, str] = -1
    delimiter: str = ","
    categorical_columns: List[Union[int, str]] = []
    normalize: bool = True


class ArffSourceSpec(_StrictModel):
    kind: Literal["arff"]
    path: str
    normalize: bool = True


class SegmentSpec(_StrictModel):
    length: int = Field(gt=0)
    priors: List[float] = Field(min_length=1)
    means: List[List[float]] = Field(min_length=1)
    scales: Union[float, List[float], List[List[float]]] = 1.0


class GaussianDriftSourceSpec(_StrictModel):
    kind: Literal["gaussian_drift"]
    segments: List[SegmentSpec] = Field(min_length=1)
    transition: Literal["abrupt", "gradual"] = "abrupt"
    width: int = 0


class HyperplaneSourceSpec(_StrictModel):
    kind: Literal["rotating_hyperplane"]
    dims: int = Field(ge=2)
    rotation_rate: float = 0.0
    noise: float = Field(default=0.0, ge=0.0, le=1.0)
    length: int = Field(gt=0)


SourceSpec = Union[
    CsvSourceSpec, ArffSourceSpec, GaussianDriftSourceSpec, HyperplaneSourceSpec
]

_SOURCE_ADAPTER: TypeAdapter = TypeAdapter(
    Annotated[SourceSpec, Field(discriminator="kind")]
)


class MemorySpec(_StrictModel):
    m: int
    short_ratio: Optional[float] = None
    short_size: Optional[int] = None
    t_warm: int = 100
    variant: Literal["dual", "long_only", "short_only"] = "dual"


class PredictorSpec(_StrictModel):
    kind: Literal["knn", "naive_bayes", "no_change", "majority_class", "remote"]
    k: int = 5
    distance: str = "euclidean"
    laplace: float = 1.0
    endpoint: str = ""
    batch_size: int = 10
    timeout_ms: float = 5000.0
    n_permutations: int = 4
    retries: int = 2
    seed: int = 0


class AblationSpec(_StrictModel):
    """Grid axes for the ablate command; defaults follow the study protocol."""

    m_values: List[int] = [600, 800, 1000]
    ratio_values: List[float] = [0.65, 0.75, 0.85]
    variants: List[str] = ["dual", "long_only", "short_only"]


class ExperimentConfig(_StrictModel):
    """The one document every command reads.

    ``predictors`` usually holds a single entry; bench accepts several and
    reports one timing row per predictor. ``seeds`` is the complete source of
    randomness: every run derives from one of its entries and nothing is
    seeded from the clock.
    """

    version: int = CONFIG_VERSION
    dataset: str = ""
    source: SourceSpec = Field(discriminator="kind")
    memory: MemorySpec
    predictors: List[PredictorSpec] = Field(min_length=1)
    seeds: List[int] = Field(min_length=1)
    output_dir: str = "runs"
    report_formats: List[Literal["json", "csv"]] = [JSON_REPORT, CSV_REPORT]
    window: int = Field(default=1000, gt=0)
    max_instances: Optional[int] = Field(default=None, gt=0)
    ablation: AblationSpec = AblationSpec()

    @field_validator("version")
    @classmethod
    def _supported_version(cls, value):
        if value != CONFIG_VERSION:
            raise ValueError(f"unsupported config version {value}; expected {CONFIG_VERSION}")
        return value

    @field_validator("seeds")
    @classmethod
    def _distinct_seeds(cls, value):
        if len(set(value)) != len(value):
            raise ValueError("seeds must be distinct")
        return value

    def label(self) -> str:
        """Human-readable dataset name for tables and file names."""
        if self.dataset:
            return self.dataset
        if isinstance(self.source, (CsvSourceSpec, ArffSourceSpec)):
            return Path(self.source.path).stem
        return self.source.kind


def _normalize_doc(problems: List[str], doc) -> Optional[dict]:
    if not isinstance(doc, dict):
        problems.append("top level must be a mapping of config fields")
        return None
    if "predictor" in doc and "predictors" not in doc:
        doc = dict(doc)
        doc["predictors"] = [doc.pop("predictor")]
    return doc


def _memory_problems(spec: MemorySpec) -> List[str]:
    try:
        _memory_config(spec)
    except ValueError as exc:
        return [f"memory: {exc}"]
    return []


def _predictor_problems(index: int, spec: PredictorSpec) -> List[str]:
    try:
        _predictor_config(spec)
    except ValueError as exc:
        return [f"predictors[{index}]: {exc}"]
    return []


def _source_problems(source) -> List[str]:
    if isinstance(source, (CsvSourceSpec, ArffSourceSpec)):
        if not Path(source.path).is_file():
            return [f"source.path: no such file: {source.path}"]
    elif isinstance(source, GaussianDriftSourceSpec):
        try:
            drift_spec(source)
        except EngineError as exc:
            return [f"source: {exc}"]
    return []


def _semantic_problems(config: ExperimentConfig) -> List[str]:
    """Checks pydantic cannot express: cross-field rules and file existence."""
    problems = _memory_problems(config.memory)
    for index, spec in enumerate(config.predictors):
        problems.extend(_predictor_problems(index, spec))
    problems.extend(_source_problems(config.source))
    return problems


def _section_semantics(doc: dict) -> List[str]:
    """Semantic checks for sections that parse alone when the whole doc fails.

    Keeps the error report one-shot: a config with both a structural mistake
    in one field and a bad memory split elsewhere reports both at once.
    Sections that fail their own structural validation are skipped; those
    errors are already in the list.
    """
    problems: List[str] = []
    memory_doc = doc.get("memory")
    if isinstance(memory_doc, dict):
        try:
            spec = MemorySpec.model_validate(memory_doc)
        except ValidationError:
            pass
        else:
            problems.extend(_memory_problems(spec))
    predictor_docs = doc.get("predictors")
    if isinstance(predictor_docs, list):
        for index, entry in enumerate(predictor_docs):
            if not isinstance(entry, dict):
                continue
            try:
                spec = PredictorSpec.model_validate(entry)
            except ValidationError:
                continue
            problems.extend(_predictor_problems(index, spec))
    source_doc = doc.get("source")
    if isinstance(source_doc, dict):
        try:
            source = _SOURCE_ADAPTER.validate_python(source_doc)
        except ValidationError:
            pass
        else:
            problems.extend(_source_problems(source))
    return problems


def parse_config(doc) -> ExperimentConfig:
    """Validate a parsed mapping; raise ConfigError listing all problems."""
    problems: List[str] = []
    doc = _normalize_doc(problems, doc)
    config = None
    if doc is not None:
        try:
            config = ExperimentConfig.model_validate(doc)
        except ValidationError as exc:
            for error in exc.errors():
                location = ".".join(str(part) for part in error["loc"]) or "config"
                problems.append(f"{location}: {error['msg']}")
            problems.extend(_section_semantics(doc))
    if config is not None:
        problems.extend(_semantic_problems(config))
    if problems:
        raise ConfigError(problems)
    return config


def load_config(path) -> ExperimentConfig:
    """Read and validate a YAML (.yaml/.yml) or JSON (.json) config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"])
    try:
        if path.suffix == ".json":
            doc = json.loads(text)
        else:
            doc = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError([f"cannot parse {path}: {exc}"])
    return parse_config(doc)


def _memory_config(spec: MemorySpec) -> MemoryConfig:
    return MemoryConfig(
        m=spec.m,
        short_ratio=spec.short_ratio,
        short_size=spec.short_size,
        t_warm=spec.t_warm,
        variant=spec.variant,
    )


def memory_config(config: ExperimentConfig) -> MemoryConfig:
    return _memory_config(config.memory)


def _predictor_config(spec: PredictorSpec) -> PredictorConfig:
    endpoint = spec.endpoint
    if spec.kind == REMOTE:
        endpoint = os.environ.get(ENDPOINT_ENV) or endpoint
    return PredictorConfig(
        kind=spec.kind,
        k=spec.k,
        distance=spec.distance,
        laplace=spec.laplace,
        endpoint=endpoint,
        batch_size=spec.batch_size,
        timeout_ms=spec.timeout_ms,
        n_permutations=spec.n_permutations,
        retries=spec.retries,
        seed=spec.seed,
    )


def predictor_configs(config: ExperimentConfig) -> List[PredictorConfig]:
    """Build the predictor configs, applying the endpoint env override."""
    return [_predictor_config(spec) for spec in config.predictors]


def drift_spec(source: GaussianDriftSourceSpec) -> DriftSpec:
    segments = tuple(
        Segment(
            Concept(priors=spec.priors, means=spec.means, scales=spec.scales),
            spec.length,
        )
        for spec in source.segments
    )
    return DriftSpec(segments=segments, transition=source.transition, width=source.width)


def stream_factory(config: ExperimentConfig) -> Callable[[int], StreamSource]:
    """Per-seed stream builder.

    File sources replay the same file for every seed (the pairing is then
    trivial); synthetic sources realize a fresh stream from the seed.
    """
    source = config.source
    if isinstance(source, CsvSourceSpec):
        return lambda seed: open_csv(
            source.path,
            class_names=source.class_names,
            header=source.header,
            label_column=source.label_column,
            delimiter=source.delimiter,
            categorical_columns=source.categorical_columns,
            normalize=source.normalize,
        )
    if isinstance(source, ArffSourceSpec):
        return lambda seed: open_arff(source.path, normalize=source.normalize)
    if isinstance(source, GaussianDriftSourceSpec):
        spec = drift_spec(source)
        return lambda seed: GaussianDriftSource(spec, seed)
    return lambda seed: RotatingHyperplaneSource(
        source.dims, source.rotation_rate, source.noise, seed, source.length
    )
