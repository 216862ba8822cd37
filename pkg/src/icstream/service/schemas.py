"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from typing import List, Optional

from pydantic import BaseModel, Field


class ConfigRequest(BaseModel):
    """A raw experiment config document, validated server-side."""

    config: dict
    jobs: int = Field(default=1, ge=1, le=64)
    wait: bool = True


class ValidateResponse(BaseModel):
    ok: bool
    label: str = ""
    problems: List[str] = []


class RunEntry(BaseModel):
    predictor: str
    predictor_index: int
    seed: int
    a_t: Optional[float]
    n_evaluated: int
    n_instances: int
    report: dict


class RunResponse(BaseModel):
    label: str
    entries: List[RunEntry]


class DeltaRow(BaseModel):
    kind: str
    m: Optional[int] = None
    ratio: Optional[float] = None
    mean: float
    p_value: Optional[float] = None
    significant: Optional[bool] = None


class AblateResponse(BaseModel):
    label: str
    predictor: str
    report: dict
    csv: str
    deltas: List[DeltaRow]


class BenchRow(BaseModel):
    predictor: str
    predictor_index: int
    count: int
    mean_ms: Optional[float]
    p50_ms: Optional[float]
    p99_ms: Optional[float]


class BenchResponse(BaseModel):
    label: str
    rows: List[BenchRow]


class ProtocolCheckRequest(BaseModel):
    endpoint: str
    timeout_ms: float = Field(default=5000.0, gt=0)


class CheckEntry(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class ProtocolCheckResponse(BaseModel):
    endpoint: str
    ok: bool
    checks: List[CheckEntry]


class JobResponse(BaseModel):
    id: str
    kind: str
    status: str
    result: Optional[dict] = None
    error: Optional[str] = None
    error_kind: Optional[str] = None
