"""HTTP face of the engine.

Every endpoint takes the same declarative config document the CLI reads,
validates it server-side, and runs the engine in-process. Long runs can be
submitted as background jobs (``wait=false``) and polled on /jobs/{id}.

Error mapping is fixed: invalid configs are 400 with the aggregated problem
list, engine failures at run time are 500 with the exception kind; protocol
conformance outcomes are data (the ``ok`` flag), never HTTP errors.
"""

from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from ..errors import ConfigError, EngineError, InvalidVariantConfig
from .jobs import JobStore
from .runner import (
    execute_ablation,
    execute_bench,
    execute_protocol_check,
    execute_runs,
)
from .schemas import (
    ConfigRequest,
    JobResponse,
    ProtocolCheckRequest,
    ProtocolCheckResponse,
    ValidateResponse,
)
from ..config import parse_config

try:
    _VERSION = version("icstream")
except PackageNotFoundError:
    _VERSION = "0.0.0"


def create_app() -> FastAPI:
    app = FastAPI(title="icstream", version=_VERSION)
    app.state.jobs = JobStore()

    @app.exception_handler(ConfigError)
    async def config_error(request: Request, exc: ConfigError):
        return JSONResponse(status_code=400, content={"detail": {"problems": exc.problems}})

    @app.exception_handler(InvalidVariantConfig)
    async def variant_error(request: Request, exc: InvalidVariantConfig):
        return JSONResponse(status_code=400, content={"detail": {"problems": [str(exc)]}})

    @app.exception_handler(EngineError)
    async def engine_error(request: Request, exc: EngineError):
        return JSONResponse(
            status_code=500,
            content={"detail": {"error": str(exc), "kind": type(exc).__name__}},
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "name": "icstream", "version": _VERSION}

    @app.post("/validate", response_model=ValidateResponse)
    def validate(body: ConfigRequest) -> ValidateResponse:
        try:
            config = parse_config(body.config)
        except ConfigError as exc:
            return ValidateResponse(ok=False, problems=exc.problems)
        return ValidateResponse(ok=True, label=config.label())

    def _dispatch(body: ConfigRequest, kind: str, fn):
        config = parse_config(body.config)
        if body.wait:
            return fn(config)
        job = app.state.jobs.submit(kind, lambda: fn(config))
        return JSONResponse(status_code=202, content=job.to_dict())

    @app.post("/runs")
    def runs(body: ConfigRequest):
        """Prequential runs for every (predictor, seed) cell; RunResponse shape."""
        return _dispatch(body, "run", lambda c: execute_runs(c, jobs=body.jobs))

    @app.post("/ablate")
    def ablate(body: ConfigRequest):
        """Memory ablation grid; AblateResponse shape."""
        return _dispatch(body, "ablate", execute_ablation)

    @app.post("/bench")
    def bench(body: ConfigRequest):
        """Batch-amortized timing, one row per predictor; BenchResponse shape."""
        return _dispatch(body, "bench", lambda c: execute_bench(c, jobs=body.jobs))

    @app.post("/protocol-check", response_model=ProtocolCheckResponse)
    def protocol_check(body: ProtocolCheckRequest) -> ProtocolCheckResponse:
        result = execute_protocol_check(body.endpoint, timeout_ms=body.timeout_ms)
        return ProtocolCheckResponse(**result)

    @app.get("/jobs/{job_id}", response_model=JobResponse)
    def job_status(job_id: str) -> JobResponse:
        job = app.state.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no such job: {job_id}")
        return JobResponse(**job.to_dict())

    return app
