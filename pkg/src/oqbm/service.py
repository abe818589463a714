"""HTTP facade over the experiment harness.

Run it with ``uvicorn oqbm.service:app``; the bundled CLI talks to the same
app in-process by default, so no server is needed for local work.  Requests
and responses are the pydantic models from ``oqbm.harness``.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict

from . import __version__
from .errors import ConfigInvalidError, OqbmError
from .harness import (
    CompareConfig,
    CompareResult,
    EnsembleSummary,
    ItoConfig,
    RunConfig,
    run_compare,
    run_ensemble,
    spin_half_report,
)

app = FastAPI(
    title="oqbm",
    version=__version__,
    description="Open quantum walks and open quantum Brownian motion: "
    "seeded ensembles, deterministic maps, and verification reports.",
)


class HealthResponse(BaseModel):
    status: str
    version: str


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: RunConfig


class RunResponse(BaseModel):
    summary: EnsembleSummary


class ItoVerifyRequest(ItoConfig):
    seed: int = 0


class ItoVerifyResponse(BaseModel):
    rows: list[dict]
    max_residual: float
    threshold: float
    passed: bool


class SpinHalfReportRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    a: float
    omega0: float = 1.0
    seed: int = 0


class SpinHalfReportResponse(BaseModel):
    report: dict


class CompareRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: CompareConfig
    tolerance: float = 5e-2


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/run", response_model=RunResponse)
def run(request: RunRequest) -> RunResponse:
    try:
        return RunResponse(summary=run_ensemble(request.config))
    except (ConfigInvalidError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except OqbmError as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc


@app.post("/verify-ito", response_model=ItoVerifyResponse)
def verify_ito(request: ItoVerifyRequest) -> ItoVerifyResponse:
    from .ito import residual_table

    try:
        rows = residual_table(request.dims, request.nbars, request.seeds, request.seed)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    worst = max(
        max(r["leibniz"], r["duality"], r["unitarity"], r["noise_fit"]) for r in rows
    )
    return ItoVerifyResponse(
        rows=rows,
        max_residual=worst,
        threshold=request.threshold,
        passed=bool(worst <= request.threshold),
    )


@app.post("/spin-half/report", response_model=SpinHalfReportResponse)
def spin_report(request: SpinHalfReportRequest) -> SpinHalfReportResponse:
    try:
        return SpinHalfReportResponse(
            report=spin_half_report(request.a, request.omega0, request.seed)
        )
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.post("/compare", response_model=CompareResult)
def compare(request: CompareRequest) -> CompareResult:
    try:
        return run_compare(request.config, request.tolerance)
    except (ConfigInvalidError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except OqbmError as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc
