"""FastAPI application exposing the scenario runners.

POST /evolve | /stabilize | /control | /verify | /sweep with the matching
request model; each runs the scenario synchronously, writes its artifacts
under the configured output directory and returns a ScenarioResponse.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import BenctrlError, ConfigError
from .models import (
    ControlRequest,
    EvolveRequest,
    ScenarioResponse,
    StabilizeRequest,
    SweepRequest,
    VerifyRequest,
)

app = FastAPI(
    title="benctrl",
    version=__version__,
    description="Pseudospectral simulation and control of the Benjamin equation",
)


def _run(runner, req) -> ScenarioResponse:
    try:
        return runner(req)
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except BenctrlError as exc:
        raise HTTPException(status_code=422, detail=f"{type(exc).__name__}: {exc}") from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/evolve", response_model=ScenarioResponse)
def evolve(req: EvolveRequest) -> ScenarioResponse:
    from ..scenarios import run_evolve

    return _run(run_evolve, req)


@app.post("/stabilize", response_model=ScenarioResponse)
def stabilize(req: StabilizeRequest) -> ScenarioResponse:
    from ..scenarios import run_stabilize

    return _run(run_stabilize, req)


@app.post("/control", response_model=ScenarioResponse)
def control(req: ControlRequest) -> ScenarioResponse:
    from ..scenarios import run_control

    return _run(run_control, req)


@app.post("/verify", response_model=ScenarioResponse)
def verify(req: VerifyRequest) -> ScenarioResponse:
    from ..scenarios import run_verify

    return _run(run_verify, req)


@app.post("/sweep", response_model=ScenarioResponse)
def sweep(req: SweepRequest) -> ScenarioResponse:
    from ..scenarios import run_sweep

    return _run(run_sweep, req)
