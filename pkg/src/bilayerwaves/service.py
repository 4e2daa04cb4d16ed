"""HTTP service wrapping the scenario runner and dispersion analytics.

POST /api/scenario runs a full configured scenario (the request carries the
config text plus optional overrides) and returns the manifest; domain failures
(admissibility loss, solver breakdown) are successful HTTP responses carrying
the corresponding exit code.  POST /api/dispersion is a typed endpoint for
phase-speed queries.  The CLI talks to this app, in-process by default.
"""

from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field as PydField

from . import __version__
from .analysis import full_euler_dispersion, model_dispersion
from .config import parse_config
from .errors import BilayerError, ConfigError
from .models import ModelSpec
from .params import Params, cl_coeffs
from .scenarios import run_scenario

app = FastAPI(title="bilayerwaves", version=__version__)


class ScenarioRequest(BaseModel):
    config_text: str
    overrides: list[str] = PydField(default_factory=list)
    mode: Optional[Literal["simulate", "order", "dispersion", "compare"]] = None
    out_dir: Optional[str] = None


class ScenarioResponse(BaseModel):
    status: str
    exit_code: int
    manifest: dict


class DispersionRequest(BaseModel):
    model: Literal["SW1D", "SW2D", "GN1D", "GN2D", "CHGN1D", "BOUSS1D",
                   "SYMBOUSS1D", "CL_SCALAR"]
    gamma: float = 0.0
    delta: float = 1.0
    mu: float = 1e-2
    bo_inv: float = 0.0
    tension: bool = False
    family: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    cl_variant: Literal["unidirectional", "decoupled"] = "unidirectional"
    cl_theta: float = 1.0
    cl_lambda: float = 0.0
    k: list[float]
    include_full_euler: bool = False


class DispersionResponse(BaseModel):
    k: list[float]
    phase_speed: list[float]
    full_euler: Optional[list[float]] = None


@app.get("/api/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/api/scenario", response_model=ScenarioResponse)
def scenario(request: ScenarioRequest):
    overrides = list(request.overrides)
    if request.mode:
        overrides.append(f"run.mode={request.mode}")
    try:
        cfg = parse_config(request.config_text, overrides)
    except ConfigError as err:
        raise HTTPException(status_code=400, detail={
            "message": "invalid configuration",
            "violations": [
                {"line": line, "key": key, "error": msg}
                for line, key, msg in err.violations
            ],
        })
    try:
        exit_code, manifest = run_scenario(cfg, out_dir=request.out_dir)
    except BilayerError as err:
        raise HTTPException(status_code=422, detail=str(err))
    return ScenarioResponse(status=manifest["status"], exit_code=exit_code,
                            manifest=manifest)


@app.post("/api/dispersion", response_model=DispersionResponse)
def dispersion(request: DispersionRequest):
    try:
        p = Params.make(gamma=request.gamma, delta=request.delta,
                        mu=request.mu, bo_inv=request.bo_inv)
        cl = None
        if request.model == "CL_SCALAR":
            cl = cl_coeffs(request.cl_variant, p.gamma, p.delta,
                           theta=request.cl_theta, lam=request.cl_lambda)
        spec = ModelSpec(request.model, p, family=request.family, cl=cl,
                         tension=request.tension)
        speeds = [model_dispersion(spec, k) for k in request.k]
        euler = None
        if request.include_full_euler:
            euler = [full_euler_dispersion(k, p, bond_inv=spec.bond_inv)
                     for k in request.k]
    except (ValueError, BilayerError) as err:
        raise HTTPException(status_code=400, detail=str(err))
    return DispersionResponse(k=request.k, phase_speed=speeds,
                              full_euler=euler)
