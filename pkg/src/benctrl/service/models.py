"""Pydantic request/response models shared by the HTTP service and the CLI."""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, Field, model_validator


class PhysicsModel(BaseModel):
    alpha: float = Field(default=1.0, gt=0)
    mu: float = 0.0


class GridModel(BaseModel):
    n: int = Field(default=128, ge=4)
    dt: float | None = Field(default=None, gt=0)
    t0: float = 0.0
    t_final: float = 1.0
    sample_stride: int = Field(default=10, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if self.n % 2 != 0:
            raise ValueError("n must be even")
        if self.t_final == self.t0:
            raise ValueError("t_final must differ from t0")
        return self


class GainModel(BaseModel):
    kind: Literal["cosine", "uniform"] = "cosine"
    center: float = math.pi
    width: float = Field(default=2.0, gt=0)


class InitialModel(BaseModel):
    kind: Literal["cosine", "sine", "random", "zero", "file"] = "cosine"
    amplitude: float = 0.1
    mode: int = 1
    seed: int = 0
    norm: float | None = None
    path: str | None = None


class FeedbackModel(BaseModel):
    law: Literal["none", "ggstar", "klambda", "timevarying"] = "none"
    decay: float = Field(default=1.0, ge=0)  # lambda of K_lambda / K(u,t)
    a: float = Field(default=1.0, gt=0)
    quad_nodes: int = Field(default=64, ge=8)
    period: float = Field(default=2.0, gt=0)  # T of the time-varying cycle
    r0: float = Field(default=0.1, gt=0, lt=1)
    delta: float = Field(default=0.05, gt=0, lt=0.1)


class EvolveRequest(BaseModel):
    grid: GridModel = GridModel()
    physics: PhysicsModel = PhysicsModel()
    gain: GainModel = GainModel()
    initial: InitialModel = InitialModel()
    linear_only: bool = False
    sobolev_index: float = 0.0
    self_check: bool = False
    out_dir: str | None = None
    tag: str = "evolve"


class StabilizeRequest(BaseModel):
    grid: GridModel = GridModel(n=64, dt=1e-3, t_final=10.0, sample_stride=50)
    physics: PhysicsModel = PhysicsModel()
    gain: GainModel = GainModel()
    initial: InitialModel = InitialModel(kind="random", seed=7, norm=0.25)
    feedback: FeedbackModel = FeedbackModel(law="ggstar")
    sobolev_index: float = 0.0
    fit_window: tuple[float, float] | None = None
    out_dir: str | None = None
    tag: str = "stabilize"


class ControlRequest(BaseModel):
    mode: Literal["linear", "nonlinear", "large"] = "linear"
    grid: GridModel = GridModel(n=64, dt=5e-4, t_final=1.0, sample_stride=1)
    physics: PhysicsModel = PhysicsModel()
    gain: GainModel = GainModel()
    initial: InitialModel = InitialModel(kind="cosine", amplitude=1.0, mode=1)
    target: InitialModel = InitialModel(kind="sine", amplitude=1.0, mode=2)
    sobolev_index: float = 0.0
    tol: float = Field(default=1e-8, gt=0)
    max_iter: int = Field(default=8, ge=1)
    damp_time: float = Field(default=3.0, gt=0)
    damp_decay: float = Field(default=1.0, gt=0)
    residual_tol: float | None = None
    out_dir: str | None = None
    tag: str = "control"


class VerifyRequest(BaseModel):
    suites: list[Literal["lemmas", "invariants", "l4", "gramian", "operators"]] = Field(
        default_factory=lambda: ["lemmas", "invariants", "l4", "gramian", "operators"]
    )
    kmax: int = Field(default=200, ge=2)
    alphas: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    l4_sizes: list[int] = Field(default_factory=lambda: [32, 64, 128])
    l4_fields: int = Field(default=500, ge=10)
    n: int = Field(default=64, ge=8)
    horizon: float = Field(default=1.0, gt=0)
    physics: PhysicsModel = PhysicsModel()
    out_dir: str | None = None
    tag: str = "verify"


class SweepRequest(BaseModel):
    base: StabilizeRequest = StabilizeRequest()
    parameter: str = "feedback.decay"
    values: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    max_workers: int = Field(default=4, ge=1)
    out_dir: str | None = None
    tag: str = "sweep"


class ScenarioResponse(BaseModel):
    status: Literal["ok", "fail"]
    scenario: str
    summary: dict[str, float | int | str | bool]
    files: dict[str, str] = Field(default_factory=dict)
    checks: dict[str, bool] = Field(default_factory=dict)
