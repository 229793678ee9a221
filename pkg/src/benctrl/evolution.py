"""Time integration of the Benjamin equation in the mean-zero frame.

The linear symbol i*phi(k) is applied exactly through its integrating factor;
the dealiased nonlinearity and the control/feedback term are advanced with
classical RK4 stage evaluations, so feedback laws act inside each stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import DiagnosticsRecord, invariant_I1, invariant_I2, random_smooth_field, sobolev_norm
from .errors import ConfigError, NonFiniteState, StepTooLarge
from .hum import ControlSignal
from .operators import (
    GainProfile,
    LLambdaSpec,
    TimeVaryingSpec,
    apply_G,
    apply_K0,
    apply_K_lambda,
    assemble_L_lambda,
    cutoff_rho,
    cutoff_theta,
    gain_inner_product,
)
from .spectral import PhysicalParams, SpectralField, phase_table, wavenumbers

__all__ = [
    "NoControl",
    "ExternalControl",
    "DampingGGstar",
    "KLambda",
    "TimeVarying",
    "InitialSpec",
    "RunConfig",
    "Trajectory",
    "default_dt",
    "initial_field",
    "rhs",
    "integrate",
    "controlled_run",
]


@dataclass(frozen=True)
class NoControl:
    pass


@dataclass(frozen=True)
class ExternalControl:
    signal: ControlSignal


@dataclass(frozen=True)
class DampingGGstar:
    pass


@dataclass(frozen=True)
class KLambda:
    spec: LLambdaSpec


@dataclass(frozen=True)
class TimeVarying:
    spec: TimeVaryingSpec


FeedbackLaw = NoControl | ExternalControl | DampingGGstar | KLambda | TimeVarying


@dataclass(frozen=True)
class InitialSpec:
    """Named analytic profile or coefficient file for the initial state."""

    kind: str = "cosine"  # cosine | sine | random | zero | file
    amplitude: float = 0.1
    mode: int = 1
    seed: int = 0
    norm: float | None = None
    path: str | None = None


@dataclass(frozen=True)
class RunConfig:
    n: int = 128
    dt: float | None = None
    t0: float = 0.0
    t_final: float = 1.0
    params: PhysicalParams = field(default_factory=PhysicalParams)
    gain_kind: str = "cosine"  # cosine | uniform
    gain_center: float = np.pi
    gain_width: float = 2.0
    feedback: FeedbackLaw = field(default_factory=NoControl)
    initial: InitialSpec = field(default_factory=InitialSpec)
    sample_stride: int = 10
    sobolev_index: float = 0.0
    linear_only: bool = False
    seed: int = 0
    out_dir: str | None = None
    tag: str = "run"

    def __post_init__(self):
        if self.n % 2 != 0 or self.n < 4:
            raise ConfigError(f"N must be even and >= 4, got {self.n}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.t_final == self.t0:
            raise ConfigError("t_final must differ from t0")
        if self.sample_stride < 1:
            raise ConfigError("sample_stride must be >= 1")

    def gain_profile(self) -> GainProfile:
        if self.gain_kind == "uniform":
            return GainProfile.uniform(self.n)
        if self.gain_kind == "cosine":
            return GainProfile.raised_cosine(self.n, self.gain_center, self.gain_width)
        raise ConfigError(f"unknown gain kind {self.gain_kind!r}")


def default_dt(n: int, params: PhysicalParams) -> float:
    """min(1e-3, 2pi / (10 * max|phi|)): resolve the fastest retained phase."""
    phi = phase_table(n, params.alpha, params.mu)
    fastest = float(np.max(np.abs(phi)))
    if fastest == 0.0:
        return 1e-3
    return min(1e-3, 2.0 * np.pi / (10.0 * fastest))


def initial_field(cfg: RunConfig) -> SpectralField:
    spec = cfg.initial
    if spec.kind == "zero":
        return SpectralField.zero(cfg.n)
    if spec.kind == "cosine":
        u = SpectralField.cosine(cfg.n, spec.mode, spec.amplitude)
    elif spec.kind == "sine":
        u = SpectralField.sine(cfg.n, spec.mode, spec.amplitude)
    elif spec.kind == "random":
        u = random_smooth_field(cfg.n, spec.seed, norm=spec.norm)
    elif spec.kind == "file":
        if not spec.path:
            raise ConfigError("initial kind 'file' requires a path")
        coeffs = np.load(spec.path)
        if coeffs.shape[0] != cfg.n:
            raise ConfigError(
                f"initial coefficient file holds {coeffs.shape[0]} modes, config wants {cfg.n}"
            )
        u = SpectralField.from_coeffs(coeffs)
    else:
        raise ConfigError(f"unknown initial condition kind {spec.kind!r}")
    if spec.kind != "file" and spec.norm is not None and u.l2_norm() > 0:
        u = u * (spec.norm / u.l2_norm())
    c = u.coeffs.copy()
    c[0] = 0.0
    return SpectralField.from_coeffs(c)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: list[SpectralField]
    records: list[DiagnosticsRecord]
    config: RunConfig

    @property
    def terminal_state(self) -> SpectralField:
        return self.states[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def sup_hs_distance(self, other: "Trajectory", s: float) -> float:
        if len(self.states) != len(other.states):
            raise ValueError("trajectories sampled on different grids")
        return max(
            sobolev_norm(a - b, s) for a, b in zip(self.states, other.states)
        )


class _Forcing:
    """Stage-level forcing f-hat(u, t) for one feedback law, plus its diagnostics."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.gain = cfg.gain_profile()
        self.law = cfg.feedback
        self.l_op = None
        if isinstance(self.law, KLambda):
            self.l_op = assemble_L_lambda(self.law.spec, self.gain, cfg.params, cfg.n)
        elif isinstance(self.law, TimeVarying):
            self.l_op = assemble_L_lambda(
                self.law.spec.l_lambda_spec(), self.gain, cfg.params, cfg.n
            )

    def coeffs(self, state: np.ndarray, t: float) -> np.ndarray | None:
        law = self.law
        if isinstance(law, NoControl):
            return None
        if isinstance(law, ExternalControl):
            h = law.signal.coeffs_at(t)
            return apply_G(SpectralField.from_coeffs(h), self.gain).coeffs
        u = SpectralField.from_coeffs(state)
        if isinstance(law, DampingGGstar):
            return -apply_K0(u, self.gain).coeffs
        if isinstance(law, KLambda):
            return -apply_K_lambda(u, self.l_op, self.gain).coeffs
        if isinstance(law, TimeVarying):
            spec = law.spec
            rho = cutoff_rho(sobolev_norm(u, spec.sobolev_index) ** 2, spec)
            theta_fast = cutoff_theta(t / spec.period_T, spec)
            theta_slow = cutoff_theta(t / spec.period_T - 1.0, spec)
            out = -((1.0 - rho) + rho * theta_slow) * apply_K0(u, self.gain).coeffs
            if rho * theta_fast != 0.0:
                out = out - (rho * theta_fast) * apply_K_lambda(u, self.l_op, self.gain).coeffs
            return out
        raise ConfigError(f"unknown feedback law {law!r}")

    def control_energy(self, u: SpectralField, t: float) -> float:
        law = self.law
        if isinstance(law, NoControl):
            return 0.0
        if isinstance(law, ExternalControl):
            h = law.signal.coeffs_at(t)
            return float(2.0 * np.pi * np.sum(np.abs(h) ** 2))
        return apply_G(u, self.gain).l2_norm() ** 2


def _nonlinear_stage(cfg: RunConfig):
    """Array-level dealiased -d/dx(u^2) evaluator (hot loop)."""
    n = cfg.n
    m = (3 * n) // 2 + ((3 * n) % 2)
    half = n // 2
    ik = 1j * wavenumbers(n).astype(np.float64)

    def nl(c: np.ndarray) -> np.ndarray:
        padded = np.zeros(m, dtype=np.complex128)
        padded[:half] = c[:half]
        padded[m - half + 1 :] = c[half + 1 :]
        fine = np.fft.ifft(padded * m).real
        sq = np.fft.fft(fine * fine) / m
        out = np.zeros(n, dtype=np.complex128)
        out[:half] = sq[:half]
        out[half + 1 :] = sq[m - half + 1 :]
        return -ik * out

    return nl


def rhs(u: SpectralField, t: float, cfg: RunConfig) -> SpectralField:
    """Full right-hand side: i phi(k) u_hat - (d/dx u^2)-hat + forcing."""
    if not np.all(np.isfinite(u.coeffs)):
        raise NonFiniteState("state coefficients are not finite")
    phi = phase_table(cfg.n, cfg.params.alpha, cfg.params.mu)
    out = 1j * phi * u.coeffs
    if not cfg.linear_only:
        out = out + _nonlinear_stage(cfg)(u.coeffs)
    forcing = _Forcing(cfg).coeffs(u.coeffs, t)
    if forcing is not None:
        out = out + forcing
    return SpectralField.from_coeffs(out)


def _resolve_steps(cfg: RunConfig) -> tuple[float, int]:
    """Signed step and step count; t_final < t0 integrates backward."""
    span = cfg.t_final - cfg.t0
    dt = cfg.dt if cfg.dt is not None else default_dt(cfg.n, cfg.params)
    steps = max(1, int(round(abs(span) / dt)))
    return span / steps, steps


def integrate(
    cfg: RunConfig,
    u0: SpectralField | None = None,
    self_check: bool = False,
) -> Trajectory:
    """Advance the closed-loop/forced equation from t0 to t_final.

    Deterministic for a fixed config.  With self_check=True the run is
    repeated at dt/2 and StepTooLarge is raised if the terminal L2 norm moves
    by more than 1e-6 relative.
    """
    traj = _integrate_once(cfg, u0)
    if self_check:
        fine_cfg = replace(cfg, dt=abs(_resolve_steps(cfg)[0]) / 2.0)
        fine = _integrate_once(fine_cfg, u0)
        a = traj.terminal_state.l2_norm()
        b = fine.terminal_state.l2_norm()
        scale = max(b, 1e-300)
        if abs(a - b) / scale > 1e-6:
            raise StepTooLarge(
                f"halving dt moved the terminal L2 norm by {abs(a - b) / scale:.3e} relative"
            )
    return traj


def _integrate_once(cfg: RunConfig, u0: SpectralField | None) -> Trajectory:
    n = cfg.n
    dt, steps = _resolve_steps(cfg)
    if u0 is None:
        u0 = initial_field(cfg)
    if u0.mode_count != n:
        raise ConfigError(f"initial field has {u0.mode_count} modes, config wants {n}")

    phi = phase_table(n, cfg.params.alpha, cfg.params.mu)
    e_half = np.exp(1j * phi * (dt / 2.0))
    e_full = e_half * e_half
    forcing = _Forcing(cfg)
    nl = None if cfg.linear_only else _nonlinear_stage(cfg)

    def f_stage(c: np.ndarray, t: float) -> np.ndarray:
        out = nl(c) if nl is not None else np.zeros(n, dtype=np.complex128)
        extra = forcing.coeffs(c, t)
        if extra is not None:
            out = out + extra
        return out

    c = u0.coeffs.astype(np.complex128).copy()
    c[0] = 0.0
    t = cfg.t0

    times = [t]
    states = [SpectralField.from_coeffs(c)]
    records = [_record(states[0], t, cfg, forcing)]

    for j in range(steps):
        f1 = f_stage(c, t)
        s2 = e_half * (c + (dt / 2.0) * f1)
        f2 = f_stage(s2, t + dt / 2.0)
        s3 = e_half * c + (dt / 2.0) * f2
        f3 = f_stage(s3, t + dt / 2.0)
        s4 = e_full * c + dt * (e_half * f3)
        f4 = f_stage(s4, t + dt)
        c = e_full * c + (dt / 6.0) * (e_full * f1 + 2.0 * e_half * (f2 + f3) + f4)
        c[0] = 0.0
        t = cfg.t0 + (j + 1) * dt
        if (j + 1) % cfg.sample_stride == 0 or j == steps - 1:
            if not np.all(np.isfinite(c)):
                raise NonFiniteState(f"state blew up at t = {t:.6g}")
            u = SpectralField.from_coeffs(c)
            c = u.coeffs.copy()  # resymmetrized
            times.append(t)
            states.append(u)
            records.append(_record(u, t, cfg, forcing))

    return Trajectory(times=np.array(times), states=states, records=records, config=cfg)


def _record(u: SpectralField, t: float, cfg: RunConfig, forcing: _Forcing) -> DiagnosticsRecord:
    return DiagnosticsRecord(
        t=t,
        l2=u.l2_norm(),
        hs=sobolev_norm(u, cfg.sobolev_index),
        I1=invariant_I1(u),
        I2=invariant_I2(u, cfg.params),
        control_energy=forcing.control_energy(u, t),
    )


def controlled_run(cfg: RunConfig, signal: ControlSignal, u0: SpectralField | None = None) -> Trajectory:
    """Forced run with an external control signal (feedback replaced)."""
    return integrate(replace(cfg, feedback=ExternalControl(signal)), u0=u0)
