"""Localized control operator G, the damping feedbacks GG*, K_lambda with its
integral operator L_lambda, and the time-varying feedback law with smooth
cutoffs rho and theta."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import QuadratureTooCoarse, SingularOperator
from .spectral import (
    PhysicalParams,
    SpectralField,
    grid,
    phase_table,
    semigroup_apply,
    wavenumbers,
)

__all__ = [
    "GainProfile",
    "LLambdaSpec",
    "TimeVaryingSpec",
    "DenseHermitianOperator",
    "apply_G",
    "apply_K0",
    "gain_inner_product",
    "gg_star_matrix",
    "assemble_L_lambda",
    "apply_K_lambda",
    "cutoff_rho",
    "cutoff_theta",
    "time_varying_feedback",
]


@dataclass(frozen=True)
class GainProfile:
    """Nonnegative gain g with unit integral, supported on an open interval."""

    samples: np.ndarray
    support: tuple[float, float]

    @classmethod
    def raised_cosine(cls, n: int, center: float = np.pi, width: float = 2.0) -> "GainProfile":
        """cos^2 bump on (center-width/2, center+width/2), normalized to unit integral."""
        x = grid(n)
        half = width / 2.0
        dist = np.angle(np.exp(1j * (x - center)))  # periodic distance in (-pi, pi]
        g = np.where(np.abs(dist) < half, np.cos(np.pi * dist / width) ** 2, 0.0)
        integral = 2.0 * np.pi * g.mean()
        g = g / integral
        g.flags.writeable = False
        return cls(samples=g, support=(center - half, center + half))

    @classmethod
    def uniform(cls, n: int) -> "GainProfile":
        """Degenerate g = 1/(2pi) acting on the whole torus (closed-form tests)."""
        g = np.full(n, 1.0 / (2.0 * np.pi))
        g.flags.writeable = False
        return cls(samples=g, support=(0.0, 2.0 * np.pi))

    @property
    def mode_count(self) -> int:
        return self.samples.shape[0]

    def integral(self) -> float:
        return float(2.0 * np.pi * self.samples.mean())


def gain_inner_product(gain: GainProfile, values: np.ndarray) -> float:
    """integral g(y) h(y) dy by the spectral (rectangle) rule."""
    return float(2.0 * np.pi * np.mean(gain.samples * values))


def apply_G(h: SpectralField, gain: GainProfile) -> SpectralField:
    """G h = g * (h - integral g h dy); self-adjoint, exactly mean-free."""
    if gain.mode_count != h.mode_count:
        raise ValueError(
            f"gain sampled on {gain.mode_count} points, field has {h.mode_count} modes"
        )
    vals = h.values
    bracket = vals - gain_inner_product(gain, vals)
    out = SpectralField.from_samples(gain.samples * bracket)
    c = out.coeffs.copy()
    c[0] = 0.0
    return SpectralField.from_coeffs(c)


def apply_K0(u: SpectralField, gain: GainProfile) -> SpectralField:
    """GG* u (G is self-adjoint, so G* = G)."""
    return apply_G(apply_G(u, gain), gain)


@dataclass(frozen=True)
class LLambdaSpec:
    """Parameters of L_lambda = integral_0^a exp(-2 lambda tau) U(-tau) GG* U(tau) dtau."""

    lam: float = 1.0
    a: float = 1.0
    quad_nodes: int = 64

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if not self.a > 0:
            raise ValueError(f"upper limit a must be positive, got {self.a}")
        if self.quad_nodes < 8:
            raise ValueError(f"quad_nodes must be >= 8, got {self.quad_nodes}")


@dataclass(frozen=True)
class TimeVaryingSpec:
    """Parameters of the time-varying feedback K(u, t)."""

    lam: float = 1.0
    period_T: float = 1.0
    r0: float = 0.1
    delta: float = 0.05
    a: float = 1.0
    quad_nodes: int = 64
    sobolev_index: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.period_T > 0:
            raise ValueError("period_T must be positive")
        if not 0.0 < self.r0 < 1.0:
            raise ValueError(f"r0 must lie in (0,1), got {self.r0}")
        if not 0.0 < self.delta < 0.1:
            raise ValueError(f"delta must lie in (0, 1/10), got {self.delta}")

    def l_lambda_spec(self) -> LLambdaSpec:
        return LLambdaSpec(lam=self.lam, a=self.a, quad_nodes=self.quad_nodes)


def retained_mode_indices(n: int) -> np.ndarray:
    """FFT-order indices of the modes a dense operator acts on: k != 0, Nyquist dropped."""
    idx = np.arange(n)
    return idx[(idx != 0) & (idx != n // 2)]


@dataclass(frozen=True)
class DenseHermitianOperator:
    """Dense Hermitian matrix acting on the retained mean-zero Fourier modes."""

    matrix: np.ndarray
    mode_indices: np.ndarray
    n: int
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermitian_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return scipy.linalg.eigvalsh(self.matrix)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    def max_eigenvalue(self) -> float:
        return float(self.eigenvalues[-1])

    def condition_number(self) -> float:
        lo, hi = self.eigenvalues[0], self.eigenvalues[-1]
        return float(np.inf) if lo <= 0 else float(hi / lo)

    @cached_property
    def _cholesky(self):
        if self.min_eigenvalue() < 1e-12 * abs(self.max_eigenvalue()):
            raise SingularOperator(
                f"operator not positive definite: min eig {self.min_eigenvalue():.3e}, "
                f"max eig {self.max_eigenvalue():.3e}"
            )
        try:
            return scipy.linalg.cho_factor(self.matrix)
        except scipy.linalg.LinAlgError as exc:  # pragma: no cover - guarded above
            raise SingularOperator(str(exc)) from exc

    def to_vector(self, u: SpectralField) -> np.ndarray:
        return u.coeffs[self.mode_indices]

    def field_from_vector(self, vec: np.ndarray) -> SpectralField:
        c = np.zeros(self.n, dtype=np.complex128)
        c[self.mode_indices] = vec
        return SpectralField.from_coeffs(c)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def solve(self, vec: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve(self._cholesky, vec)


def gg_star_matrix(gain: GainProfile, n: int) -> np.ndarray:
    """Matrix of GG* on the retained modes (Fourier side, mod-n convolution).

    G_{k,m} = g_hat((k-m) mod n) - 2pi g_hat(k) g_hat(-m), identical to the
    physical-space apply_G on the truncated grid.
    """
    if gain.mode_count != n:
        raise ValueError(f"gain sampled on {gain.mode_count} points, operator wants {n}")
    ghat = np.fft.fft(gain.samples) / n
    idx = retained_mode_indices(n)
    k = wavenumbers(n)
    kk = k[idx]
    diff = np.mod(kk[:, None] - kk[None, :], n)
    gmat = ghat[diff] - 2.0 * np.pi * np.outer(ghat[np.mod(kk, n)], ghat[np.mod(-kk, n)])
    a = gmat @ gmat
    return 0.5 * (a + a.conj().T)


def _simpson_exponential(z: np.ndarray, a: float, intervals: int) -> np.ndarray:
    """Composite-Simpson value of integral_0^a exp(z*tau) dtau, elementwise.

    Evaluated through the geometric closed form of the Simpson sum so the
    interval count can be made as large as the oscillation of z demands at
    O(1) cost.  Entries with |2 z h| below 1e-5 are returned as the exact
    integral, which coincides with the Simpson value to double precision.
    """
    m = int(intervals)
    if m % 2:
        m += 1
    h = a / m
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty(z.shape, dtype=np.complex128)

    small = np.abs(2.0 * z * h) < 1e-5
    zs = z[small]
    exact = np.empty(zs.shape, dtype=np.complex128)
    tiny = np.abs(zs) * a < 1e-12
    exact[tiny] = a
    exact[~tiny] = np.expm1(zs[~tiny] * a) / zs[~tiny]
    out[small] = exact

    zb = z[~small]
    r = np.exp(zb * h)
    r2 = r * r
    ra = np.exp(zb * a)
    denom = np.expm1(2.0 * zb * h)
    odd = 4.0 * r * (ra - 1.0) / denom
    even = 2.0 * (ra - r2) / denom
    out[~small] = (h / 3.0) * (1.0 + ra + odd + even)
    return out


def _default_intervals(a: float, max_abs_z: float, requested: int) -> int:
    # ~256 Simpson points per oscillation period keeps the relative error
    # below the 1e-8 doubling tolerance with margin.
    auto = int(np.ceil(a * max_abs_z * 256.0 / (2.0 * np.pi))) + 16
    m = max(int(requested), auto)
    return m + (m % 2)


def _conjugated_integral(
    ggs: np.ndarray,
    phases: np.ndarray,
    decay: float,
    a: float,
    intervals: int,
) -> np.ndarray:
    """Entrywise Simpson of exp(-decay*tau) * U(-tau) GG* U(tau) over [0, a]."""
    dphi = phases[None, :] - phases[:, None]
    z = -decay + 1j * dphi
    return ggs * _simpson_exponential(z, a, intervals)


def _assemble_conjugated(
    gain: GainProfile,
    params: PhysicalParams,
    n: int,
    decay: float,
    a: float,
    quad_nodes: int,
    enforce_nodes: bool,
    flip_conjugation: bool,
    meta: dict,
) -> DenseHermitianOperator:
    idx = retained_mode_indices(n)
    phases = phase_table(n, params.alpha, params.mu)[idx]
    if flip_conjugation:
        phases = -phases
    ggs = gg_star_matrix(gain, n)
    max_abs_z = abs(decay) + 2.0 * float(np.max(np.abs(phases)))
    m = quad_nodes + (quad_nodes % 2) if enforce_nodes else _default_intervals(a, max_abs_z, quad_nodes)
    coarse = _conjugated_integral(ggs, phases, decay, a, m)
    fine = _conjugated_integral(ggs, phases, decay, a, 2 * m)
    scale = float(np.max(np.abs(fine)))
    drift = float(np.max(np.abs(fine - coarse)))
    if scale > 0 and drift > 1e-8 * scale:
        raise QuadratureTooCoarse(
            f"doubling {m} Simpson intervals moved entries by {drift / scale:.3e} relative"
        )
    mat = 0.5 * (fine + fine.conj().T)
    return DenseHermitianOperator(matrix=mat, mode_indices=idx, n=n, meta=dict(meta, intervals=m))


def assemble_L_lambda(
    spec: LLambdaSpec,
    gain: GainProfile,
    params: PhysicalParams,
    n: int,
    enforce_nodes: bool = False,
) -> DenseHermitianOperator:
    """L_lambda = integral_0^a exp(-2 lambda tau) U(-tau) GG* U(-tau)* dtau.

    Hermitian and positive definite on the retained mean-zero modes.
    """
    return _assemble_conjugated(
        gain,
        params,
        n,
        decay=2.0 * spec.lam,
        a=spec.a,
        quad_nodes=spec.quad_nodes,
        enforce_nodes=enforce_nodes,
        flip_conjugation=False,
        meta={"kind": "L_lambda", "lam": spec.lam, "a": spec.a},
    )


def apply_K_lambda(
    u: SpectralField, l_op: DenseHermitianOperator, gain: GainProfile
) -> SpectralField:
    """K_lambda u = GG* L_lambda^{-1} u on mean-zero u."""
    v = l_op.solve(l_op.to_vector(u))
    return apply_K0(l_op.field_from_vector(v), gain)


def _smoothstep(x: np.ndarray | float):
    """Seventh-order polynomial step: 0 at x<=0, 1 at x>=1, C^3 at both ends."""
    x = np.clip(x, 0.0, 1.0)
    return x**4 * (35.0 - 84.0 * x + 70.0 * x**2 - 20.0 * x**3)


def cutoff_rho(r: float, spec: TimeVaryingSpec) -> float:
    """Nonincreasing bridge: 1 for r <= r0, 0 for r >= 1."""
    if r < 0:
        raise ValueError(f"rho argument must be nonnegative, got {r}")
    return float(1.0 - _smoothstep((r - spec.r0) / (1.0 - spec.r0)))


def cutoff_theta(t: float, spec: TimeVaryingSpec) -> float:
    """2-periodic bump: 1 on [delta, 1-delta], 0 on [1, 2], smooth ramps."""
    s = float(np.mod(t, 2.0))
    d = spec.delta
    if s >= 1.0:
        return 0.0
    if s < d:
        return float(_smoothstep(s / d))
    if s > 1.0 - d:
        return float(_smoothstep((1.0 - s) / d))
    return 1.0


def time_varying_feedback(
    u: SpectralField,
    t: float,
    spec: TimeVaryingSpec,
    l_op: DenseHermitianOperator,
    gain: GainProfile,
    s: float | None = None,
) -> SpectralField:
    """K(u,t) = rho(|u|_Hs^2) [theta(t/T) K_lam u + theta(t/T - 1) GG* u]
    + (1 - rho(|u|_Hs^2)) GG* u."""
    from .diagnostics import sobolev_norm

    s_idx = spec.sobolev_index if s is None else s
    rho = cutoff_rho(sobolev_norm(u, s_idx) ** 2, spec)
    theta_fast = cutoff_theta(t / spec.period_T, spec)
    theta_slow = cutoff_theta(t / spec.period_T - 1.0, spec)
    ggu = apply_K0(u, gain)
    out = ((1.0 - rho) + rho * theta_slow) * ggu
    if rho * theta_fast != 0.0:
        out = out + (rho * theta_fast) * apply_K_lambda(u, l_op, gain)
    return out
