"""Invariants, Sobolev norms, decay-rate fitting and seeded random fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveNorm
from .spectral import PhysicalParams, SpectralField, padded_cube_integral, wavenumbers

__all__ = [
    "DiagnosticsRecord",
    "DecayFit",
    "invariant_I1",
    "invariant_I2",
    "sobolev_norm",
    "fit_decay_rate",
    "random_smooth_field",
]


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Per-sample diagnostics of a trajectory."""

    t: float
    l2: float
    hs: float
    I1: float
    I2: float
    control_energy: float


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential fit of a norm history on a time window."""

    rate: float
    intercept: float
    r_squared: float
    window: tuple[float, float]


def invariant_I1(u: SpectralField) -> float:
    """Mass functional (1/2) * integral u^2 dx via Parseval."""
    return float(np.pi * np.sum(np.abs(u.coeffs) ** 2))


def invariant_I2(u: SpectralField, params: PhysicalParams) -> float:
    """Energy functional: integral of (1/2)(du)^2 - (alpha/2) u H du + (1/3) u^3.

    The cubic carries the sign that the equation du/dt = alpha H u_xx + u_xxx
    - (u^2)_x actually conserves; with -1/3 the time derivative is
    -2 * integral u^2 (u_xxx + alpha H u_xx) instead of zero.
    """
    k = wavenumbers(u.mode_count)
    power = np.abs(u.coeffs) ** 2
    grad_sq = 2.0 * np.pi * np.sum(k.astype(np.float64) ** 2 * power)
    # u * H d_x u has multiplier |k| against |u_hat|^2
    hilbert_term = 2.0 * np.pi * np.sum(np.abs(k).astype(np.float64) * power)
    cubic = padded_cube_integral(u)
    return float(0.5 * grad_sq - 0.5 * params.alpha * hilbert_term + cubic / 3.0)


def sobolev_norm(u: SpectralField, s: float) -> float:
    """H^s norm (2pi * sum <k>^(2s) |u_hat|^2)^(1/2) with <k> = (1+k^2)^(1/2)."""
    k = wavenumbers(u.mode_count).astype(np.float64)
    weight = (1.0 + k**2) ** s
    return float(np.sqrt(2.0 * np.pi * np.sum(weight * np.abs(u.coeffs) ** 2)))


def fit_decay_rate(times, norms, window: tuple[float, float]) -> DecayFit:
    """Fit log(norm) = intercept - rate * t by least squares on the window."""
    times = np.asarray(times, dtype=np.float64)
    norms = np.asarray(norms, dtype=np.float64)
    lo, hi = window
    mask = (times >= lo) & (times <= hi)
    t = times[mask]
    y = norms[mask]
    if t.size < 2:
        raise NonPositiveNorm(f"window {window} selects fewer than 2 samples")
    if np.any(y <= 0):
        raise NonPositiveNorm("norms must be strictly positive on the fit window")
    logy = np.log(y)
    slope, intercept = np.polyfit(t, logy, 1)
    pred = slope * t + intercept
    ss_res = float(np.sum((logy - pred) ** 2))
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit(rate=float(-slope), intercept=float(intercept), r_squared=r2, window=(lo, hi))


def random_smooth_field(
    n: int,
    seed: int | np.random.Generator,
    norm: float | None = None,
    decay_exponent: float = 2.0,
    mean_zero: bool = True,
) -> SpectralField:
    """Seeded random field with |u_hat(k)| ~ <k>^(-decay_exponent), random phases."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    k = wavenumbers(n).astype(np.float64)
    mag = (1.0 + k**2) ** (-decay_exponent / 2.0)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n)
    c = mag * np.exp(1j * phases)
    if mean_zero:
        c[0] = 0.0
    u = SpectralField.from_coeffs(c)
    if norm is not None:
        current = u.l2_norm()
        if current > 0:
            u = u * (norm / current)
    return u
