"""Fourier representation of real fields on the 2*pi torus and the diagonal
multiplier operators of the Benjamin equation.

Coefficients follow the convention u_hat(k) = (1/2pi) * integral of
u(x) exp(-i k x) dx, so u(x) = sum_k u_hat(k) exp(i k x) and Parseval reads
integral |u|^2 dx = 2pi * sum_k |u_hat(k)|^2.  Arrays are stored in numpy FFT
order; the Nyquist mode N/2 is always zeroed so every stored field has an
exact Hermitian-symmetric (real-valued) spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "PhysicalParams",
    "SpectralField",
    "wavenumbers",
    "phase_symbol",
    "phase_table",
    "hilbert_transform",
    "fractional_magnitude",
    "derivative",
    "semigroup_apply",
    "nonlinear_term",
    "project_mean_zero",
    "padded_cube_integral",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Dispersion mix coefficient alpha > 0 and drift (datum mean) mu."""

    alpha: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@lru_cache(maxsize=64)
def wavenumbers(n: int) -> np.ndarray:
    """Integer wavenumbers in FFT order: 0, 1, .., n/2-1, -n/2, .., -1."""
    k = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
    k.flags.writeable = False
    return k


@lru_cache(maxsize=64)
def grid(n: int) -> np.ndarray:
    x = 2.0 * np.pi * np.arange(n) / n
    x.flags.writeable = False
    return x


def _nyquist_index(n: int) -> int:
    return n // 2


def phase_symbol(k: int, params: PhysicalParams) -> float:
    """Dispersion phase -k^3 - 2*mu*k + alpha*k*|k| of the linear group."""
    kf = float(k)
    return -(kf**3) - 2.0 * params.mu * kf + params.alpha * kf * abs(kf)


@lru_cache(maxsize=64)
def phase_table(n: int, alpha: float, mu: float) -> np.ndarray:
    k = wavenumbers(n).astype(np.float64)
    phi = -(k**3) - 2.0 * mu * k + alpha * k * np.abs(k)
    phi.flags.writeable = False
    return phi


def _normalize(coeffs: np.ndarray) -> np.ndarray:
    """Zero the Nyquist mode, enforce exact Hermitian symmetry, freeze."""
    n = coeffs.shape[0]
    if n % 2 != 0:
        raise ValueError(f"mode count must be even, got {n}")
    c = np.asarray(coeffs, dtype=np.complex128).copy()
    c[_nyquist_index(n)] = 0.0
    flipped = np.conj(np.roll(c[::-1], 1))  # maps index k -> -k
    c = 0.5 * (c + flipped)
    c[0] = complex(c[0].real, 0.0)
    c.flags.writeable = False
    return c


@dataclass(frozen=True)
class SpectralField:
    """Immutable real field on [0, 2pi) held as truncated Fourier coefficients."""

    coeffs: np.ndarray

    @classmethod
    def from_coeffs(cls, coeffs: np.ndarray) -> "SpectralField":
        return cls(_normalize(coeffs))

    @classmethod
    def from_samples(cls, values: np.ndarray) -> "SpectralField":
        values = np.asarray(values, dtype=np.float64)
        return cls.from_coeffs(np.fft.fft(values) / values.shape[0])

    @classmethod
    def from_function(cls, f, n: int) -> "SpectralField":
        return cls.from_samples(f(grid(n)))

    @classmethod
    def zero(cls, n: int) -> "SpectralField":
        return cls.from_coeffs(np.zeros(n, dtype=np.complex128))

    @classmethod
    def cosine(cls, n: int, mode: int = 1, amplitude: float = 1.0) -> "SpectralField":
        c = np.zeros(n, dtype=np.complex128)
        c[mode % n] = amplitude / 2.0
        c[-mode % n] += amplitude / 2.0
        return cls.from_coeffs(c)

    @classmethod
    def sine(cls, n: int, mode: int = 1, amplitude: float = 1.0) -> "SpectralField":
        c = np.zeros(n, dtype=np.complex128)
        c[mode % n] = amplitude / 2j
        c[-mode % n] += -amplitude / 2j
        return cls.from_coeffs(c)

    @property
    def mode_count(self) -> int:
        return self.coeffs.shape[0]

    @property
    def values(self) -> np.ndarray:
        """Physical samples on the uniform grid."""
        return np.fft.ifft(self.coeffs * self.mode_count).real

    @property
    def mean(self) -> float:
        return float(self.coeffs[0].real)

    @property
    def is_mean_zero(self) -> bool:
        return self.coeffs[0] == 0.0

    def l2_norm(self) -> float:
        return float(np.sqrt(2.0 * np.pi * np.sum(np.abs(self.coeffs) ** 2)))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField.from_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField.from_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField.from_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField.from_coeffs(-self.coeffs)


def hilbert_transform(u: SpectralField) -> SpectralField:
    """Multiplier -i*sgn(k); annihilates the mean mode."""
    k = wavenumbers(u.mode_count)
    return SpectralField.from_coeffs(-1j * np.sign(k) * u.coeffs)


def fractional_magnitude(u: SpectralField, r: float) -> SpectralField:
    """|k|^r on nonzero modes, identity on the mean mode."""
    k = wavenumbers(u.mode_count)
    mult = np.ones(u.mode_count)
    nz = k != 0
    mult[nz] = np.abs(k[nz]).astype(np.float64) ** r
    return SpectralField.from_coeffs(mult * u.coeffs)


def derivative(u: SpectralField, order: int = 1) -> SpectralField:
    if order < 1:
        raise ValueError(f"order must be a positive integer, got {order}")
    k = wavenumbers(u.mode_count)
    return SpectralField.from_coeffs((1j * k) ** order * u.coeffs)


def semigroup_apply(u: SpectralField, t: float, params: PhysicalParams) -> SpectralField:
    """Exact linear group U_mu(t): multiply mode k by exp(i*phi(k)*t)."""
    phi = phase_table(u.mode_count, params.alpha, params.mu)
    return SpectralField.from_coeffs(np.exp(1j * phi * t) * u.coeffs)


def project_mean_zero(u: SpectralField) -> SpectralField:
    c = u.coeffs.copy()
    c[0] = 0.0
    return SpectralField.from_coeffs(c)


@lru_cache(maxsize=64)
def _padded_size(n: int) -> int:
    m = (3 * n) // 2
    if 3 * n % 2 != 0:
        m += 1
    return m


def _pad(coeffs: np.ndarray, m: int) -> np.ndarray:
    n = coeffs.shape[0]
    half = n // 2
    padded = np.zeros(m, dtype=np.complex128)
    padded[:half] = coeffs[:half]
    padded[m - half + 1 :] = coeffs[half + 1 :]
    return padded


def _truncate(coeffs_m: np.ndarray, n: int) -> np.ndarray:
    m = coeffs_m.shape[0]
    half = n // 2
    out = np.zeros(n, dtype=np.complex128)
    out[:half] = coeffs_m[:half]
    out[half + 1 :] = coeffs_m[m - half + 1 :]
    return out


def dealiased_square(u: SpectralField) -> SpectralField:
    """u^2 with 3/2 zero padding: exact for the retained quadratic modes."""
    n = u.mode_count
    m = _padded_size(n)
    fine = np.fft.ifft(_pad(u.coeffs, m) * m).real
    sq = np.fft.fft(fine * fine) / m
    return SpectralField.from_coeffs(_truncate(sq, n))


def nonlinear_term(u: SpectralField) -> SpectralField:
    """Dealiased spectral d/dx(u^2); mean-zero by construction."""
    return derivative(dealiased_square(u), 1)


def padded_cube_integral(u: SpectralField) -> float:
    """integral of u^3 dx, alias-free on the 3/2 padded grid."""
    n = u.mode_count
    m = _padded_size(n)
    fine = np.fft.ifft(_pad(u.coeffs, m) * m).real
    return float(2.0 * np.pi * np.mean(fine**3))
