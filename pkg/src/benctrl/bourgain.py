"""Computable surrogates for the space-time analysis machinery: discrete
X_{s,b} / Y_{s,b} / Z_{s,b} norms, the L4 embedding ratio, and exhaustive
verification of the non-resonance inequalities.

Discrete convention: for M uniform samples on a window of length T_w, the
space-time coefficient is v_hat(k, tau_j) = dt * DFT_t(u_hat(k, t_m)) with
tau_j = 2 pi j / T_w, and the X-norm integral carries weight dtau = 2 pi/T_w.
This makes xsb_norm(s, 0) equal to the time-integrated H^s norm of the
(windowed) samples exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrequencies, DivisionByZeroNorm
from .spectral import PhysicalParams, SpectralField, phase_table, semigroup_apply, wavenumbers

__all__ = [
    "SpaceTimeField",
    "xsb_norm",
    "ysb_norm",
    "zsb_norm",
    "l4_embedding_ratio",
    "resonance_E",
    "verify_nonresonance",
    "NonResonanceReport",
]


def hann_window(m: int) -> np.ndarray:
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(m) / m))


@dataclass(frozen=True)
class SpaceTimeField:
    """Windowed space-time Fourier data v_hat(k, tau_j) of a real field."""

    coeffs: np.ndarray  # (M time frequencies, N space modes), FFT order both axes
    window_length: float

    @property
    def time_count(self) -> int:
        return self.coeffs.shape[0]

    @property
    def mode_count(self) -> int:
        return self.coeffs.shape[1]

    @property
    def dt(self) -> float:
        return self.window_length / self.time_count

    @property
    def tau(self) -> np.ndarray:
        m = self.time_count
        return 2.0 * np.pi * np.fft.fftfreq(m, d=self.dt)

    @classmethod
    def from_samples(cls, spatial_coeffs: np.ndarray, window_length: float, window: bool = True) -> "SpaceTimeField":
        """spatial_coeffs: (M, N) array of u_hat(k, t_m) on a uniform grid."""
        c = np.asarray(spatial_coeffs, dtype=np.complex128)
        m = c.shape[0]
        if window:
            c = c * hann_window(m)[:, None]
        dt = window_length / m
        vhat = dt * np.fft.fft(c, axis=0)
        return cls(coeffs=vhat, window_length=window_length)

    @classmethod
    def from_trajectory(cls, traj, window: bool = True) -> "SpaceTimeField":
        times = traj.times
        spacing = np.diff(times)
        if spacing.size and (spacing.max() - spacing.min()) > 1e-9 * spacing.max():
            raise ValueError("trajectory samples must be uniformly spaced")
        # drop the final sample: M uniform intervals cover the periodic window
        stack = np.stack([u.coeffs for u in traj.states[:-1]])
        return cls.from_samples(stack, window_length=times[-1] - times[0], window=window)

    @classmethod
    def from_linear_evolution(
        cls,
        u0: SpectralField,
        params: PhysicalParams,
        window_length: float,
        samples: int,
        window: bool = True,
    ) -> "SpaceTimeField":
        """Exact free evolution U(t) u0 sampled on the window (no time stepping)."""
        phi = phase_table(u0.mode_count, params.alpha, params.mu)
        t = window_length * np.arange(samples) / samples
        stack = np.exp(1j * np.outer(t, phi)) * u0.coeffs[None, :]
        return cls.from_samples(stack, window_length, window=window)

    def physical_values(self) -> np.ndarray:
        """Windowed physical samples v(x_i, t_m), shape (M, N)."""
        m, n = self.coeffs.shape
        spatial = np.fft.ifft(self.coeffs, axis=0) / self.dt
        return np.fft.ifft(spatial * n, axis=1).real


def _weights(v: SpaceTimeField, s: float, b: float, params: PhysicalParams) -> np.ndarray:
    k = wavenumbers(v.mode_count).astype(np.float64)
    phi = phase_table(v.mode_count, params.alpha, params.mu)
    bracket_k = (1.0 + k**2) ** (s / 2.0)
    mod = v.tau[:, None] - phi[None, :]
    bracket_mod = (1.0 + mod**2) ** (b / 2.0)
    return bracket_k[None, :] * bracket_mod


def xsb_norm(v: SpaceTimeField, s: float, b: float, params: PhysicalParams) -> float:
    """(sum_k int <k>^2s <tau - phi(k)>^2b |v_hat|^2 dtau)^(1/2), dtau = 2pi/T_w."""
    w = _weights(v, s, b, params)
    dtau = 2.0 * np.pi / v.window_length
    return float(np.sqrt(np.sum((w * np.abs(v.coeffs)) ** 2) * dtau))


def ysb_norm(v: SpaceTimeField, s: float, b: float, params: PhysicalParams) -> float:
    """(sum_k (int <k>^s <tau - phi(k)>^b |v_hat| dtau)^2)^(1/2)."""
    w = _weights(v, s, b, params)
    dtau = 2.0 * np.pi / v.window_length
    per_mode = np.sum(w * np.abs(v.coeffs), axis=0) * dtau
    return float(np.sqrt(np.sum(per_mode**2)))


def zsb_norm(v: SpaceTimeField, s: float, b: float, params: PhysicalParams) -> float:
    """Z_{s,b} norm: X_{s,b} plus Y_{s,b-1/2}."""
    return xsb_norm(v, s, b, params) + ysb_norm(v, s, b - 0.5, params)


def l4_embedding_ratio(v: SpaceTimeField, params: PhysicalParams) -> float:
    """|v|_L4(space-time) / |v|_X_{0,1/3} on the discrete window."""
    denom = xsb_norm(v, 0.0, 1.0 / 3.0, params)
    if denom == 0.0:
        raise DivisionByZeroNorm("X_{0,1/3} norm vanishes")
    vals = v.physical_values()
    cell = (2.0 * np.pi / v.mode_count) * v.dt
    l4 = float(np.sum(vals**4) * cell) ** 0.25
    return l4 / denom


def resonance_E(k: int, k1: int, alpha: float) -> float:
    """E(k,k1) = -alpha k|k| + alpha k1|k1| + alpha (k-k1)|k-k1| + 3 k k1 (k-k1)."""
    if k == 0 or k1 == 0 or k == k1:
        raise DegenerateFrequencies(f"k={k}, k1={k1} gives a zero frequency")
    cubic = 3 * k * k1 * (k - k1)
    return float(alpha * (-k * abs(k) + k1 * abs(k1) + (k - k1) * abs(k - k1)) + cubic)


@dataclass(frozen=True)
class NonResonanceReport:
    k_max: int
    alpha: float
    c_alpha: float
    checked_pairs: int
    cubic_violations: list[tuple[int, int]]
    product_violations: list[tuple[int, int]]
    modulation_violations: list[tuple[int, int]]

    @property
    def total_violations(self) -> int:
        return (
            len(self.cubic_violations)
            + len(self.product_violations)
            + len(self.modulation_violations)
        )


def verify_nonresonance(k_max: int, alpha: float, c_alpha: float = 0.5) -> NonResonanceReport:
    """Exhaustively check, for |k|,|k1| <= k_max with k*k1*(k-k1) != 0:

    (i)  |3 k k1 (k-k1)| >= (3/2) k^2          (exact, integers)
    (ii) |k1 (k-k1)| >= |k| / 2                (exact, integers)
    (iii) |E(k,k1)| >= 3 c_alpha |k k1 (k-k1)| whenever
          max(|k|,|k1|,|k-k1|) >= max(1, 4 alpha / 3).
    """
    if k_max < 2:
        raise ValueError(f"k_max must be >= 2, got {k_max}")
    rng = np.arange(-k_max, k_max + 1, dtype=np.int64)
    k, k1 = np.meshgrid(rng, rng, indexing="ij")
    kd = k - k1
    admissible = (k != 0) & (k1 != 0) & (kd != 0)

    cubic = 3 * k * k1 * kd
    # (i): 2 |cubic| >= 3 k^2 in exact integer arithmetic
    bad_cubic = admissible & (2 * np.abs(cubic) < 3 * k * k)
    # (ii): 2 |k1 (k-k1)| >= |k|
    bad_product = admissible & (2 * np.abs(k1 * kd) < np.abs(k))

    e_val = alpha * (
        -(k * np.abs(k)).astype(np.float64)
        + (k1 * np.abs(k1)).astype(np.float64)
        + (kd * np.abs(kd)).astype(np.float64)
    ) + cubic.astype(np.float64)
    threshold = np.maximum(1.0, 4.0 * alpha / 3.0)
    large = np.maximum(np.abs(k), np.maximum(np.abs(k1), np.abs(kd))) >= threshold
    bad_mod = admissible & large & (np.abs(e_val) < 3.0 * c_alpha * np.abs(k * k1 * kd).astype(np.float64))

    def pairs(mask) -> list[tuple[int, int]]:
        ii, jj = np.nonzero(mask)
        return [(int(rng[i]), int(rng[j])) for i, j in zip(ii[:100], jj[:100])]

    return NonResonanceReport(
        k_max=k_max,
        alpha=alpha,
        c_alpha=c_alpha,
        checked_pairs=int(np.count_nonzero(admissible)),
        cubic_violations=pairs(bad_cubic),
        product_violations=pairs(bad_product),
        modulation_violations=pairs(bad_mod),
    )
