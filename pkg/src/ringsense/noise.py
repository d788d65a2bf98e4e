"""Correlation kernels of the optical input noise and of the sidemode thermal baths.

All kernels are densities against dω'/2π; the spectrum assemblers apply that
measure, so nothing here carries a 2π·δ factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import HBAR, K_B, DomainError

__all__ = [
    "SqueezeParams",
    "NoiseKernel",
    "squeeze_moments",
    "optical_kernel",
    "thermal_kernel",
    "thermal_photon_number",
    "VACUUM",
]

# Above this value of ħω/k_BT the Bose occupation is set to exactly zero.
_OCCUPATION_CUTOFF = 50.0


@dataclass(frozen=True)
class SqueezeParams:
    """Squeezed-vacuum input: amplitude ``r``, angle ``theta`` and thermal photons ``N_a``.

    ``convention`` fixes the sign of the anomalous moment.  With ``"textbook"``
    (default) ⟨a_in a_in⟩ = −e^{iθ} sinh r cosh r, so θ = π squeezes the phase
    quadrature P.  With ``"printed"`` the moment is +e^{iθ} sinh r cosh r and
    θ = π squeezes the amplitude quadrature Q instead.
    """

    r: float = 0.0
    theta: float = 0.0
    thermal_photons: float = 0.0
    convention: str = "textbook"

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0):
            raise DomainError(f"squeeze amplitude must be finite and >= 0, got {self.r!r}")
        if not math.isfinite(self.theta):
            raise DomainError("squeeze angle must be finite")
        if not (math.isfinite(self.thermal_photons) and self.thermal_photons >= 0):
            raise DomainError("thermal_photons must be finite and >= 0")
        if self.convention not in ("textbook", "printed"):
            raise DomainError(f"unknown squeeze convention {self.convention!r}")


VACUUM = SqueezeParams()


@dataclass(frozen=True)
class NoiseKernel:
    """Coefficients of the delta-correlated optical input ⟨K_in(ω) K'_in(ω')⟩."""

    chi_QQ: complex
    chi_PP: complex
    chi_QP: complex
    chi_PQ: complex


def squeeze_moments(sq: SqueezeParams) -> tuple[float, complex]:
    """Normal and anomalous moments (N_r, M_r)."""
    s, c = math.sinh(sq.r), math.cosh(sq.r)
    na = sq.thermal_photons
    n_r = s * s + na * (s * s + c * c)
    sign = -1.0 if sq.convention == "textbook" else 1.0
    m_r = sign * complex(math.cos(sq.theta), math.sin(sq.theta)) * s * c * (2 * na + 1)
    return n_r, m_r


def optical_kernel(sq: SqueezeParams) -> NoiseKernel:
    n_r, m_r = squeeze_moments(sq)
    skew = m_r.conjugate() - m_r
    return NoiseKernel(
        chi_QQ=complex(2 * n_r + 1 + 2 * m_r.real),
        chi_PP=complex(2 * n_r + 1 - 2 * m_r.real),
        chi_QP=1 + skew,
        chi_PQ=-1 + skew,
    )


def _coth(x: float) -> float:
    if x > 20.0:
        return 1.0
    return 1.0 / math.tanh(x)


def thermal_kernel(omega, omega_k: float, T_k: float, gamma: float):
    """Thermal force kernel of a sidemode with frequency ``omega_k`` (rad/s).

    For ω ≥ 0 this is B_k(coth(ħω_k/2k_BT_k) + 1) with B_k = 2πγω/ω_k.  Negative
    arguments are needed by the Floquet assembly; there the kernel is
    2πγ|ω|/ω_k·(coth − 1), which is the detailed-balance partner and keeps the
    kernel non-negative.  Both branches are written as 2πγ(|ω| coth + ω)/ω_k.
    """
    if omega_k <= 0:
        raise DomainError("thermal_kernel needs omega_k > 0")
    if T_k < 0:
        raise DomainError("temperature must be non-negative")
    thermal = 2 * K_B * T_k  # may underflow to 0 for subnormal T_k
    ctn = 1.0 if thermal == 0 else _coth(HBAR * omega_k / thermal)
    w = np.asarray(omega, dtype=float)
    return 2 * np.pi * gamma * (np.abs(w) * ctn + w) / omega_k


def thermal_photon_number(omega_a: float, T: float) -> float:
    """Bose occupation at angular frequency ``omega_a``; exactly 0 when ħω/k_BT > 50."""
    if omega_a <= 0:
        raise DomainError("omega_a must be positive")
    if K_B * T <= 0:
        return 0.0
    x = HBAR * omega_a / (K_B * T)
    if x > _OCCUPATION_CUTOFF:
        return 0.0
    return 1.0 / math.expm1(x)
