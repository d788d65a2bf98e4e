"""Physical parameters of the ring-condensate sensor and closed-form derived frequencies.

Every frequency-like field of :class:`SystemParams` is an ordinary frequency
in Hz.  :func:`derive` multiplies by 2π exactly once; all solver modules work
with the angular quantities in :class:`DerivedFrequencies`.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
from scipy.constants import hbar as HBAR
from scipy.constants import k as K_B

TWO_PI = 2.0 * np.pi

__all__ = [
    "HBAR",
    "K_B",
    "TWO_PI",
    "DomainError",
    "SystemParams",
    "DerivedFrequencies",
    "sidemode_frequencies",
    "collision_shift",
    "drive_amplitude",
    "winding_gap",
    "derive",
    "paper_defaults",
]


class DomainError(ValueError):
    """A parameter lies outside the physical domain of an operation."""


@dataclass(frozen=True)
class SystemParams:
    """All physical inputs.  Frequencies in Hz (/2π), power in W, temperatures in K.

    ``winding_number`` is physically an integer but is stored as a float so the
    sensitivity module can differentiate with respect to it.

    ``detuning_reference`` selects how ``detuning`` is read: ``"effective"``
    means it is the steady-state shifted detuning Δ' (the bare Δ is then solved
    for), ``"bare"`` means it is the Hamiltonian detuning Δ.
    """

    atom_count: float = 1.0e4
    moment_of_inertia_over_hbar: float = 0.0505  # seconds
    winding_number: float = 1.0
    oam_order: int = 10
    collision_rate: float = 14.0  # gN
    coupling: float = 7.5e3  # G
    cavity_linewidth: float = 2.0e6  # kappa
    mechanical_damping: float = 0.8  # gamma
    detuning: float = 0.0
    detuning_reference: str = "effective"
    input_power: float = 12.4e-15
    laser_frequency: float = 1.0e14  # omega_a
    bec_temperature: float = 20.0e-9
    ambient_temperature: float = 300.0
    # trap geometry, carried as metadata only
    ring_radius: float = 12.0e-6
    radial_trap_frequency: float = 42.0
    axial_trap_frequency: float = 42.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (int, float)) and not math.isfinite(v):
                raise DomainError(f"{f.name} must be finite, got {v!r}")
        checks = [
            ("atom_count", self.atom_count > 0),
            ("moment_of_inertia_over_hbar", self.moment_of_inertia_over_hbar > 0),
            ("oam_order", self.oam_order > 0),
            ("collision_rate", self.collision_rate >= 0),
            ("cavity_linewidth", self.cavity_linewidth > 0),
            ("mechanical_damping", self.mechanical_damping >= 0),
            ("input_power", self.input_power >= 0),
            ("laser_frequency", self.laser_frequency > 0),
            ("bec_temperature", self.bec_temperature >= 0),
            ("ambient_temperature", self.ambient_temperature >= 0),
        ]
        for name, ok in checks:
            if not ok:
                raise DomainError(f"{name} out of range: {getattr(self, name)!r}")
        if self.detuning_reference not in ("effective", "bare"):
            raise DomainError(f"detuning_reference must be 'effective' or 'bare', got {self.detuning_reference!r}")

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DerivedFrequencies:
    """Angular (rad/s) quantities derived from :class:`SystemParams`.

    ``coupling_A`` is in rad²/s², ``eta`` in s⁻¹.  The rates ``kappa``,
    ``gamma``, ``G``, ``gN`` and ``detuning`` are the 2π-scaled copies of the
    corresponding parameter fields, kept here so no solver converts twice.
    """

    omega_c: float
    omega_d: float
    Omega_c: float
    Omega_d: float
    coupling_A: float
    omega_tilde_c: float
    omega_tilde_d: float
    omega_m: float
    Omega: float
    eta: float
    kappa: float
    gamma: float
    G: float
    gN: float
    detuning: float


def _angular(hz: float) -> float:
    return TWO_PI * hz


def sidemode_frequencies(params: SystemParams) -> tuple[float, float]:
    """Sidemode frequencies (ω_c, ω_d) in rad/s for windings L_p ± 2l."""
    ih = params.moment_of_inertia_over_hbar
    if ih <= 0:
        raise DomainError("moment_of_inertia_over_hbar must be positive")
    lp, l = params.winding_number, params.oam_order
    return (lp + 2 * l) ** 2 / (2.0 * ih), (lp - 2 * l) ** 2 / (2.0 * ih)


def collision_shift(params: SystemParams, omega_c: float, omega_d: float):
    """Collision-dressed frequencies.

    Returns (Ω_c, Ω_d, 𝒜, ω̃_c, ω̃_d) using the exact Ω² = (ω+4gN)² − 4(gN)².
    """
    g = _angular(params.collision_rate)
    if g < 0:
        raise DomainError("collision_rate must be non-negative")
    Oc = math.sqrt((omega_c + 4 * g) ** 2 - 4 * g * g)
    Od = math.sqrt((omega_d + 4 * g) ** 2 - 4 * g * g)
    A = 2 * g * (omega_c - omega_d)
    return Oc, Od, A, omega_c + 2 * g, omega_d + 2 * g


def drive_amplitude(params: SystemParams, power: float | None = None) -> float:
    """Cavity drive rate η = √(P κ/(ħ ω_a)) in s⁻¹.  ``power`` overrides ``input_power``."""
    p = params.input_power if power is None else power
    if p < 0:
        raise DomainError(f"input power must be non-negative, got {p!r}")
    if params.laser_frequency <= 0:
        raise DomainError("laser_frequency must be positive")
    kappa = _angular(params.cavity_linewidth)
    return math.sqrt(p * kappa / (HBAR * _angular(params.laser_frequency)))


def winding_gap(L_p: float, l: float, I_over_hbar: float) -> tuple[float, float]:
    """Full sidemode gap 4 L_p l/(I/ħ) and BAE half-gap Ω = 2 L_p l/(I/ħ), rad/s."""
    if I_over_hbar <= 0:
        raise DomainError("I_over_hbar must be positive")
    gap = 4.0 * L_p * l / I_over_hbar
    return gap, 0.5 * gap


def derive(params: SystemParams) -> DerivedFrequencies:
    wc, wd = sidemode_frequencies(params)
    Oc, Od, A, wtc, wtd = collision_shift(params, wc, wd)
    return DerivedFrequencies(
        omega_c=wc,
        omega_d=wd,
        Omega_c=Oc,
        Omega_d=Od,
        coupling_A=A,
        omega_tilde_c=wtc,
        omega_tilde_d=wtd,
        omega_m=0.5 * (wc + wd),
        Omega=0.5 * (wc - wd),
        eta=drive_amplitude(params),
        kappa=_angular(params.cavity_linewidth),
        gamma=_angular(params.mechanical_damping),
        G=_angular(params.coupling),
        gN=_angular(params.collision_rate),
        detuning=_angular(params.detuning),
    )


def paper_defaults(**overrides) -> SystemParams:
    """Sodium ring condensate with N=10⁴, R=12 μm, P_in=12.4 fW and Δ'=0."""
    return SystemParams(**overrides)
