"""Monochromatic (squeezed) drive: steady state, linear response and homodyne spectra.

Fluctuations are ordered δu = (δQ, δP, δX_c, δX_d) and inputs
(Q_in, P_in, ε_c, ε_d).  Fourier convention is f(t) = ∫ f(ω) e^{-iωt} dω/2π.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TWO_PI, DerivedFrequencies, SystemParams, derive
from .noise import NoiseKernel, SqueezeParams, VACUUM, optical_kernel, thermal_kernel
from .roots import continue_root, nonnegative_real_roots

__all__ = [
    "BistableRegimeError",
    "SingularResponseError",
    "SteadyState",
    "Susceptibilities",
    "QuadCoeffs",
    "SpectrumResult",
    "static_mechanical_response",
    "solve_steady_state",
    "susceptibilities",
    "response_matrix",
    "output_coefficients",
    "output_coefficients_matrix",
    "assemble_spectrum",
    "spectral_density",
    "quadrature_spectra",
    "homodyne_angle_from_spectra",
    "optimal_homodyne_angle",
    "default_grid",
    "local_peaks",
]


class BistableRegimeError(RuntimeError):
    """More than one steady state exists where a unique one was demanded."""


class SingularResponseError(ArithmeticError):
    def __init__(self, message: str, omega=None):
        super().__init__(message)
        self.omega = omega


@dataclass(frozen=True)
class SteadyState:
    a_s: float
    X_c_s: float
    X_d_s: float
    branch_count: int
    monostable: bool
    photon_number: float
    detuning_bare: float  # rad/s
    detuning_effective: float  # rad/s
    roots: tuple = ()
    residual: float = 0.0


def static_mechanical_response(fr: DerivedFrequencies) -> tuple[float, float]:
    """Static displacements per unit G·n: X_c = -G n s_c, X_d = -G n s_d."""
    Oc2, Od2, A = fr.Omega_c ** 2, fr.Omega_d ** 2, fr.coupling_A
    det = Oc2 * Od2 + A * A
    s_c = (Od2 * fr.omega_tilde_c - A * fr.omega_tilde_d) / det
    s_d = (A * fr.omega_tilde_c + Oc2 * fr.omega_tilde_d) / det
    return s_c, s_d


def _cubic(K: float, delta: float, kappa: float, eta2: float) -> np.ndarray:
    # n [ (Δ + K n)² + κ²/4 ] − η² = 0
    return np.array([K * K, 2 * delta * K, delta * delta + kappa * kappa / 4, -eta2])


def solve_steady_state(
    params: SystemParams,
    *,
    require_monostable: bool = False,
    fr: DerivedFrequencies | None = None,
) -> SteadyState:
    """Self-consistent mean field of the monochromatically driven cavity.

    The photon number n = |a_s|² solves a cubic.  All non-negative real roots
    are enumerated; the physical one is reached by continuation in η² from 0.
    """
    fr = derive(params) if fr is None else fr
    s_c, s_d = static_mechanical_response(fr)
    K = fr.G ** 2 * (s_c + s_d)  # Δ' = Δ + K n
    eta2 = fr.eta ** 2
    kappa = fr.kappa
    if params.detuning_reference == "effective":
        d_eff = fr.detuning
        n_target = eta2 / (d_eff * d_eff + kappa * kappa / 4)
        d_bare = d_eff - K * n_target
    else:
        d_bare = fr.detuning
        n_target = None
    if eta2 == 0.0:
        n, roots = 0.0, np.array([0.0])
    else:
        n, roots = continue_root(lambda s: _cubic(K, d_bare, kappa, s * eta2))
        if n_target is not None:
            # the requested operating point may lie on a branch not reached from zero drive;
            # it is still the one linearised about, and branch_count reports the ambiguity
            n = n_target
    d_eff = fr.detuning if n_target is not None else d_bare + K * n
    residual = abs(n * (d_eff * d_eff + kappa * kappa / 4) - eta2) / max(eta2, 1e-300)
    count = int(roots.size)
    if require_monostable and count > 1:
        raise BistableRegimeError(f"{count} steady states at P_in={params.input_power:g} W")
    return SteadyState(
        a_s=float(np.sqrt(n)),
        X_c_s=-fr.G * n * s_c,
        X_d_s=-fr.G * n * s_d,
        branch_count=count,
        monostable=count == 1,
        photon_number=float(n),
        detuning_bare=float(d_bare),
        detuning_effective=float(d_eff),
        roots=tuple(float(r) for r in roots),
        residual=float(residual),
    )


@dataclass(frozen=True)
class Susceptibilities:
    chi_a: np.ndarray
    chi_c: np.ndarray
    chi_d: np.ndarray


def susceptibilities(omega, fr: DerivedFrequencies) -> Susceptibilities:
    w = np.asarray(omega, dtype=float)
    return Susceptibilities(
        chi_a=1.0 / (fr.kappa / 2 - 1j * w),
        chi_c=1.0 / (fr.Omega_c ** 2 - 1j * w * fr.gamma - w * w),
        chi_d=1.0 / (fr.Omega_d ** 2 - 1j * w * fr.gamma - w * w),
    )


def response_matrix(omega, params: SystemParams, ss: SteadyState, fr=None) -> np.ndarray:
    """ℱ(ω) with ℱ δu = diag(√κ, √κ, ω_c, ω_d)·inputs; shape (..., 4, 4)."""
    fr = derive(params) if fr is None else fr
    w = np.asarray(omega, dtype=float)
    chi = susceptibilities(w, fr)
    s = np.sqrt(2.0) * fr.G * ss.a_s
    dp = ss.detuning_effective
    F = np.zeros(w.shape + (4, 4), dtype=complex)
    F[..., 0, 0] = 1 / chi.chi_a
    F[..., 0, 1] = dp
    F[..., 1, 0] = -dp
    F[..., 1, 1] = 1 / chi.chi_a
    F[..., 1, 2] = s
    F[..., 1, 3] = s
    F[..., 2, 0] = s * fr.omega_tilde_c
    F[..., 2, 2] = 1 / chi.chi_c
    F[..., 2, 3] = fr.coupling_A
    F[..., 3, 0] = s * fr.omega_tilde_d
    F[..., 3, 2] = -fr.coupling_A
    F[..., 3, 3] = 1 / chi.chi_d
    # relative conditioning: det against the product of row norms
    det = np.linalg.det(F)
    scale = np.prod(np.linalg.norm(F, axis=-1), axis=-1)
    bad = np.abs(det) < 1e-30 * scale
    if np.any(bad):
        raise SingularResponseError("response matrix is singular", omega=w[bad] if w.ndim else float(w))
    return F


@dataclass(frozen=True)
class QuadCoeffs:
    """Output-quadrature coefficients: K_out = A_K Q_in + B_K P_in + C_K ε_c + D_K ε_d."""

    A_Q: np.ndarray
    B_Q: np.ndarray
    C_Q: np.ndarray
    D_Q: np.ndarray
    A_P: np.ndarray
    B_P: np.ndarray
    C_P: np.ndarray
    D_P: np.ndarray

    def row(self, phi: float) -> tuple:
        """Coefficients of the rotated quadrature cos φ·Q_out + sin φ·P_out."""
        c, s = np.cos(phi), np.sin(phi)
        return (
            c * self.A_Q + s * self.A_P,
            c * self.B_Q + s * self.B_P,
            c * self.C_Q + s * self.C_P,
            c * self.D_Q + s * self.D_P,
        )

    def as_array(self) -> np.ndarray:
        return np.stack(
            [
                np.stack([self.A_Q, self.B_Q, self.C_Q, self.D_Q], axis=-1),
                np.stack([self.A_P, self.B_P, self.C_P, self.D_P], axis=-1),
            ],
            axis=-2,
        )


def _apply_io(primed: dict, kappa: float, io_scaling: str) -> QuadCoeffs:
    rk = np.sqrt(kappa)
    out = {k: rk * v for k, v in primed.items()}
    if io_scaling == "standard":
        out["A_Q"] = out["A_Q"] - 1.0
        out["B_P"] = out["B_P"] - 1.0
    elif io_scaling == "printed":
        out["A_Q"] = (rk - 1.0) * primed["A_Q"]
        out["B_P"] = (rk - 1.0) * primed["B_P"]
    else:
        raise ValueError(f"unknown io_scaling {io_scaling!r}")
    return QuadCoeffs(**out)


def output_coefficients(
    omega, params: SystemParams, ss: SteadyState, *, io_scaling: str = "standard", fr=None
) -> QuadCoeffs:
    """Closed-form output coefficients.

    The primed coefficients are the intracavity responses (rows of ℱ⁻¹·D).
    ``io_scaling="standard"`` applies K_out = √κ δK − K_in, giving
    A_Q = √κ A'_Q − 1 and B_P = √κ B'_P − 1.  ``"printed"`` instead uses
    (√κ − 1)·A'_Q and (√κ − 1)·B'_P and is kept only for comparison.
    """
    fr = derive(params) if fr is None else fr
    w = np.asarray(omega, dtype=float)
    chi = susceptibilities(w, fr)
    ca, cc, cd = chi.chi_a, chi.chi_c, chi.chi_d
    A, dp, a = fr.coupling_A, ss.detuning_effective, ss.a_s
    G, rk = fr.G, np.sqrt(fr.kappa)
    wtc, wtd = fr.omega_tilde_c, fr.omega_tilde_d
    g2 = 2 * G * G * a * a
    r2 = np.sqrt(2.0) * G * a
    mech = cc * (g2 * wtc * (A * cd + 1) + A * A * dp * cd) - g2 * cd * wtd * (A * cc - 1) + dp
    coll = A * A * cc * cd + 1
    den = dp * ca ** 2 * mech + coll
    if np.any(den == 0):
        raise SingularResponseError("determinant 𝒟(ω) vanishes", omega=w)
    primed = {
        "A_Q": ca * rk * coll / den,
        "B_Q": -dp * ca ** 2 * rk * coll / den,
        "C_Q": r2 * dp * ca ** 2 * cc * fr.omega_c * (A * cd + 1) / den,
        "D_Q": r2 * dp * ca ** 2 * cd * fr.omega_d * (1 - A * cc) / den,
        "A_P": rk * ca ** 2 * mech / den,
        "B_P": ca * rk * coll / den,
        "C_P": -r2 * ca * cc * fr.omega_c * (A * cd + 1) / den,
        "D_P": r2 * ca * cd * fr.omega_d * (A * cc - 1) / den,
    }
    return _apply_io(primed, fr.kappa, io_scaling)


def output_coefficients_matrix(
    omega, params: SystemParams, ss: SteadyState, *, io_scaling: str = "standard", fr=None
) -> QuadCoeffs:
    """Same coefficients obtained by numerically solving ℱ δu = D·inputs."""
    fr = derive(params) if fr is None else fr
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    F = response_matrix(w, params, ss, fr)
    rk = np.sqrt(fr.kappa)
    D = np.diag([rk, rk, fr.omega_c, fr.omega_d]).astype(complex)
    M = np.linalg.solve(F, np.broadcast_to(D, F.shape))
    names = ("A", "B", "C", "D")
    primed = {f"{n}_Q": M[:, 0, j] for j, n in enumerate(names)}
    primed.update({f"{n}_P": M[:, 1, j] for j, n in enumerate(names)})
    shape = np.shape(omega)
    primed = {k: v.reshape(shape) for k, v in primed.items()}
    return _apply_io(primed, fr.kappa, io_scaling)


@dataclass(frozen=True)
class SpectrumResult:
    """Sampled spectral density with its channel decomposition.

    ``total = sn + rp + th + add``.  ``sn`` is the vacuum P_in term, ``rp`` the
    rest of the vacuum optical contribution (radiation pressure and its
    correlation with shot noise), ``th`` the thermal sidemode noise and
    ``add`` what squeezing adds or removes relative to vacuum input.
    """

    omega: np.ndarray
    total: np.ndarray
    sn: np.ndarray
    rp: np.ndarray
    th: np.ndarray
    add: np.ndarray
    phi: float = np.pi / 2

    @property
    def omega_hz(self) -> np.ndarray:
        return self.omega / TWO_PI

    def channels(self) -> dict:
        return {"S_total": self.total, "S_sn": self.sn, "S_rp": self.rp, "S_th": self.th, "S_add": self.add}


def _optical(a, b, a_m, b_m, k: NoiseKernel):
    return 0.5 * (a * a_m * k.chi_QQ + b * b_m * k.chi_PP + 1j * a * b_m * k.chi_QP + 1j * b * a_m * k.chi_PQ)


_VACUUM_KERNEL = optical_kernel(VACUUM)


def assemble_spectrum(pairs_optical, pairs_thermal, kernel: NoiseKernel):
    """Combine coefficient pairs into (total, sn, rp, th, add).

    ``pairs_optical`` is a list of (a(ν), b(ν), a(-ν), b(-ν), is_shot) tuples,
    each weighted by the white optical kernel; ``is_shot`` marks the pair whose
    vacuum P_in term defines the shot-noise channel.  ``pairs_thermal`` is a
    list of (c(ν), c(-ν), K(ν)) with thermal kernels already evaluated.
    """
    opt = 0.0
    vac = 0.0
    sn = 0.0
    for a, b, a_m, b_m, is_shot in pairs_optical:
        opt = opt + _optical(a, b, a_m, b_m, kernel)
        vac = vac + _optical(a, b, a_m, b_m, _VACUUM_KERNEL)
        if is_shot:
            sn = sn + 0.5 * b * b_m
    th = 0.0
    for c, c_m, K in pairs_thermal:
        th = th + c * c_m * K / TWO_PI
    total = opt + th
    parts = [total, sn, vac - sn, th, opt - vac]
    return [np.real(np.asarray(p)) for p in parts]


def _thermal_pair_kernels(nu, fr: DerivedFrequencies, T: float):
    return (
        thermal_kernel(nu, fr.omega_c, T, fr.gamma),
        thermal_kernel(nu, fr.omega_d, T, fr.gamma),
    )


def spectral_density(
    omega,
    phi: float,
    params: SystemParams,
    sq: SqueezeParams = VACUUM,
    *,
    ss: SteadyState | None = None,
    temperature: float | None = None,
    io_scaling: str = "standard",
    method: str = "closed",
) -> SpectrumResult:
    """Homodyne spectral density S^φ(ω) of the rotated output quadrature.

    Coefficients are evaluated at ω and at −ω and multiplied in (ω, −ω) pairs.
    ``temperature`` overrides the sidemode bath temperature.
    """
    fr = derive(params)
    ss = solve_steady_state(params, fr=fr) if ss is None else ss
    w = np.asarray(omega, dtype=float)
    coeff_fn = output_coefficients if method == "closed" else output_coefficients_matrix
    both = coeff_fn(np.concatenate([np.atleast_1d(w), -np.atleast_1d(w)]), params, ss, io_scaling=io_scaling, fr=fr)
    n = np.atleast_1d(w).size
    row = both.row(phi)
    plus = [x[:n] for x in row]
    minus = [x[n:] for x in row]
    T = params.bec_temperature if temperature is None else temperature
    Kc, Kd = _thermal_pair_kernels(np.atleast_1d(w), fr, T)
    parts = assemble_spectrum(
        [(plus[0], plus[1], minus[0], minus[1], True)],
        [(plus[2], minus[2], Kc), (plus[3], minus[3], Kd)],
        optical_kernel(sq),
    )
    parts = [p.reshape(w.shape) for p in parts]
    return SpectrumResult(w, *parts, phi=phi)


def quadrature_spectra(
    omega, params: SystemParams, sq: SqueezeParams = VACUUM, *, ss=None, temperature=None
) -> dict:
    """Cross spectra S_XY for X, Y ∈ {Q, P} of the output quadratures."""
    fr = derive(params)
    ss = solve_steady_state(params, fr=fr) if ss is None else ss
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    n = w.size
    both = output_coefficients(np.concatenate([w, -w]), params, ss, fr=fr)
    rows = {
        "Q": (both.A_Q, both.B_Q, both.C_Q, both.D_Q),
        "P": (both.A_P, both.B_P, both.C_P, both.D_P),
    }
    T = params.bec_temperature if temperature is None else temperature
    Kc, Kd = _thermal_pair_kernels(w, fr, T)
    k = optical_kernel(sq)
    out = {}
    for x in "QP":
        for y in "QP":
            ax, bx, cx, dx = (v[:n] for v in rows[x])
            ay, by, cy, dy = (v[n:] for v in rows[y])
            val = _optical(ax, bx, ay, by, k) + (cx * cy * Kc + dx * dy * Kd) / TWO_PI
            out[f"S_{x}{y}"] = val.reshape(np.shape(omega))
    return out


def homodyne_angle_from_spectra(S_QQ, S_PP, S_QP, S_PQ, *, rtol: float = 1e-14):
    """Angle in [0, π) maximising cos²φ S_QQ + sin²φ S_PP + sinφ cosφ (S_QP + S_PQ).

    ½·atan2(S_QP + S_PQ, S_QQ − S_PP) is the branch with negative curvature.
    Returns NaN where the spectrum is independent of φ.
    """
    x = np.real(np.asarray(S_QQ) - np.asarray(S_PP))
    y = np.real(np.asarray(S_QP) + np.asarray(S_PQ))
    scale = np.abs(np.real(S_QQ)) + np.abs(np.real(S_PP))
    phi = np.mod(0.5 * np.arctan2(y, x), np.pi)
    flat = np.hypot(x, y) <= rtol * scale
    return np.where(flat, np.nan, phi)


def optimal_homodyne_angle(omega, params: SystemParams, sq: SqueezeParams = VACUUM, **kw):
    s = quadrature_spectra(omega, params, sq, **kw)
    return homodyne_angle_from_spectra(s["S_QQ"], s["S_PP"], s["S_QP"], s["S_PQ"])


def default_grid(fr: DerivedFrequencies, points: int = 4000, refine: int = 16, halfwidth_gammas: float = 5.0):
    """Linear grid over [0.5 Ω_d, 1.2 Ω_c] refined ``refine``-fold within ±5γ of each sidemode."""
    lo, hi = 0.5 * min(fr.Omega_d, fr.Omega_c), 1.2 * max(fr.Omega_c, fr.Omega_d)
    base = np.linspace(lo, hi, points)
    step = (hi - lo) / (points - 1)
    extra = []
    hw = halfwidth_gammas * max(fr.gamma, step)
    for peak in (fr.Omega_d, fr.Omega_c):
        m = int(np.ceil(2 * hw / step * refine)) + 1
        extra.append(np.linspace(peak - hw, peak + hw, m))
    return np.union1d(base, np.concatenate(extra))


def local_peaks(omega, values, count: int = 2) -> np.ndarray:
    """Abscissae of the ``count`` highest strict local maxima, in increasing order."""
    v = np.asarray(values)
    idx = np.where((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:]))[0] + 1
    top = idx[np.argsort(v[idx])[::-1][:count]]
    return np.sort(np.asarray(omega)[top])
