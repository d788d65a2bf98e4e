"""Bichromatic backaction-evading drive: steady state, Floquet response and spectrum.

The cavity is driven at ω_a ± δ.  Its field oscillates as a(t) = 2ā cos δt and
the linearised dynamics are periodic in time:

    δQ' = -κ/2 δQ + √κ Q_in
    δP' = -κ/2 δP + √κ P_in - 2√2 G ā cos(δt) (X_c + X_d)
    X_k'' + γ X_k' + ω_k² X_k = ω_k [ε_k - 2√2 G ā cos(δt) δQ],   k = c, d

with ω_{c,d} = ω_m ± Ω and P_out = √κ δP − P_in.  Writing each variable as
Σ_n Z^(n)(t) e^{inδt}, the Floquet components of P_out are driven only for
|n| ≤ 2.  Collisions are not part of this scheme: the sidemodes use the bare
ω_{c,d}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import TWO_PI, DerivedFrequencies, SystemParams, derive, drive_amplitude
from .noise import SqueezeParams, VACUUM, optical_kernel, thermal_kernel
from .response import SpectrumResult, assemble_spectrum
from .roots import continue_root, nonnegative_real_roots

__all__ = [
    "SingularCouplingError",
    "BoundViolationError",
    "BaeDrive",
    "BaeSteadyState",
    "effective_coupling",
    "bae_photon_polynomial",
    "bae_steady_state",
    "BistabilityMap",
    "bistability_map",
    "FloquetCoeffs",
    "floquet_coefficient",
    "floquet_coefficients",
    "bae_spectrum",
    "bae_measurement_time",
    "BoundReport",
    "semiclassical_bound_check",
    "probe_floquet_response",
]

# G/κ below which the linear-cavity amplitude is used for ā
_SMALL_COUPLING = 1e-3


class SingularCouplingError(ArithmeticError):
    """Ω_eff diverges because ω_m = Ω (one sidemode at zero frequency)."""


class BoundViolationError(RuntimeError):
    """The mean-field orbit leaves the analytic steady-state envelope."""


@dataclass(frozen=True)
class BaeDrive:
    """Two drive tones of power ``P_plus`` and ``P_minus`` (W) at ω_a ± δ.

    ``delta`` is in rad/s; ``None`` selects the resonant choice δ = ω_m.
    ``eps_plus``/``eps_minus`` (s⁻¹) override the amplitudes derived from power.
    """

    P_plus: float = 12.4e-15
    P_minus: float = 12.4e-15
    delta: float | None = None
    eps_plus: complex | None = None
    eps_minus: complex | None = None

    @property
    def resonant(self) -> bool:
        return self.delta is None

    def resolve(self, params: SystemParams, fr: DerivedFrequencies | None = None):
        fr = derive(params) if fr is None else fr
        ep = drive_amplitude(params, self.P_plus) if self.eps_plus is None else self.eps_plus
        em = drive_amplitude(params, self.P_minus) if self.eps_minus is None else self.eps_minus
        delta = fr.omega_m if self.delta is None else float(self.delta)
        return complex(ep), complex(em), delta


@dataclass(frozen=True)
class BaeSteadyState:
    n_plus1: float
    n_minus1: float
    a_bar: float
    Omega_eff: float  # rad/s
    monostable: bool
    branch_count: int
    delta: float  # rad/s
    eps_plus: complex
    eps_minus: complex
    residual: float = 0.0
    branches: tuple = ()  # all (n₁, n₋₁) solutions


def effective_coupling(params: SystemParams, fr: DerivedFrequencies | None = None, *, collisional: bool = False) -> float:
    """Kerr-like frequency pull per photon, Ω_eff (rad/s).

    Collisionless: 2G²ω_m/(ω_m² − Ω²).  With ``collisional=True`` the static
    response of the collision-coupled pair is used instead; it reduces to the
    collisionless value at gN = 0.
    """
    fr = derive(params) if fr is None else fr
    G2 = fr.G ** 2
    if collisional:
        Oc2, Od2, A = fr.Omega_c ** 2, fr.Omega_d ** 2, fr.coupling_A
        den = Oc2 * Od2 + A * A
        if den == 0:
            raise SingularCouplingError("collision-dressed sidemode at zero frequency")
        num = fr.omega_tilde_c * Od2 + fr.omega_tilde_d * Oc2 + A * (fr.omega_tilde_c - fr.omega_tilde_d)
        return G2 * num / den
    den = fr.omega_m ** 2 - fr.Omega ** 2
    if den == 0:
        raise SingularCouplingError("ω_m = Ω makes Ω_eff singular")
    return 2 * G2 * fr.omega_m / den


def bae_photon_polynomial(e_plus: float, e_minus: float, delta: float, kappa: float, omega_eff: float) -> np.ndarray:
    """Quintic in x = Ω_eff n/(κ/2) whose roots are the total photon numbers.

    Obtained from n₁[(δ − Ω_eff n)² + κ²/4] = |ε₊|² and
    n₋₁[(δ + Ω_eff n)² + κ²/4] = |ε₋|² with n = n₁ + n₋₁, after dividing by
    (κ/2)⁵/Ω_eff.  ``e_plus``/``e_minus`` are |ε±|².
    """
    h = kappa / 2
    d = delta / h
    u_p = e_plus * omega_eff / h ** 3
    u_m = e_minus * omega_eff / h ** 3
    p_plus = np.array([1.0, -2 * d, d * d + 1])  # (x - d)² + 1
    p_minus = np.array([1.0, 2 * d, d * d + 1])
    poly = np.polymul([1.0, 0.0], np.polymul(p_plus, p_minus))
    poly = np.polysub(poly, u_p * p_minus)
    poly = np.polysub(poly, u_m * p_plus)
    return poly


def _split(n: float, e_plus: float, e_minus: float, delta: float, kappa: float, oe: float):
    n1 = e_plus / ((delta - oe * n) ** 2 + kappa * kappa / 4)
    nm1 = e_minus / ((delta + oe * n) ** 2 + kappa * kappa / 4)
    return n1, nm1


def _refine(n: float, e_plus: float, e_minus: float, delta: float, kappa: float, oe: float) -> float:
    # Newton on f(n) = n - n₁(n) - n₋₁(n) in the physical variable
    for _ in range(20):
        h2 = kappa * kappa / 4
        dp, dm = (delta - oe * n) ** 2 + h2, (delta + oe * n) ** 2 + h2
        f = n - e_plus / dp - e_minus / dm
        fp = 1 - e_plus * 2 * oe * (delta - oe * n) / dp ** 2 + e_minus * 2 * oe * (delta + oe * n) / dm ** 2
        if fp == 0:
            break
        step = f / fp
        n -= step
        if abs(step) <= 1e-16 * max(abs(n), 1e-300):
            break
    return n


def bae_steady_state(
    params: SystemParams,
    drive: BaeDrive = BaeDrive(),
    *,
    collisional: bool = False,
    steps: int = 200,
) -> BaeSteadyState:
    """Sideband populations (n₁, n₋₁) on the branch continued from zero drive."""
    fr = derive(params)
    ep, em, delta = drive.resolve(params, fr)
    oe = effective_coupling(params, fr, collisional=collisional)
    kappa = fr.kappa
    e_p, e_m = abs(ep) ** 2, abs(em) ** 2
    if e_p == 0 and e_m == 0:
        n, branches_x = 0.0, np.array([0.0])
    elif oe == 0:
        n = e_p / (delta ** 2 + kappa ** 2 / 4) + e_m / (delta ** 2 + kappa ** 2 / 4)
        branches_x = np.array([0.0])
    else:
        x, branches_x = continue_root(lambda s: bae_photon_polynomial(s * e_p, s * e_m, delta, kappa, oe), steps=steps)
        n = _refine(x * (kappa / 2) / oe, e_p, e_m, delta, kappa, oe)
    n1, nm1 = _split(n, e_p, e_m, delta, kappa, oe)
    residual = 0.0
    for val, e, sgn in ((n1, e_p, -1), (nm1, e_m, 1)):
        if e > 0:
            lhs = val * ((delta + sgn * oe * (n1 + nm1)) ** 2 + kappa * kappa / 4)
            residual = max(residual, abs(lhs - e) / e)
    if oe != 0:
        branches = tuple(_split(xb * (kappa / 2) / oe, e_p, e_m, delta, kappa, oe) for xb in branches_x)
    else:
        branches = ((n1, nm1),)
    if fr.G / fr.kappa < _SMALL_COUPLING:
        a_bar = 0.5 * (math.sqrt(e_p) + math.sqrt(e_m)) / math.sqrt(delta ** 2 + kappa ** 2 / 4)
    else:
        a_bar = math.sqrt(0.5 * (n1 + nm1))
    count = len(branches)
    return BaeSteadyState(
        n_plus1=float(n1),
        n_minus1=float(nm1),
        a_bar=float(a_bar),
        Omega_eff=float(oe),
        monostable=count == 1,
        branch_count=count,
        delta=float(delta),
        eps_plus=ep,
        eps_minus=em,
        residual=float(residual),
        branches=branches,
    )


@dataclass(frozen=True)
class BistabilityMap:
    axis: str
    values: np.ndarray
    branch_count: np.ndarray
    n_plus1: np.ndarray
    n_minus1: np.ndarray
    converged: np.ndarray

    @property
    def monostable(self) -> np.ndarray:
        return self.branch_count == 1

    def boundaries(self) -> list[float]:
        """Axis midpoints where the branch count changes between neighbours."""
        bc = self.branch_count
        idx = np.where(bc[1:] != bc[:-1])[0]
        return [float(0.5 * (self.values[i] + self.values[i + 1])) for i in idx]


def bistability_map(params: SystemParams, values, axis: str = "power", drive: BaeDrive = BaeDrive()) -> BistabilityMap:
    """Branch count and physical populations along a sweep of power (W, both tones) or κ (Hz)."""
    vals = np.asarray(values, dtype=float)
    bc = np.zeros(vals.size, dtype=int)
    n1 = np.full(vals.size, np.nan)
    nm1 = np.full(vals.size, np.nan)
    ok = np.zeros(vals.size, dtype=bool)
    for i, v in enumerate(vals):
        if axis == "power":
            p, d = params, BaeDrive(P_plus=v, P_minus=v, delta=drive.delta)
        elif axis == "kappa":
            p, d = params.replace(cavity_linewidth=v), drive
        else:
            raise ValueError(f"unknown bistability axis {axis!r}")
        try:
            s = bae_steady_state(p, d)
        except (RuntimeError, ArithmeticError):
            continue
        bc[i], n1[i], nm1[i], ok[i] = s.branch_count, s.n_plus1, s.n_minus1, True
    return BistabilityMap(axis, vals, bc, n1, nm1, ok)


@dataclass(frozen=True)
class FloquetCoeffs:
    """Floquet coefficients of P_out evaluated on a grid ν.

    ``A2[n]`` is A^(2n)(ν) for n = ±1 and ``C1[n]``, ``D1[n]`` are C^(n)(ν),
    D^(n)(ν).  Use :func:`floquet_coefficient` for arbitrary (kind, n).
    """

    omega: np.ndarray
    A0: np.ndarray
    B0: np.ndarray
    A2: dict
    C1: dict
    D1: dict


def _bae_chis(fr: DerivedFrequencies):
    k, g = fr.kappa, fr.gamma
    wc, wd = fr.omega_c, fr.omega_d
    ca = lambda x: 1.0 / (k / 2 - 1j * x)  # noqa: E731
    mech_c = lambda x: wc / (wc * wc - 1j * x * g - x * x)  # noqa: E731
    mech_d = lambda x: wd / (wd * wd - 1j * x * g - x * x)  # noqa: E731
    return ca, mech_c, mech_d


def floquet_coefficient(kind: str, n: int, nu, params: SystemParams, bss: BaeSteadyState, fr=None):
    """Coefficient of input ``kind`` ∈ {Q, P, c, d} in the n-th Floquet component of P_out."""
    fr = derive(params) if fr is None else fr
    nu = np.asarray(nu, dtype=float)
    ca, mc, md = _bae_chis(fr)
    k, dl = fr.kappa, bss.delta
    g = math.sqrt(2.0) * fr.G * bss.a_bar
    zero = np.zeros(nu.shape, dtype=complex)
    mech = lambda x: mc(x) + md(x)  # noqa: E731
    if kind == "Q":
        if n == 0:
            return k * g * g * ca(nu) ** 2 * (mech(nu - dl) + mech(nu + dl))
        if n in (2, -2):
            m = n // 2
            return k * g * g * ca(nu - 2 * m * dl) * ca(nu) * mech(nu - m * dl)
        return zero
    if kind == "P":
        return k * ca(nu) - 1.0 if n == 0 else zero
    if kind in ("c", "d"):
        if n in (1, -1):
            m = mc if kind == "c" else md
            return -math.sqrt(k) * g * ca(nu - n * dl) * m(nu)
        return zero
    raise ValueError(f"unknown input {kind!r}")


def floquet_coefficients(omega, params: SystemParams, bss: BaeSteadyState) -> FloquetCoeffs:
    fr = derive(params)
    w = np.asarray(omega, dtype=float)
    f = lambda kind, n: floquet_coefficient(kind, n, w, params, bss, fr)  # noqa: E731
    return FloquetCoeffs(
        omega=w,
        A0=f("Q", 0),
        B0=f("P", 0),
        A2={1: f("Q", 2), -1: f("Q", -2)},
        C1={1: f("c", 1), -1: f("c", -1)},
        D1={1: f("d", 1), -1: f("d", -1)},
    )


def bae_spectrum(
    omega,
    params: SystemParams,
    bss: BaeSteadyState,
    sq: SqueezeParams = VACUUM,
    *,
    temperature: float | None = None,
    assembly: str = "stationary",
) -> SpectrumResult:
    """Time-averaged spectrum of P_out (zeroth Floquet component of the correlation).

    Each input entering component n at ν = ω + nδ is paired with its partner
    in component −n at −ω − nδ, with kernels evaluated at ω + nδ.
    ``assembly="printed"`` pairs the n = ±2 coefficients with swapped indices,
    A^(∓2)(ω ± 2δ); it is kept only for comparison.
    """
    fr = derive(params)
    w = np.asarray(omega, dtype=float)
    dl = bss.delta
    f = lambda kind, n, x: floquet_coefficient(kind, n, x, params, bss, fr)  # noqa: E731
    zero = np.zeros(w.shape, dtype=complex)
    optical = [(f("Q", 0, w), f("P", 0, w), f("Q", 0, -w), f("P", 0, -w), True)]
    for m in (1, -1):
        x = w + 2 * m * dl
        if assembly == "stationary":
            a, a_m = f("Q", 2 * m, x), f("Q", -2 * m, -x)
        elif assembly == "printed":
            a, a_m = f("Q", -2 * m, x), f("Q", 2 * m, -x)
        else:
            raise ValueError(f"unknown assembly {assembly!r}")
        optical.append((a, zero, a_m, zero, False))
    T = params.bec_temperature if temperature is None else temperature
    thermal = []
    for n in (1, -1):
        x = w + n * dl
        thermal.append((f("c", n, x), f("c", -n, -x), thermal_kernel(x, fr.omega_c, T, fr.gamma)))
        thermal.append((f("d", n, x), f("d", -n, -x), thermal_kernel(x, fr.omega_d, T, fr.gamma)))
    parts = assemble_spectrum(optical, thermal, optical_kernel(sq))
    return SpectrumResult(w, *parts, phi=np.pi / 2)


def bae_measurement_time(omega, params: SystemParams, bss: BaeSteadyState):
    """t_meas(ω) = |(−iω + κ/2)/(√(2κ) G ā)|², in seconds."""
    fr = derive(params)
    w = np.asarray(omega, dtype=float)
    rate = 2 * fr.kappa * (fr.G * bss.a_bar) ** 2
    return (w * w + fr.kappa ** 2 / 4) / rate


@dataclass(frozen=True)
class BoundReport:
    max_amplitude: float
    bound: float
    ratio: float
    satisfied: bool
    horizon: float
    nfev: int


def semiclassical_bound_check(
    params: SystemParams,
    drive: BaeDrive = BaeDrive(),
    horizon: float | None = None,
    *,
    rtol: float = 1e-9,
    tol: float = 0.05,
    raise_on_violation: bool = False,
) -> BoundReport:
    """Integrate the mean-field equations from vacuum and compare max|α| with |ā₁| + |ā₋₁|.

    In the cavity frame, α' = −κ/2 α − iG(X_c + X_d)α + ε₊e^{iδt} + ε₋e^{−iδt}
    and X_k' = ω_k P_k, P_k' = −ω_k X_k − γP_k − G|α|².
    """
    fr = derive(params)
    bss = bae_steady_state(params, drive)
    ep, em, dl = bss.eps_plus, bss.eps_minus, bss.delta
    k, g, G = fr.kappa, fr.gamma, fr.G
    wc, wd = fr.omega_c, fr.omega_d
    if horizon is None:
        horizon = 50 * TWO_PI / k + 20 * TWO_PI / dl
    bound = math.sqrt(bss.n_plus1) + math.sqrt(bss.n_minus1)
    if bound == 0.0:
        return BoundReport(0.0, 0.0, 0.0, True, horizon, 0)
    epr, epi, emr, emi = ep.real, ep.imag, em.real, em.imag
    cos, sin = math.cos, math.sin
    h = k / 2

    def rhs(t, y):
        ar, ai, xc, pc, xd, pd = y
        c, s = cos(dl * t), sin(dl * t)
        x = G * (xc + xd)
        n = ar * ar + ai * ai
        # ε₊e^{iδt} + ε₋e^{−iδt}
        fr_ = epr * c - epi * s + emr * c + emi * s
        fi_ = epr * s + epi * c - emr * s + emi * c
        return [
            -h * ar + x * ai + fr_,
            -h * ai - x * ar + fi_,
            wc * pc,
            -wc * xc - g * pc - G * n,
            wd * pd,
            -wd * xd - g * pd - G * n,
        ]

    sol = solve_ivp(rhs, (0.0, horizon), [0.0] * 6, method="DOP853", rtol=rtol, atol=1e-12 * bound, first_step=0.01 / k)
    if not sol.success:
        raise RuntimeError(f"mean-field integration failed: {sol.message}")
    amp = float(np.max(np.hypot(sol.y[0], sol.y[1])))
    ratio = amp / bound
    ok = ratio <= 1 + tol
    if raise_on_violation and not ok:
        raise BoundViolationError(f"max|α| = {amp:.6g} exceeds {(1 + tol):.2f}·{bound:.6g}")
    return BoundReport(amp, bound, ratio, ok, float(horizon), int(sol.nfev))


def probe_floquet_response(
    kind: str,
    omega: float,
    orders,
    params: SystemParams,
    bss: BaeSteadyState,
    *,
    cycles: int,
    settle: float,
    rtol: float = 1e-10,
) -> dict:
    """Floquet coefficients measured by integrating the linearised equations in time.

    The input ``kind`` is driven by e^{−iωt}; after ``settle`` seconds P_out is
    demodulated at ω − nδ for each n in ``orders`` over ``cycles`` periods of
    the common base frequency.  ω/δ must be rational with a small denominator:
    the base period is the smallest window containing whole periods of every
    demodulation frequency, found from a continued-fraction approximation.
    """
    from fractions import Fraction

    fr = derive(params)
    k, g = fr.kappa, fr.gamma
    wc, wd = fr.omega_c, fr.omega_d
    dl = bss.delta
    gp = math.sqrt(2.0) * fr.G * bss.a_bar
    rk = math.sqrt(k)
    ratio = Fraction(omega / dl).limit_denominator(1000)
    if abs(float(ratio) * dl - omega) > 1e-12 * max(abs(omega), dl):
        raise ValueError("probe frequency must be a rational multiple of δ with denominator ≤ 1000")
    base = dl / ratio.denominator
    window = cycles * TWO_PI / base
    orders = list(orders)
    src = {"Q": 0, "P": 1, "c": 2, "d": 3}[kind]

    def rhs(t, y):
        dq, dp, xc, vc, xd, vd = y[:6]
        drive = np.exp(-1j * omega * t)
        u = [0j, 0j, 0j, 0j]
        u[src] = drive
        c2 = 2 * gp * math.cos(dl * t)
        out = rk * dp - u[1]
        dy = [
            -k / 2 * dq + rk * u[0],
            -k / 2 * dp + rk * u[1] - c2 * (xc + xd),
            vc,
            -g * vc - wc * wc * xc + wc * (u[2] - c2 * dq),
            vd,
            -g * vd - wd * wd * xd + wd * (u[3] - c2 * dq),
        ]
        if t >= settle:
            dy += [out * np.exp(1j * (omega - n * dl) * t) for n in orders]
        else:
            dy += [0j] * len(orders)
        return dy

    y0 = np.zeros(6 + len(orders), dtype=complex)
    first = solve_ivp(rhs, (0.0, settle), y0, method="DOP853", rtol=rtol, atol=1e-14)
    sol = solve_ivp(rhs, (settle, settle + window), first.y[:, -1], method="DOP853", rtol=rtol, atol=1e-14)
    if not (first.success and sol.success):
        raise RuntimeError("time-domain probe integration failed")
    acc = sol.y[6:, -1] / window
    return {n: complex(v) for n, v in zip(orders, acc)}
