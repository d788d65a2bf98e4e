"""Figures of merit: sensitivity ζ(ω), squeezing enhancement and power budgets.

ζ(ω) = |S(ω)/∂_Λ S(ω)|·√t_meas with Λ = L_p ħ.  Values are reported in units
of ħ·√s, i.e. the derivative is taken with respect to the winding number.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .bae import BaeDrive, bae_measurement_time, bae_spectrum, bae_steady_state
from .core import TWO_PI, SystemParams, derive
from .noise import SqueezeParams, VACUUM
from .response import solve_steady_state, spectral_density

__all__ = [
    "SCHEMES",
    "SensitivityCurve",
    "NoiseBudgetCurve",
    "ComparisonReport",
    "SpectrumModel",
    "sensitivity_curve",
    "enhancement_factor",
    "to_db",
    "noise_budget_vs_power",
    "comparison_suite",
    "default_sensitivity_grid",
]

SCHEMES = ("mono-squeezed", "bae")
FD_STEP = 0.01


def to_db(ratio):
    return 10.0 * np.log10(ratio)


class SpectrumModel:
    """Spectrum and measurement time of one scheme at fixed parameters.

    Steady states are solved once per winding number and cached.  For the BAE
    scheme the tone offset δ stays at its nominal value when L_p is varied.
    """

    def __init__(
        self,
        scheme: str,
        params: SystemParams,
        sq: SqueezeParams = VACUUM,
        *,
        drive: BaeDrive | None = None,
        phi: float = np.pi / 2,
        temperature: float | None = None,
        assembly: str = "stationary",
        scale: float = 1.0,
    ):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        self.scheme, self.params, self.sq, self.phi = scheme, params, sq, phi
        self.temperature, self.assembly, self.scale = temperature, assembly, scale
        self.fr = derive(params)
        if scheme == "bae":
            drive = BaeDrive() if drive is None else drive
            if drive.delta is None:
                drive = replace(drive, delta=self.fr.omega_m)
        self.drive = drive
        self._states: dict = {}

    def state(self, L_p: float):
        if L_p not in self._states:
            p = self.params.replace(winding_number=L_p)
            if self.scheme == "bae":
                self._states[L_p] = bae_steady_state(p, self.drive)
            else:
                self._states[L_p] = solve_steady_state(p)
        return self._states[L_p]

    def spectrum(self, omega, L_p: float | None = None):
        L_p = self.params.winding_number if L_p is None else L_p
        p = self.params.replace(winding_number=L_p)
        st = self.state(L_p)
        if self.scheme == "bae":
            res = bae_spectrum(omega, p, st, self.sq, temperature=self.temperature, assembly=self.assembly)
        else:
            res = spectral_density(omega, self.phi, p, self.sq, ss=st, temperature=self.temperature)
        if self.scale != 1.0:
            res = replace(res, **{k: self.scale * getattr(res, k) for k in ("total", "sn", "rp", "th", "add")})
        return res

    def measurement_time(self, omega):
        w = np.asarray(omega, dtype=float)
        st = self.state(self.params.winding_number)
        if self.scheme == "bae":
            return bae_measurement_time(w, self.params, st)
        fr = self.fr
        if st.a_s == 0 or fr.G == 0:
            return np.full(w.shape, np.inf)
        return np.full(w.shape, fr.kappa / (8 * st.a_s ** 2 * fr.G ** 2))

    def zeta(self, omega, h: float = FD_STEP):
        w = np.asarray(omega, dtype=float)
        L = self.params.winding_number
        s0 = self.spectrum(w, L).total
        ds = (self.spectrum(w, L + h).total - self.spectrum(w, L - h).total) / (2 * h)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.abs(s0 / ds) * np.sqrt(self.measurement_time(w))
        return np.where(np.isfinite(z) & (ds != 0), z, np.inf)


@dataclass(frozen=True)
class SensitivityCurve:
    scheme: str
    omega: np.ndarray
    zeta: np.ndarray
    omega_opt: float
    zeta_opt: float
    minima: tuple = ()  # (omega, zeta) of refined local minima, deepest first


def default_sensitivity_grid(scheme: str, params: SystemParams, points: int = 4001) -> np.ndarray:
    fr = derive(params)
    if scheme == "bae":
        return np.linspace(0.5 * fr.Omega, 1.5 * fr.Omega, 2 * points - 1)
    hw = max(25 * fr.gamma, TWO_PI * 2.0)
    return np.concatenate([np.linspace(pk - hw, pk + hw, points) for pk in sorted((fr.Omega_d, fr.Omega_c))])


def _local_minima(z: np.ndarray) -> np.ndarray:
    finite = np.isfinite(z)
    idx = np.where(finite[1:-1] & (z[1:-1] < z[:-2]) & (z[1:-1] <= z[2:]))[0] + 1
    return idx[np.argsort(z[idx])]


def sensitivity_curve(
    scheme: str,
    params: SystemParams,
    sq: SqueezeParams = VACUUM,
    omega=None,
    *,
    h: float = FD_STEP,
    refine: bool = True,
    n_minima: int = 2,
    model: SpectrumModel | None = None,
    **model_kw,
) -> SensitivityCurve:
    """ζ on a grid, with the optimum refined by golden-section search.

    ``n_minima`` local minima are refined and reported (two for the BAE
    scheme's flanking optima); ``omega_opt`` is the deepest.
    """
    m = SpectrumModel(scheme, params, sq, **model_kw) if model is None else model
    w = default_sensitivity_grid(scheme, params) if omega is None else np.asarray(omega, dtype=float)
    z = m.zeta(w, h)
    if not np.any(np.isfinite(z)):
        raise ArithmeticError("ζ is infinite on the whole grid")
    order = _local_minima(z)
    if order.size == 0:
        order = np.array([int(np.argmin(z))])
    minima = []
    for i in order[:n_minima]:
        wopt, zopt = float(w[i]), float(z[i])
        if refine and 0 < i < w.size - 1:
            f = lambda x: float(m.zeta(np.array([x]), h)[0])  # noqa: E731
            try:
                r = minimize_scalar(f, bracket=(w[i - 1], w[i], w[i + 1]), method="golden", tol=1e-6)
                if r.fun <= zopt:
                    wopt, zopt = float(r.x), float(r.fun)
            except ValueError:
                pass
        minima.append((wopt, zopt))
    minima.sort(key=lambda t: t[1])
    return SensitivityCurve(scheme, w, z, minima[0][0], minima[0][1], tuple(minima))


def enhancement_factor(scheme: str, params: SystemParams, sq: SqueezeParams, omega=None, **kw) -> float:
    """ζ_opt(r=0)/ζ_opt(r, θ) on identical grids; > 1 means squeezing helps."""
    ref = replace(VACUUM, convention=sq.convention)
    z0 = sensitivity_curve(scheme, params, ref, omega, **kw).zeta_opt
    z1 = sensitivity_curve(scheme, params, sq, omega, **kw).zeta_opt
    return z0 / z1


@dataclass(frozen=True)
class NoiseBudgetCurve:
    """Noise channels at each power's ω_opt, referred as S·t_meas (seconds).

    ``S_min`` is the lowest unsqueezed monochromatic total over the power grid
    at the condensate temperature; ``S_SQL`` the same at zero temperature.
    """

    scheme: str
    powers: np.ndarray
    omega_opt: np.ndarray
    S_total: np.ndarray
    S_sn: np.ndarray
    S_rp: np.ndarray
    S_th: np.ndarray
    S_add: np.ndarray
    S_min: float
    S_SQL: float
    status: tuple = field(default_factory=tuple)


def _budget_point(scheme, params, sq, P, drive, temperature, omega, assembly):
    if scheme == "bae":
        d = BaeDrive() if drive is None else drive
        d = replace(d, P_plus=P, P_minus=P)
        m = SpectrumModel(scheme, params, sq, drive=d, temperature=temperature, assembly=assembly)
        if not m.state(params.winding_number).monostable:
            return None, "bistable-skipped"
    else:
        p = params.replace(input_power=P)
        m = SpectrumModel(scheme, p, sq, temperature=temperature)
        if not m.state(p.winding_number).monostable:
            return None, "bistable-skipped"
    c = sensitivity_curve(scheme, m.params, sq, omega, model=m, n_minima=1)
    w = np.array([c.omega_opt])
    s = m.spectrum(w)
    t = m.measurement_time(w)[0]
    vals = [float(x[0] * t) for x in (s.total, s.sn, s.rp, s.th, s.add)]
    return (c.omega_opt, *vals), "ok"


def _budget_rows(scheme, params, sq, powers, drive, temperature, omega, assembly):
    rows, status = [], []
    for P in powers:
        try:
            r, st = _budget_point(scheme, params, sq, float(P), drive, temperature, omega, assembly)
        except (ArithmeticError, RuntimeError):
            r, st = None, "failed"
        rows.append((np.nan,) * 6 if r is None else r)
        status.append(st)
    return np.array(rows, dtype=float), tuple(status)


def _nanmin(x) -> float:
    x = x[np.isfinite(x)]
    return float(x.min()) if x.size else float("nan")


def noise_budget_vs_power(
    scheme: str,
    params: SystemParams,
    sq: SqueezeParams,
    powers,
    *,
    drive: BaeDrive | None = None,
    omega=None,
    assembly: str = "stationary",
) -> NoiseBudgetCurve:
    powers = np.asarray(powers, dtype=float)
    rows, status = _budget_rows(scheme, params, sq, powers, drive, None, omega, assembly)
    ref = replace(VACUUM, convention=sq.convention)
    mono_omega = omega if scheme == "mono-squeezed" else None
    ref_rows, _ = _budget_rows("mono-squeezed", params, ref, powers, None, None, mono_omega, assembly)
    sql_rows, _ = _budget_rows("mono-squeezed", params, ref, powers, None, 0.0, mono_omega, assembly)
    return NoiseBudgetCurve(
        scheme=scheme,
        powers=powers,
        omega_opt=rows[:, 0],
        S_total=rows[:, 1],
        S_sn=rows[:, 2],
        S_rp=rows[:, 3],
        S_th=rows[:, 4],
        S_add=rows[:, 5],
        S_min=_nanmin(ref_rows[:, 1]),
        S_SQL=_nanmin(sql_rows[:, 1]),
        status=status,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """ζ_opt per power for the four drive configurations and their gain over the plain drive (dB)."""

    powers: np.ndarray
    zeta: dict
    enhancement_db: dict

    def ordering(self, i: int) -> list[str]:
        """Configurations at power index ``i``, best sensitivity first."""
        return sorted(self.zeta, key=lambda k: self.zeta[k][i])


def comparison_suite(
    params: SystemParams,
    powers,
    sq: SqueezeParams = SqueezeParams(r=2.0, theta=np.pi),
    *,
    drive: BaeDrive | None = None,
) -> ComparisonReport:
    powers = np.asarray(powers, dtype=float)
    ref = replace(VACUUM, convention=sq.convention)
    configs = {
        "plain": ("mono-squeezed", ref),
        "squeezed": ("mono-squeezed", sq),
        "bae": ("bae", ref),
        "bae_squeezed": ("bae", sq),
    }
    zeta = {k: np.empty(powers.size) for k in configs}
    base = BaeDrive() if drive is None else drive
    for i, P in enumerate(powers):
        for name, (scheme, s) in configs.items():
            if scheme == "bae":
                c = sensitivity_curve(scheme, params, s, drive=replace(base, P_plus=P, P_minus=P), n_minima=1)
            else:
                c = sensitivity_curve(scheme, params.replace(input_power=P), s, n_minima=1)
            zeta[name][i] = c.zeta_opt
    enh = {k: to_db(zeta["plain"] / v) for k, v in zeta.items()}
    return ComparisonReport(powers, zeta, enh)
