import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ringsense.bae import (
    BaeDrive,
    BaeSteadyState,
    BoundViolationError,
    SingularCouplingError,
    bae_measurement_time,
    bae_photon_polynomial,
    bae_spectrum,
    bae_steady_state,
    bistability_map,
    effective_coupling,
    floquet_coefficient,
    floquet_coefficients,
    probe_floquet_response,
    semiclassical_bound_check,
)
from ringsense.core import SystemParams, derive
from ringsense.noise import SqueezeParams

TWO_PI = 2 * math.pi

# A slow toy system for the time-domain probe: ω_c = 31.25, ω_d = 11.25, δ = ω_m = 21.25 rad/s.
TOY = SystemParams(
    moment_of_inertia_over_hbar=0.1, oam_order=1, winding_number=0.5, collision_rate=0.0,
    coupling=1.0, cavity_linewidth=10.0, mechanical_damping=0.3,
)


def toy_state():
    fr = derive(TOY)
    return BaeSteadyState(0.25, 0.25, 0.5, 0.0, True, 1, fr.omega_m, 0j, 0j)


@pytest.fixture(scope="module")
def bss(params):
    return bae_steady_state(params)


# steady state -----------------------------------------------------------------


def test_zero_drive():
    s = bae_steady_state(SystemParams(), BaeDrive(0.0, 0.0))
    assert s.n_plus1 == 0.0 and s.n_minus1 == 0.0 and s.a_bar == 0.0


def test_weak_coupling_limit():
    p = SystemParams(coupling=2e6 * 1e-6)  # G/κ = 10⁻⁶
    fr = derive(p)
    s = bae_steady_state(p)
    ep, em, dl = BaeDrive().resolve(p, fr)
    lin = abs(ep) ** 2 / (dl ** 2 + fr.kappa ** 2 / 4)
    assert s.n_plus1 == pytest.approx(lin, rel=1e-6)
    assert s.a_bar == pytest.approx(abs(ep) / math.sqrt(dl ** 2 + fr.kappa ** 2 / 4), rel=1e-6)


def test_amplitude_switches_to_cubic_solution_above_threshold(bss):
    assert bss.a_bar == pytest.approx(math.sqrt(0.5 * (bss.n_plus1 + bss.n_minus1)), rel=1e-14)


def test_default_state(bss):
    assert bss.monostable and bss.branch_count == 1
    assert bss.residual < 1e-10
    assert bss.n_plus1 >= 0 and bss.n_minus1 >= 0


@given(st.floats(-22, -8), st.floats(1, 6), st.floats(0.1, 10))
def test_coupled_equations_residual(logP, logk, ratio):
    p = SystemParams(cavity_linewidth=10 ** logk)
    P = 10 ** logP
    s = bae_steady_state(p, BaeDrive(P, P * ratio))
    fr = derive(p)
    n = s.n_plus1 + s.n_minus1
    h2 = fr.kappa ** 2 / 4
    assert s.n_plus1 * ((s.delta - s.Omega_eff * n) ** 2 + h2) == pytest.approx(abs(s.eps_plus) ** 2, rel=1e-10)
    assert s.n_minus1 * ((s.delta + s.Omega_eff * n) ** 2 + h2) == pytest.approx(abs(s.eps_minus) ** 2, rel=1e-10)
    assert s.branch_count in (1, 2, 3)
    assert min(s.n_plus1, s.n_minus1) >= 0


def test_polynomial_roots_are_solutions():
    # every root of the quintic is a self-consistent total photon number
    p = SystemParams(cavity_linewidth=10.0)
    s = bae_steady_state(p, BaeDrive(1e-19, 1e-19))
    assert s.branch_count == 3
    fr = derive(p)
    for n1, nm1 in s.branches:
        n = n1 + nm1
        assert n1 * ((s.delta - s.Omega_eff * n) ** 2 + fr.kappa ** 2 / 4) == pytest.approx(abs(s.eps_plus) ** 2, rel=1e-8)


def test_continuation_idempotent(bss, params):
    from ringsense.bae import _refine

    fr = derive(params)
    n = bss.n_plus1 + bss.n_minus1
    again = _refine(n, abs(bss.eps_plus) ** 2, abs(bss.eps_minus) ** 2, bss.delta, fr.kappa, bss.Omega_eff)
    assert again == pytest.approx(n, rel=1e-12)
    assert bae_steady_state(params) == bss


def test_effective_coupling_forms(params):
    fr = derive(params)
    assert effective_coupling(params) == pytest.approx(2 * fr.G ** 2 * fr.omega_m / (fr.omega_m ** 2 - fr.Omega ** 2))
    # the collisional static response reduces to the collisionless one at gN = 0
    p0 = params.replace(collision_rate=0.0)
    assert effective_coupling(p0, collisional=True) == pytest.approx(effective_coupling(p0), rel=1e-12)


def test_singular_effective_coupling():
    # L_p = 0 with l = 0 is excluded; ω_m = Ω needs ω_d = 0, i.e. L_p = 2l
    p = SystemParams(winding_number=20.0, oam_order=10)
    with pytest.raises(SingularCouplingError):
        effective_coupling(p)


def test_polynomial_degree():
    assert bae_photon_polynomial(1.0, 1.0, 1.0, 1.0, 1.0).size == 6


# bistability maps ----------------------------------------------------------------


def test_monostable_at_low_power_default_cavity(params):
    m = bistability_map(params, np.logspace(-17, np.log10(12.4e-15), 25))
    assert np.all(m.monostable)


def test_monostable_for_broad_cavities_at_high_power(params):
    for kappa in (1e5, 1e6, 1e7):
        m = bistability_map(params.replace(cavity_linewidth=kappa), np.logspace(-14, -6, 17))
        assert np.all(m.monostable)


def test_kappa_sweep_single_transition(params):
    m = bistability_map(params, np.logspace(1, 4, 31), "kappa", BaeDrive(1e-19, 1e-19))
    assert m.branch_count[0] > 1 and m.branch_count[-1] == 1
    assert len(m.boundaries()) == 1


# Floquet coefficients ----------------------------------------------------------


def test_coefficients_vanish_without_coupling(params):
    p = params.replace(coupling=0.0)
    s = bae_steady_state(p)
    c = floquet_coefficients(np.linspace(10, 1000, 9), p, s)
    for arr in (c.A0, c.A2[1], c.A2[-1], c.C1[1], c.C1[-1], c.D1[1], c.D1[-1]):
        assert np.all(arr == 0)
    assert np.all(c.B0 != 0)


def test_shot_coefficient_at_large_frequency(params, bss):
    b0 = floquet_coefficient("P", 0, np.array([1e12]), params, bss)
    assert abs(b0[0]) == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("kind", "QPcd")
@pytest.mark.parametrize("n", [3, -3, 4, -5])
def test_truncation(kind, n, params, bss):
    assert np.all(floquet_coefficient(kind, n, np.linspace(-1e4, 1e4, 101), params, bss) == 0)


def test_coupling_scaling(params, bss):
    w = np.linspace(50, 900, 7)
    c1 = floquet_coefficients(w, params, bss)
    c2 = floquet_coefficients(w, params, replace(bss, a_bar=2 * bss.a_bar))
    np.testing.assert_allclose(c2.A0, 4 * c1.A0, rtol=1e-13)
    np.testing.assert_allclose(c2.A2[1], 4 * c1.A2[1], rtol=1e-13)
    np.testing.assert_allclose(c2.C1[-1], 2 * c1.C1[-1], rtol=1e-13)
    np.testing.assert_allclose(c2.D1[1], 2 * c1.D1[1], rtol=1e-13)
    np.testing.assert_array_equal(c2.B0, c1.B0)


@pytest.mark.parametrize(
    "kind,orders,omega",
    [("Q", (0, 2, -2), 10.0), ("P", (0,), 10.0), ("c", (1, -1), 10.625), ("d", (1, -1), 10.625)],
)
def test_time_domain_transfer_function(kind, orders, omega):
    bss = toy_state()
    probe = probe_floquet_response(kind, omega, orders, TOY, bss, cycles=1, settle=60.0)
    for n in orders:
        expect = complex(floquet_coefficient(kind, n, omega, TOY, bss))
        assert abs(probe[n] - expect) <= 1e-3 * abs(expect)


# spectrum --------------------------------------------------------------------------


def _argmax_hz(p, s):
    fr = derive(p)
    w = np.linspace(0.5 * fr.Omega, 1.5 * fr.Omega, 20001)
    return w[np.argmax(bae_spectrum(w, p, s).total)] / TWO_PI


def test_peak_at_half_gap(params, bss):
    assert _argmax_hz(params, bss) == pytest.approx(63.0, abs=0.5)


def test_peak_doubles_with_winding(params):
    p2 = params.replace(winding_number=2.0)
    assert _argmax_hz(p2, bae_steady_state(p2)) == pytest.approx(126.06, abs=0.5)


def test_peak_within_one_step_of_half_gap(params, bss):
    fr = derive(params)
    w = np.linspace(0.5 * fr.Omega, 1.5 * fr.Omega, 20001)
    peak = w[np.argmax(bae_spectrum(w, params, bss).total)]
    assert abs(peak - fr.Omega) <= w[1] - w[0]


def test_flat_without_coupling(params):
    p = params.replace(coupling=0.0)
    s = bae_spectrum(np.linspace(1, 2000, 500), p, bae_steady_state(p))
    np.testing.assert_allclose(s.total, 0.5, rtol=1e-12)


def test_shot_channel_independent_of_coupling(params, bss):
    w = np.linspace(10, 800, 200)
    a = bae_spectrum(w, params, bss)
    b = bae_spectrum(w, params, replace(bss, a_bar=3 * bss.a_bar))
    np.testing.assert_array_equal(a.sn, b.sn)


def test_backaction_is_quadratic_polynomial_in_coupling(params, bss):
    # S − S_sn = α(Gā)² + β(Gā)⁴: three amplitudes determine and test the fit
    w = np.linspace(10, 800, 50)
    vals = {k: bae_spectrum(w, params, replace(bss, a_bar=k * bss.a_bar)) for k in (1, 2, 3)}
    y = {k: v.total - v.sn for k, v in vals.items()}
    beta = (y[2] - 4 * y[1]) / 12
    alpha = y[1] - beta
    np.testing.assert_allclose(y[3], 9 * alpha + 81 * beta, rtol=1e-9)


squeezes = st.builds(SqueezeParams, r=st.floats(0, 2.5), theta=st.floats(0, TWO_PI), thermal_photons=st.floats(0, 2))


@given(squeezes, st.sampled_from(["stationary", "printed"]))
def test_spectrum_nonnegative_and_closed(sq, assembly):
    p = SystemParams()
    s = bae_steady_state(p)
    w = np.linspace(1.0, 2000.0, 2001)
    r = bae_spectrum(w, p, s, sq, assembly=assembly)
    assert r.total.min() >= 0
    np.testing.assert_allclose(r.sn + r.rp + r.th + r.add, r.total, rtol=1e-10)


# measurement time ------------------------------------------------------------------


def test_measurement_time(params, bss):
    fr = derive(params)
    t0, th = bae_measurement_time(np.array([0.0, fr.kappa / 2]), params, bss)
    assert t0 == pytest.approx(fr.kappa / (8 * fr.G ** 2 * bss.a_bar ** 2), rel=1e-14)
    assert th == pytest.approx(2 * t0, rel=1e-14)
    t = bae_measurement_time(np.linspace(0, 1e4, 100), params, bss)
    assert np.all(np.diff(t) > 0) and np.all(t > 0)


# semiclassical bound ------------------------------------------------------------------


def test_bound_trivial_without_drive():
    r = semiclassical_bound_check(SystemParams(), BaeDrive(0.0, 0.0))
    assert r.satisfied and r.max_amplitude == 0.0


def test_bound_converges_under_tolerance_refinement():
    p = SystemParams(cavity_linewidth=1e6)
    a = semiclassical_bound_check(p, rtol=1e-9)
    b = semiclassical_bound_check(p, rtol=5e-10)
    assert a.satisfied and b.satisfied
    assert b.max_amplitude == pytest.approx(a.max_amplitude, rel=1e-3)


def test_bound_violation_in_narrow_cavity():
    # sideband resolution breaks the Floquet-truncated steady state; the check must say so
    with pytest.raises(BoundViolationError):
        semiclassical_bound_check(SystemParams(cavity_linewidth=1e5), raise_on_violation=True)
