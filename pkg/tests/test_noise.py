import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ringsense.core import DomainError, HBAR, K_B
from ringsense.noise import (
    SqueezeParams,
    VACUUM,
    optical_kernel,
    squeeze_moments,
    thermal_kernel,
    thermal_photon_number,
)

TWO_PI = 2 * math.pi
amps = st.floats(0.0, 3.0)
angles = st.floats(0.0, TWO_PI)
occupations = st.floats(0.0, 5.0)
conventions = st.sampled_from(["textbook", "printed"])


def test_vacuum_moments():
    assert squeeze_moments(VACUUM) == (0.0, 0j)
    k = optical_kernel(VACUUM)
    assert (k.chi_QQ, k.chi_PP, k.chi_QP, k.chi_PQ) == (1, 1, 1, -1)


def test_moments_r2_theta_pi():
    n, m = squeeze_moments(SqueezeParams(2.0, math.pi, convention="printed"))
    assert n == pytest.approx(13.154, abs=1e-3)
    # the quoted value rounds sinh 2 cosh 2 = 13.6450 to 13.648
    assert m.real == pytest.approx(-13.648, abs=5e-3)
    assert abs(m.imag) < 1e-12


def test_kernel_r2_theta_pi_printed_sign():
    k = optical_kernel(SqueezeParams(2.0, math.pi, convention="printed"))
    assert k.chi_QQ.real == pytest.approx(math.exp(-4), rel=1e-12)
    assert k.chi_PP.real == pytest.approx(math.exp(4), rel=1e-12)


def test_kernel_r2_theta_pi_textbook_sign_squeezes_phase():
    k = optical_kernel(SqueezeParams(2.0, math.pi))
    assert k.chi_PP.real == pytest.approx(math.exp(-4), rel=1e-12)
    assert k.chi_QQ.real == pytest.approx(math.exp(4), rel=1e-12)


def test_quarter_turn_has_no_real_moment():
    n, _ = squeeze_moments(SqueezeParams(2.0, math.pi / 2))
    k = optical_kernel(SqueezeParams(2.0, math.pi / 2))
    assert k.chi_QQ.real == pytest.approx(2 * n + 1)
    assert k.chi_PP.real == pytest.approx(2 * n + 1)


def test_rejects_negative_amplitude():
    with pytest.raises(DomainError):
        SqueezeParams(r=-0.1)
    with pytest.raises(DomainError):
        SqueezeParams(thermal_photons=-1)


@given(amps, angles, conventions)
def test_minimum_uncertainty(r, th, conv):
    n, m = squeeze_moments(SqueezeParams(r, th, convention=conv))
    assert abs(m) ** 2 == pytest.approx(n * (n + 1), rel=1e-12, abs=1e-12)


@given(amps, angles, occupations, conventions)
def test_commutator_residue(r, th, na, conv):
    k = optical_kernel(SqueezeParams(r, th, na, conv))
    assert k.chi_QP - k.chi_PQ == 2
    assert k.chi_QQ.imag == 0 and k.chi_PP.imag == 0
    assert k.chi_QQ.real > 0 and k.chi_PP.real > 0


@given(amps, angles)
def test_uncertainty_product(r, th):
    k = optical_kernel(SqueezeParams(r, th))
    lhs = (k.chi_QQ * k.chi_PP).real
    assert lhs >= abs(k.chi_QP * k.chi_PQ) * (1 - 1e-9)


@pytest.mark.parametrize("th", [0.0, math.pi])
def test_uncertainty_equality_on_axes(th):
    k = optical_kernel(SqueezeParams(1.3, th))
    assert (k.chi_QQ * k.chi_PP).real == pytest.approx(abs(k.chi_QP * k.chi_PQ), rel=1e-12)


@given(amps, angles)
def test_angle_periodicity(r, th):
    a = optical_kernel(SqueezeParams(r, th))
    b = optical_kernel(SqueezeParams(r, th + TWO_PI))
    for f in ("chi_QQ", "chi_PP", "chi_QP", "chi_PQ"):
        assert getattr(a, f) == pytest.approx(getattr(b, f), rel=1e-9, abs=1e-9)


@given(amps)
def test_half_turn_exchanges_quadratures(r):
    assert optical_kernel(SqueezeParams(r, math.pi)).chi_QQ == pytest.approx(optical_kernel(SqueezeParams(r, 0.0)).chi_PP)


def test_thermal_kernel_zero_temperature():
    w, wk, g = 100.0, 4000.0, 5.0
    assert thermal_kernel(w, wk, 0.0, g) == pytest.approx(2 * (TWO_PI * g * w / wk))


def test_thermal_kernel_bracket_at_20nK():
    wk = TWO_PI * 694.6
    bracket = thermal_kernel(wk, wk, 20e-9, 1.0) / (TWO_PI * 1.0)
    assert bracket == pytest.approx(2.465, abs=1e-3)
    x = HBAR * wk / (2 * K_B * 20e-9)
    assert bracket == pytest.approx(1 / math.tanh(x) + 1, rel=1e-12)


def test_thermal_kernel_vanishes_at_dc():
    assert thermal_kernel(0.0, 10.0, 1e-6, 1.0) == 0.0


def test_thermal_kernel_domain():
    with pytest.raises(DomainError):
        thermal_kernel(1.0, 0.0, 1e-8, 1.0)


def test_thermal_kernel_detailed_balance():
    wk, T, g = 4000.0, 20e-9, 3.0
    pos, neg = thermal_kernel(np.array([wk, -wk]), wk, T, g)
    ratio = math.exp(HBAR * wk / (K_B * T))
    assert pos / neg == pytest.approx(ratio, rel=1e-9)
    assert neg >= 0


@given(st.floats(1e-9, 1e-6), st.floats(1.01, 3.0))
def test_thermal_kernel_increasing_in_temperature(T, factor):
    wk = TWO_PI * 700
    assert thermal_kernel(wk, wk, T * factor, 1.0) > thermal_kernel(wk, wk, T, 1.0)


def test_thermal_photon_number():
    assert thermal_photon_number(TWO_PI * 1e14, 300.0) < 1e-6
    assert thermal_photon_number(TWO_PI * 1e14, 3.0) == 0.0  # beyond the exponent cutoff
    assert thermal_photon_number(TWO_PI * 1e14, 0.0) == 0.0
    w = math.log(2) * K_B * 1.0 / HBAR
    assert thermal_photon_number(w, 1.0) == pytest.approx(1.0, rel=1e-12)
