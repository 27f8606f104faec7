import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from annulus_sle import special_fn as sf
from annulus_sle.errors import NonConvergent, OutOfRange, PoleProximity, ValidationError

# Frozen with mpmath: Theta(r, z) = jtheta(1, z/2, e^-r), Theta_I = jtheta(4, z/2, e^-r).
THETA_1_HALF = 0.245322929017917661781619
THETA_I_1_0 = 0.3006258008689843729892117
THETA_PRIME_1_0 = 0.4722218986914563538839684
ZETA_PI_HALF = -7.193832906510145044692949

strip_point = st.builds(
    complex,
    st.floats(-6.0, 6.0, allow_nan=False),
    st.floats(-0.9, 0.9, allow_nan=False),
)


def direct_theta(r, z, n=100):
    k = np.arange(-n, n)
    return np.sum((-1.0) ** k * np.exp(-r * (k + 0.5) ** 2) * np.exp(1j * (k + 0.5) * z)) / 1j


def test_theta_zero():
    assert abs(sf.theta(1.0, 0.0)) < 1e-15


def test_theta_fixed_value():
    assert sf.theta(1.0, 0.5) == pytest.approx(THETA_1_HALF, rel=1e-14)


def test_theta_against_symmetric_direct_sum():
    for z in (0.5, 1.3 + 0.4j, -2.0 - 0.7j):
        assert abs(sf.theta(1.0, z) - direct_theta(1.0, z)) < 1e-14


def test_theta_I_fixed_value():
    assert sf.theta_I(1.0, 0.0).real == pytest.approx(THETA_I_1_0, rel=1e-14)


def test_theta_I_relation():
    z = 0.7
    lhs = sf.theta_I(1.0, z)
    rhs = 1j * sf.theta(1.0, z - 1j) * np.exp(-0.25 - 0.35j)
    assert abs(lhs - rhs) < 1e-12 * abs(lhs)


def test_theta_tilde_definition():
    assert sf.theta_tilde(1.0, 0.5) == pytest.approx(sf.theta(1.0, 0.5) * math.exp(0.0625), rel=1e-15)
    assert abs(sf.theta_tilde(1.0, 0.0)) < 1e-15


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("z", [0.3 + 0.2j, 2.5 - 0.4j, -1.1 + 0.8j])
def test_periodicity(r, z):
    tol = 1e-11
    t = sf.theta(r, z)
    assert abs(sf.theta(r, z + 2 * math.pi) + t) < tol * abs(t)
    assert abs(sf.theta(r, z + 2j * r) + t * np.exp(r - 1j * z)) < tol * abs(t * np.exp(r - 1j * z))
    ti = sf.theta_I(r, z)
    assert abs(sf.theta_I(r, z + 2 * math.pi) - ti) < tol * abs(ti)
    tt = sf.theta_tilde(r, z)
    assert abs(sf.theta_tilde(r, z + 2j * r) + tt) < tol * abs(tt)


@settings(max_examples=50, deadline=None)
@given(strip_point)
def test_theta_odd(z):
    assert abs(sf.theta(1.0, -z) + sf.theta(1.0, z)) <= 1e-13 * max(1.0, abs(sf.theta(1.0, z)))


def test_theta_deriv_even_orders_vanish_at_zero():
    for order in (2, 4):
        assert abs(sf.theta_deriv(1.3, 0.0, order)) < 1e-14


def test_theta_prime_zero():
    h = 1e-5
    fd = (sf.theta(1.0, h) - sf.theta(1.0, -h)) / (2 * h)
    assert abs(sf.theta_deriv(1.0, 0.0, 1) - fd) < 1e-8
    assert sf.theta_prime0(1.0) == pytest.approx(THETA_PRIME_1_0, rel=1e-14)


@pytest.mark.parametrize("kind", ["plain", "I", "tilde"])
def test_theta_deriv_matches_finite_difference(kind):
    f = {"plain": sf.theta, "I": sf.theta_I, "tilde": sf.theta_tilde}[kind]
    z, h = 0.9 + 0.3j, 1e-4
    d1 = (f(1.0, z + h) - f(1.0, z - h)) / (2 * h)
    d2 = (f(1.0, z + h) - 2 * f(1.0, z) + f(1.0, z - h)) / h ** 2
    assert abs(sf.theta_deriv(1.0, z, 1, kind) - d1) < 1e-7
    assert abs(sf.theta_deriv(1.0, z, 2, kind) - d2) < 1e-6


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_heat_equation(r):
    h = 1e-5
    z = np.array([0.3 + 0.1j, 1.7 - 0.3j, 3.0 + 0.4j, -2.2 + 0.2j])
    for f, kind in ((sf.theta, "plain"), (sf.theta_I, "I")):
        dr = (f(r + h, z) - f(r - h, z)) / (2 * h)
        assert np.max(np.abs(dr - sf.theta_jet(r, z, 2, kind)[2])) < 1e-7


def test_array_input_keeps_shape():
    z = np.linspace(0.1, 1.0, 6).reshape(2, 3)
    assert sf.theta(1.0, z).shape == (2, 3)
    assert sf.loewner_kernel_H(1.0, z).shape == (2, 3)
    assert isinstance(sf.theta(1.0, 0.2), complex)


def test_out_of_range_modulus():
    with pytest.raises(OutOfRange):
        sf.theta(0.2, 0.5)


def test_non_convergent_reported():
    ctl = sf.SeriesControl(abs_tol=1e-15, max_terms=8)
    with pytest.raises(NonConvergent):
        sf.theta(0.3, 0.5 + 0.5j, ctl)


@pytest.mark.parametrize("kw", [{"abs_tol": 0.0}, {"max_terms": 4}])
def test_series_control_validation(kw):
    with pytest.raises(ValidationError):
        sf.SeriesControl(**kw)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_H_special_values(r):
    assert abs(sf.loewner_kernel_H(r, math.pi)) < 1e-11
    assert abs(sf.loewner_kernel_H(r, 1j * r) + 1j) < 1e-11
    assert abs(sf.loewner_kernel_H(r, math.pi + 1j * r) + 1j) < 1e-11


def test_H_real_line_properties():
    x = np.linspace(0.1, 6.2, 50)
    assert np.max(np.abs(sf.loewner_kernel_H(1.0, x).imag)) < 1e-10
    assert np.max(np.abs(sf.loewner_kernel_H(1.0, x + 1j).imag + 1.0)) < 1e-10
    assert np.max(np.abs(sf.loewner_kernel_HI(1.0, x).imag)) < 1e-10


def test_HI_forms_agree():
    z = np.array([0.4 + 0.3j, 2.0 - 0.5j])
    via_shift = sf.loewner_kernel_H(1.0, z + 1j) + 1j
    assert np.max(np.abs(sf.loewner_kernel_HI(1.0, z) - via_shift)) < 1e-10


def test_Htilde_definition():
    assert sf.loewner_kernel_Htilde(1.0, 0.5) == pytest.approx(sf.loewner_kernel_H(1.0, 0.5) + 0.5)


def test_pole_guard():
    with pytest.raises(PoleProximity):
        sf.loewner_kernel_H(1.0, 2 * math.pi + 1e-12)
    with pytest.raises(PoleProximity):
        sf.loewner_kernel_HI(1.0, 1j)


def test_pole_residue_richardson():
    r = 1.0
    hs = [1e-2, 5e-3]
    e = [abs(h * sf.loewner_kernel_H(r, h) - 2.0) for h in hs]
    # error O(h^2): ratio ~4 under halving
    assert e[0] / e[1] == pytest.approx(4.0, rel=1e-3)
    extrap = (4 * hs[1] * sf.loewner_kernel_H(r, hs[1]) - hs[0] * sf.loewner_kernel_H(r, hs[0])) / 3
    assert abs(extrap - 2.0) < 1e-9


def test_H_asymptotic_cubic_remainder():
    r = 1.0
    c = 2 * sf.zeta_pi(r) / math.pi
    rem = [sf.loewner_kernel_H(r, z) - 2 / z + c * z for z in (0.04, 0.02)]
    assert abs(rem[0] / rem[1]) == pytest.approx(8.0, rel=1e-2)


def test_zeta_pi_large_r():
    assert sf.zeta_pi(40.0) == pytest.approx(2 * math.pi / 24, rel=1e-15)


def test_zeta_pi_fixed_value():
    assert sf.zeta_pi(0.5) == pytest.approx(ZETA_PI_HALF, rel=1e-13)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_modular_constant(r):
    jet = sf.theta_jet(r, np.array([0.0]), 3)[:, 0].real
    assert abs(sf.zeta_pi(r) / (2 * math.pi) + jet[3] / (6 * jet[1])) < 1e-10


def test_weierstrass_zeta_odd_and_residue():
    z = 0.7 + 0.3j
    assert abs(sf.weierstrass_zeta(1.0, -z) + sf.weierstrass_zeta(1.0, z)) < 1e-13
    assert abs(1e-4 * sf.weierstrass_zeta(1.0, 1e-4) - 1.0) < 1e-7


def test_weierstrass_zeta_lattice_sum_oracle():
    # conditionally convergent lattice sum, summed over growing symmetric boxes
    r, z = 1.0, 0.6 + 0.25j
    m, n = np.meshgrid(np.arange(-400, 401), np.arange(-40, 41))
    w = (2 * math.pi * m + 2j * r * n).ravel()
    w = w[w != 0]
    lat = 1 / z + np.sum(1 / (z - w) + 1 / w + z / w ** 2)
    assert abs(lat - sf.weierstrass_zeta(r, z)) < 1e-2


def test_pseudo_addition():
    rng = np.random.default_rng(7)
    r = 1.0
    worst = 0.0
    for _ in range(200):
        x = complex(rng.uniform(-3, 3), rng.uniform(-0.9, 0.9))
        y = complex(rng.uniform(-3, 3), rng.uniform(-0.9, 0.9))
        z = -x - y
        if min(sf.lattice_distance(r, v) for v in (x, y, z)) < 0.2:
            continue
        s = sum(sf.weierstrass_zeta(r, v) for v in (x, y, z))
        d = sum(sf.weierstrass_zeta_deriv(r, v) for v in (x, y, z))
        worst = max(worst, abs(s * s + d))
    assert worst < 1e-9


def test_kernel_addition_form():
    # H(z-w)(H(z)-H(w)) = H(z-w)^2/2 + (H(z)-H(w))^2/2 + H'(z-w) + H'(z) + H'(w) + 6 zeta_r(pi)/pi
    rng = np.random.default_rng(3)
    r = 1.3
    c = 6 * sf.zeta_pi(r) / math.pi
    h = lambda u: sf.loewner_kernel_H(r, u)
    hp = lambda u: sf.loewner_kernel_H_deriv(r, u)
    checked = 0
    for _ in range(80):
        z = complex(rng.uniform(-3, 3), rng.uniform(-1, 1))
        w = complex(rng.uniform(-3, 3), rng.uniform(-1, 1))
        if min(sf.lattice_distance(r, v) for v in (z, w, z - w)) < 0.2:
            continue
        lhs = h(z - w) * (h(z) - h(w))
        rhs = h(z - w) ** 2 / 2 + (h(z) - h(w)) ** 2 / 2 + hp(z - w) + hp(z) + hp(w) + c
        assert abs(lhs - rhs) < 1e-9
        checked += 1
    assert checked > 30
