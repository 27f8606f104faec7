import math

import numpy as np
import pytest
from scipy import special as sps

from annulus_sle import screening as scr
from annulus_sle import special_fn as sf
from annulus_sle.errors import (
    BranchCutViolation,
    KappaNotResidueCase,
    KappaNotTabulated,
    KappaOutOfRange,
    PoleAtKappa,
    QuadratureNonConvergent,
    ValidationError,
)

# Frozen with mpmath (jtheta, quad with tanh-sinh at 30 digits).
C_6 = 0.1244273913024650761087834
Z_SHARP_ER = 2.502095096430374523134094
EULER_ER = 1.807575632467715662955018
EULER_DIRICHLET = 1.49257084184309287147722

X_GRID = np.linspace(0.3, 5.9, 40)


def gauss_jacobi_euler(r, x, kappa, n=60):
    """Independent route: Gauss-Jacobi with the endpoint singularities in the weight."""
    al = 4.0 / kappa
    t, w = sps.roots_jacobi(n, -al, -al)
    s = 0.5 * (1.0 + t)
    th = lambda y: np.real(sf.theta(r, y))
    g = ((th(x * s) / s) * (th(x * (1 - s)) / (1 - s))) ** -al
    pref = sf.theta_prime0(r) ** (6 / kappa) * th(x) ** (2 / kappa) * x
    integral = 2.0 ** (2 * al - 1) * np.sum(w * g)
    return pref * integral / math.gamma(1 - al)


def test_normalization_constant():
    assert scr.normalization_C(6.0) == pytest.approx(C_6, rel=1e-13)
    for k in (4.0, 2.0, 1.0):
        with pytest.raises(PoleAtKappa):
            scr.normalization_C(k)


def test_z_sharp_fixed_value_and_branch():
    assert scr.z_sharp("er", 1.0, 2.0, 1.0, 1.5, 6.0).real == pytest.approx(Z_SHARP_ER, rel=1e-13)
    with pytest.raises(BranchCutViolation):
        scr.z_sharp("er", 1.0, 2.0, 1.0, 2.5, 6.0)
    near = scr.z_sharp("er", 1.0, 2.0, 1.0, 1.5 + 1e-9j, 6.0)
    assert abs(near - Z_SHARP_ER) < 1e-6


def test_euler_fixed_values():
    assert scr.partition_euler("er", 1.0, 2.0, 0.0, 6.0) == pytest.approx(EULER_ER, rel=1e-9)
    assert scr.partition_euler("dirichlet", 1.0, 2.0, 0.0, 6.0) == pytest.approx(EULER_DIRICHLET, rel=1e-9)


@pytest.mark.parametrize("kappa", [4.5, 6.0, 8.0])
@pytest.mark.parametrize("x", [0.5, 2.0, 5.0])
def test_euler_against_gauss_jacobi(kappa, x):
    ref = gauss_jacobi_euler(1.0, x, kappa)
    assert scr.partition_euler("er", 1.0, x, 0.0, kappa) == pytest.approx(ref, rel=1e-8)


def test_euler_translation_invariant_and_positive():
    for kappa in (4.5, 6.0, 8.0):
        a = scr.partition_euler("er", 1.2, 2.5, 0.5, kappa)
        b = scr.partition_euler("er", 1.2, 3.5, 1.5, kappa)
        assert a > 0
        assert a == pytest.approx(b, rel=1e-12)


def test_euler_errors():
    with pytest.raises(KappaOutOfRange):
        scr.partition_euler("er", 1.0, 2.0, 0.0, 4.0)
    with pytest.raises(ValidationError):
        scr.partition_euler("er", 1.0, 7.0, 0.0, 6.0)
    with pytest.raises(QuadratureNonConvergent):
        scr.partition_euler("er", 1.0, 2.0, 0.0, 6.0, scr.QuadratureControl(level_max=3, rel_tol=1e-16))


def test_quadrature_control_validation():
    with pytest.raises(ValidationError):
        scr.QuadratureControl(scheme="gauss")
    with pytest.raises(ValidationError):
        scr.QuadratureControl(rel_tol=0.0)


def test_tanh_sinh_beta_function():
    # int s^-a (1-s)^-a ds = B(1-a, 1-a)
    for a in (0.0, 0.5, 0.9):
        val = scr.tanh_sinh_unit(lambda ls, l1: -a * (ls + l1), -a)
        assert val == pytest.approx(sps.beta(1 - a, 1 - a), rel=1e-9)


def test_residue_errors():
    with pytest.raises(KappaNotResidueCase):
        scr.partition_residue("er", 1.0, 2.0, 6.0)
    with pytest.raises(KappaNotTabulated):
        scr.partition_closed_form(1.0, 2.0, 6.0)
    with pytest.raises(ValidationError):
        scr.partition_closed_form(1.0, 2.0, 4.0, which="table3")


def test_residue_kappa4_is_table_entry():
    # simple pole: the residue is exactly Theta'(0)^(1/2) Theta(x)^(-1/2)
    for x in (0.4, 2.0, 5.5):
        assert scr.partition_residue("er", 1.0, x, 4.0) == pytest.approx(
            scr.partition_closed_form(1.0, x, 4.0), rel=1e-13)


@pytest.mark.parametrize("kappa,ratio", [(2.0, -1.0), (4 / 3, 3 / 8), (1.0, -1 / 3)])
def test_residue_over_table(kappa, ratio):
    for x in X_GRID[::8]:
        q = scr.partition_residue("er", 1.1, x, kappa) / scr.partition_closed_form(1.1, x, kappa)
        assert q == pytest.approx(ratio, rel=1e-9)


@pytest.mark.parametrize("kappa", [4.0, 2.0, 4 / 3, 1.0])
def test_z_infinity_proportional_to_table1(kappa):
    q = [scr.z_infinity(x, kappa) / scr.partition_closed_form(0, x, kappa, "degenerate_table1") for x in X_GRID]
    assert (max(q) - min(q)) < 1e-8 * abs(q[0])


@pytest.mark.parametrize("kappa", [4.5, 6.0, 8.0, 3.0])
def test_hyp2f1_against_scipy(kappa):
    c = 1.5 - 4 / kappa
    for s in (0.05, 0.4, 0.8):
        ref = sps.hyp2f1(0.5, 0.5, c, s) * sps.rgamma(c)
        assert scr.hyp2f1_regularized(0.5, 0.5, c, s) == pytest.approx(ref, rel=1e-12)


def test_hyp2f1_nonpositive_integer_c():
    # c = -1: the regularized series starts at n = 2
    s = 0.3
    ref = (0.5 * 1.5) ** 2 / 2 * s ** 2 * sps.hyp2f1(2.5, 2.5, 3, s)
    assert scr.hyp2f1_regularized(0.5, 0.5, -1.0, s) == pytest.approx(ref, rel=1e-12)


def test_z_infinity_validation():
    with pytest.raises(ValidationError):
        scr.z_infinity(0.0, 6.0)
    with pytest.raises(ValidationError):
        scr.hyp2f1_regularized(0.5, 0.5, 1.0, 1.0)


@pytest.mark.parametrize("kappa", [4.0, 2.0, 4 / 3, 1.0])
def test_table2_satisfies_pde(kappa):
    f = lambda r, x: scr.partition_closed_form(r, x, kappa)
    for r in (0.8, 1.5):
        worst = max(scr.null_vector_residual(f, "er", r, x, kappa) for x in X_GRID[::4])
        assert worst < 1e-6


@pytest.mark.parametrize("kappa", [4.0, 2.0])
def test_residue_satisfies_dirichlet_pde(kappa):
    f = lambda r, x: scr.partition_residue("dirichlet", r, x, kappa)
    worst = max(scr.null_vector_residual(f, "dirichlet", 1.0, x, kappa) for x in X_GRID[::8])
    assert worst < 1e-6


def test_euler_dirichlet_pde():
    f = lambda r, x: scr.partition_euler("dirichlet", r, x, 0.0, 6.0)
    worst = max(scr.null_vector_residual(f, "dirichlet", 1.0, x, 6.0) for x in X_GRID[::10])
    assert worst < 1e-3


def test_negative_control_pde():
    # wrong exponent at kappa = 4
    f = lambda r, x: sf.theta(r, x).real ** -0.6
    worst = min(scr.null_vector_residual(f, "er", 1.0, x, 4.0) for x in X_GRID)
    assert worst > 1e-2


@pytest.mark.parametrize("kappa", [4.5, 6.0, 8.0, 3.0])
def test_z_infinity_ode(kappa):
    f = lambda x: scr.z_infinity(x, kappa)
    assert max(scr.degenerate_ode_residual(f, x, kappa) for x in X_GRID[::4]) < 1e-6


def test_evaluator_dispatch_and_validation():
    assert scr.PartitionEvaluator("closed_form", 4.0)(1.0, 2.0) == scr.partition_closed_form(1.0, 2.0, 4.0)
    assert scr.PartitionEvaluator("hypergeometric_limit", 6.0)(1.0, 2.0) == scr.z_infinity(2.0, 6.0)
    with pytest.raises(KappaOutOfRange):
        scr.PartitionEvaluator("euler_integral", 3.0)
    with pytest.raises(KappaNotResidueCase):
        scr.PartitionEvaluator("residue", 3.0)
    with pytest.raises(ValidationError):
        scr.PartitionEvaluator("closed_form", 4.0, bc="dirichlet")
    with pytest.raises(ValidationError):
        scr.PartitionEvaluator("monte_carlo", 4.0)


def test_large_r_euler_matches_z_infinity():
    q = [scr.partition_euler("er", 8.0, x, 0.0, 6.0) / scr.z_infinity(x, 6.0) for x in X_GRID[::4]]
    assert max(q) - min(q) < 1e-6 * abs(q[0])
