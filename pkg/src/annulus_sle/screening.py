"""Screening partition functions of the chordal-type annulus SLE.

Four evaluators of Z(r, x), x = p - q:

* ``euler_integral``: interval integral of the screened correlator (kappa > 4),
* ``residue``: residue at the order-4/kappa pole when 4/kappa is an integer,
* ``closed_form``: tabulated expressions (kappa in {4, 2, 4/3, 1}),
* ``hypergeometric_limit``: the r -> infinity limit Z_inf(x).

All values are defined up to a multiplicative constant.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import special as sps

from . import special_fn as sf
from .correlations import BoundaryCondition
from .errors import (
    BranchCutViolation,
    HypergeometricNonConvergent,
    KappaNotResidueCase,
    KappaNotTabulated,
    KappaOutOfRange,
    PoleAtKappa,
    QuadratureNonConvergent,
    ValidationError,
)

TABULATED = (4.0, 2.0, 4.0 / 3.0, 1.0)
METHODS = ("euler_integral", "residue", "closed_form", "hypergeometric_limit")
SMALL_ARG = 1e-7  # below this Theta(y) is replaced by Theta'(0) y in log space


def _int_ratio(kappa, tol=1e-12):
    """4/kappa as an int if it is a positive integer, else None."""
    m = 4.0 / kappa
    n = round(m)
    if n >= 1 and abs(m - n) < tol * max(1.0, m):
        return int(n)
    return None


def _tabulated(kappa):
    for k in TABULATED:
        if abs(kappa - k) < 1e-12:
            return k
    return None


def _check_x(x):
    if not 0.0 < x < 2.0 * math.pi:
        raise ValidationError(f"x = p - q must lie in (0, 2 pi), got {x!r}")


def normalization_C(kappa):
    """C(kappa) = (2 sin(4 pi / kappa))^-2 / Gamma(1 - 4/kappa)."""
    if not kappa > 0:
        raise ValidationError("kappa must be positive")
    if _int_ratio(kappa) is not None:
        raise PoleAtKappa(f"C(kappa) has a pole at kappa={kappa!r} (4/kappa integer)")
    return (2.0 * math.sin(4.0 * math.pi / kappa)) ** -2 / math.gamma(1.0 - 4.0 / kappa)


def _theta_fn(bc):
    return sf.theta if bc is BoundaryCondition.ER else sf.theta_tilde


def z_sharp(bc, r, p, q, zeta, kappa, ctl=None):
    """Screened integrand Z#(p, q, zeta); real positive for zeta in (q, p).

    Off the real axis each theta factor is raised with its principal power.
    """
    bc = BoundaryCondition.parse(bc)
    x = float(p) - float(q)
    _check_x(x)
    zeta = complex(zeta)
    if zeta.imag == 0.0 and not q < zeta.real < p:
        raise BranchCutViolation(f"zeta={zeta.real!r} lies on the cut outside (q, p)")
    f = _theta_fn(bc)
    al = 4.0 / kappa
    t0 = sf.theta_prime0(r, ctl)
    tx = f(r, x, ctl).real
    a = complex(f(r, p - zeta, ctl))
    b = complex(f(r, zeta - q, ctl))
    if zeta.imag == 0.0:
        return complex(t0 ** (6.0 / kappa) * tx ** (2.0 / kappa) * (a.real * b.real) ** -al)
    return complex(t0 ** (6.0 / kappa) * tx ** (2.0 / kappa) * a ** -al * b ** -al)


# --- tanh-sinh quadrature --------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureControl:
    scheme: str = "tanh-sinh"
    level_max: int = 12
    rel_tol: float = 1e-10
    level_min: int = 3

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValidationError("rel_tol must be positive")
        if self.scheme != "tanh-sinh":
            raise ValidationError("only the tanh-sinh scheme is available")
        if self.level_max < self.level_min:
            raise ValidationError("level_max below level_min")


def _log_theta_real(bc, r, log_y, ctl):
    """log Theta(y) (or log Theta~) for real y = exp(log_y) in (0, 2 pi)."""
    y = np.exp(log_y)
    out = np.empty_like(log_y)
    small = y < SMALL_ARG
    if np.any(small):
        out[small] = math.log(sf.theta_prime0(r, ctl)) + log_y[small]
    big = ~small
    if np.any(big):
        vals = np.real(sf.theta(r, y[big], ctl))
        out[big] = np.log(vals)
    if bc is BoundaryCondition.DIRICHLET:
        out = out + y * y / (4.0 * r)
    return out


def _euler_log_integrand(bc, r, x, kappa, log_s, log_1ms, ctl):
    """log of x * Z#(x, 0, x s) at nodes given by log s and log(1 - s)."""
    al = 4.0 / kappa
    lx = math.log(x)
    const = (6.0 / kappa) * math.log(sf.theta_prime0(r, ctl))
    const += (2.0 / kappa) * _log_theta_real(bc, r, np.array([lx]), ctl)[0] + lx
    return const - al * (_log_theta_real(bc, r, lx + log_1ms, ctl)
                         + _log_theta_real(bc, r, lx + log_s, ctl))


def tanh_sinh_unit(log_f, exponent, qctl=None):
    """Integrate exp(log_f(log s, log(1-s))) over s in (0, 1).

    ``exponent`` is the smallest power of s (or 1-s) the integrand behaves
    like near the endpoints; it sets the truncation of the node range.
    """
    qctl = qctl or QuadratureControl()
    decay = max(1.0 + exponent, 1e-3)
    u_max = math.asinh(50.0 / (decay * math.pi)) + 0.25

    def level_sum(u):
        v = math.pi * np.sinh(u)
        log_s = -np.logaddexp(0.0, -v)
        log_1ms = -np.logaddexp(0.0, v)
        logw = log_s + log_1ms + np.log(math.pi * np.cosh(u))
        return float(np.sum(np.exp(log_f(log_s, log_1ms) + logw)))

    h = 1.0
    n = int(math.ceil(u_max / h))
    total = h * level_sum(h * np.arange(-n, n + 1))
    prev = total
    for k in range(1, qctl.level_max + 1):
        h *= 0.5
        n = int(math.ceil(u_max / h))
        j = np.arange(-n, n + 1)
        odd = j[j % 2 != 0]
        total = 0.5 * prev + h * level_sum(h * odd)
        if k >= qctl.level_min and abs(total - prev) <= qctl.rel_tol * abs(total):
            return total
        prev = total
    raise QuadratureNonConvergent(f"tanh-sinh did not reach rel_tol={qctl.rel_tol:g}")


def partition_euler(bc, r, p, q, kappa, qctl=None, ctl=None):
    """(1/Gamma(1-4/kappa)) * integral of Z# over (q, p), kappa > 4."""
    bc = BoundaryCondition.parse(bc)
    if not kappa > 4:
        raise KappaOutOfRange("the Euler integral converges only for kappa > 4")
    x = float(p) - float(q)
    _check_x(x)

    def log_f(log_s, log_1ms):
        return _euler_log_integrand(bc, r, x, kappa, log_s, log_1ms, ctl)

    val = tanh_sinh_unit(log_f, -4.0 / kappa, qctl)
    return val / math.gamma(1.0 - 4.0 / kappa)


# --- residue calculus -----------------------------------------------------------------

def _series_mul(a, b, n):
    out = np.zeros(n, dtype=complex)
    for i in range(n):
        out[i] = np.dot(a[: i + 1], b[i::-1])
    return out


def _series_inv(c, n):
    out = np.zeros(n, dtype=complex)
    out[0] = 1.0 / c[0]
    for k in range(1, n):
        out[k] = -np.dot(c[1: k + 1], out[k - 1::-1]) / c[0]
    return out


def _series_pow(c, m, n):
    out = np.zeros(n, dtype=complex)
    out[0] = 1.0
    for _ in range(m):
        out = _series_mul(out, c, n)
    return out


def partition_residue(bc, r, x, kappa, ctl=None):
    """Residue of Z#(x, 0, .) at its order-4/kappa pole zeta = x.

    With Theta(u) = u phi(u) the residue is the u^(m-1) Taylor coefficient
    of (-1)^m phi(u)^-m Theta(x+u)^-m, built from analytic theta jets.  The
    factor 2 pi i and the sign (-1)^m are dropped so that kappa = 4 gives a
    positive value.
    """
    bc = BoundaryCondition.parse(bc)
    m = _int_ratio(kappa)
    if m is None:
        raise KappaNotResidueCase(f"4/kappa is not a positive integer for kappa={kappa!r}")
    _check_x(x)
    kind = "plain" if bc is BoundaryCondition.ER else "tilde"
    j0 = sf.theta_jet(r, np.array([0.0]), m, kind, ctl)[:, 0]
    jx = sf.theta_jet(r, np.array([float(x)]), m - 1, kind, ctl)[:, 0]
    phi = np.array([j0[k + 1] / math.factorial(k + 1) for k in range(m)])
    tx = np.array([jx[k] / math.factorial(k) for k in range(m)])
    g = _series_mul(_series_pow(_series_inv(phi, m), m, m), _series_pow(_series_inv(tx, m), m, m), m)
    res = g[m - 1].real
    t0 = j0[1].real
    return float(res * t0 ** (6.0 / kappa) * jx[0].real ** (2.0 / kappa))


# --- closed forms ---------------------------------------------------------------------

def _table2(r, x, kappa, ctl):
    th = sf.theta(r, x, ctl).real
    h, hp, hpp = (v.real for v in sf.loewner_kernel_jet(r, float(x), 2, ctl))
    zp = sf.zeta_pi(r, ctl) / math.pi
    pref = sf.theta_prime0(r, ctl) ** (2.0 / kappa)
    if kappa == 4.0:
        body = th ** -0.5
    elif kappa == 2.0:
        body = h / th
    elif kappa == 1.0:
        body = th ** -2 * (4 * h ** 3 - 6 * h * hp + hpp + 12 * zp * h)
    else:
        body = th ** -1.5 * (3 * h * h - 2 * hp + 4 * zp)
    return float(pref * body)


def _table1(x, kappa):
    s = math.sin(0.5 * x)
    c = 1.0 / math.tan(0.5 * x)
    cp = -0.5 * (1.0 + c * c)
    cpp = -c * cp
    if kappa == 4.0:
        return s ** -0.5
    if kappa == 2.0:
        return c / s
    if kappa == 1.0:
        return s ** -2 * (4 * c ** 3 - 6 * c * cp + cpp + c)
    return s ** -1.5 * (3 * c * c - 2 * cp + 1.0 / 3.0)


def partition_closed_form(r, x, kappa, which="annulus_table2_ER", ctl=None):
    """Tabulated partition functions.

    ``annulus_table2_ER`` carries the r-dependent factor Theta'(r, 0)^(2/kappa)
    that the residue produces; without it the entries fail the r-part of
    the null-vector equation.
    """
    k = _tabulated(kappa)
    if k is None:
        raise KappaNotTabulated(f"no table entry for kappa={kappa!r}")
    _check_x(x)
    if which == "annulus_table2_ER":
        return _table2(r, x, k, ctl)
    if which == "degenerate_table1":
        return _table1(x, k)
    raise ValidationError(f"unknown table {which!r}")


# --- degenerate limit ----------------------------------------------------------------

def hyp2f1_regularized(a, b, c, s, tol=1e-16, max_terms=500000):
    """sum_n (a)_n (b)_n / (n! Gamma(c+n)) s^n for 0 <= s < 1.

    Terms with 1/Gamma(c+n) = 0 are skipped; the tail after the last term is
    bounded through the current term ratio.
    """
    if not 0.0 <= s < 1.0:
        raise ValidationError("series argument must lie in [0, 1)")
    n0 = 0
    if c <= 0 and float(c).is_integer():
        n0 = int(1 - c)
    term = sps.poch(a, n0) * sps.poch(b, n0) / math.factorial(n0) * sps.rgamma(c + n0) * s ** n0
    total = term
    n = n0
    while n < max_terms:
        ratio = (a + n) * (b + n) / ((n + 1.0) * (c + n)) * s
        term *= ratio
        total += term
        n += 1
        rho = abs((a + n) * (b + n) / ((n + 1.0) * (c + n)) * s)
        if term == 0.0 or (rho < 1.0 and abs(term) * rho / (1.0 - rho) <= tol * abs(total)):
            return total
    raise HypergeometricNonConvergent(f"2F1 series not converged in {max_terms} terms (s={s!r})")


def z_infinity(x, kappa):
    """Degenerate partition function Z_inf(x).

    cos^(2/k-1)(x/4) sin^(1-6/k)(x/4) 2F1~(1/2, 1-4/k; 3/2-4/k; -tan^2(x/4)),
    evaluated after the Pfaff transformation as
    cos^(2/k)(x/4) sin^(1-6/k)(x/4) 2F1~(1/2, 1/2; 3/2-4/k; sin^2(x/4)).
    """
    if not kappa > 0:
        raise ValidationError("kappa must be positive")
    _check_x(x)
    u = 0.25 * x
    cu, su = math.cos(u), math.sin(u)
    f = hyp2f1_regularized(0.5, 0.5, 1.5 - 4.0 / kappa, su * su)
    return cu ** (2.0 / kappa) * su ** (1.0 - 6.0 / kappa) * f


# --- evaluators and residuals --------------------------------------------------------

@dataclass(frozen=True)
class PartitionEvaluator:
    method: str
    kappa: float
    bc: BoundaryCondition = BoundaryCondition.ER
    qctl: QuadratureControl = field(default_factory=QuadratureControl)

    def __post_init__(self):
        object.__setattr__(self, "bc", BoundaryCondition.parse(self.bc))
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}")
        if self.method == "euler_integral" and not self.kappa > 4:
            raise KappaOutOfRange("euler_integral requires kappa > 4")
        if self.method == "residue" and _int_ratio(self.kappa) is None:
            raise KappaNotResidueCase("residue requires 4/kappa integer")
        if self.method == "closed_form":
            if _tabulated(self.kappa) is None:
                raise KappaNotTabulated("closed_form requires kappa in {4, 2, 4/3, 1}")
            if self.bc is not BoundaryCondition.ER:
                raise ValidationError("tabulated annulus entries are for ER only")

    def __call__(self, r, x):
        if self.method == "euler_integral":
            return partition_euler(self.bc, r, x, 0.0, self.kappa, self.qctl)
        if self.method == "residue":
            return partition_residue(self.bc, r, x, self.kappa)
        if self.method == "closed_form":
            return partition_closed_form(r, x, self.kappa)
        return z_infinity(x, self.kappa)


def pde_constant(bc, r, kappa, ctl=None):
    """C(r) of the null-vector equation."""
    bc = BoundaryCondition.parse(bc)
    c = -(6.0 / kappa) * sf.zeta_pi(r, ctl) / math.pi
    if bc is BoundaryCondition.DIRICHLET:
        c += 0.5 / r
    return c


def null_vector_residual(Z, bc, r, x, kappa, h_x=1e-4, h_r=1e-4, ctl=None):
    """Normalized residual of d_r Z = (k/2) Z'' + H Z' + (3/k - 1/2) H' Z + C(r) Z.

    ``Z`` is any callable ``(r, x) -> float``; derivatives are central
    differences and the scale is |Z| + |Z'| + |Z''|.
    """
    z0 = Z(r, x)
    zp, zm = Z(r, x + h_x), Z(r, x - h_x)
    d1 = (zp - zm) / (2 * h_x)
    d2 = (zp - 2 * z0 + zm) / h_x ** 2
    dr = (Z(r + h_r, x) - Z(r - h_r, x)) / (2 * h_r)
    h, hp = (v.real for v in sf.loewner_kernel_jet(r, float(x), 1, ctl))
    rhs = 0.5 * kappa * d2 + h * d1 + (3.0 / kappa - 0.5) * hp * z0 + pde_constant(bc, r, kappa, ctl) * z0
    return abs(dr - rhs) / (abs(z0) + abs(d1) + abs(d2))


def degenerate_ode_residual(Zinf, x, kappa, h_x=1e-3):
    """Normalized residual of (k/2) Z'' + cot(x/2) Z' + (3/k - 1/2) cot(x/2)' Z - Z/(2k).

    Five-point central stencils (fourth order); with h_x = 1e-3 the rounding
    floor sits near 1e-10 instead of the 1e-6 of the three-point rule.
    """
    z0 = Zinf(x)
    zp1, zm1 = Zinf(x + h_x), Zinf(x - h_x)
    zp2, zm2 = Zinf(x + 2 * h_x), Zinf(x - 2 * h_x)
    d1 = (8 * (zp1 - zm1) - (zp2 - zm2)) / (12 * h_x)
    d2 = (16 * (zp1 + zm1) - (zp2 + zm2) - 30 * z0) / (12 * h_x ** 2)
    c = 1.0 / math.tan(0.5 * x)
    cp = -0.5 * (1.0 + c * c)
    res = 0.5 * kappa * d2 + c * d1 + (3.0 / kappa - 0.5) * cp * z0 - z0 / (2.0 * kappa)
    return abs(res) / (abs(z0) + abs(d1) + abs(d2))
