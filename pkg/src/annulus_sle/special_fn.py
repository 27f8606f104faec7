"""Theta functions of the cylinder, the annulus Loewner kernel and zeta.

Conventions (all in the covering strip of modulus ``r``)::

    Theta(r, z)   = (1/i) sum_n (-1)^n exp(-r (n+1/2)^2) exp(i (n+1/2) z)
    Theta_I(r, z) = sum_n (-1)^n exp(-r n^2) exp(i n z)
    Theta~(r, z)  = Theta(r, z) exp(z^2 / 4r)
    H(r, z)       = 2 Theta'(r, z) / Theta(r, z)

Every function accepts a scalar or an array ``z`` and returns the same
shape.  Derivatives are term-wise; no finite differences are used here.
"""
from dataclasses import dataclass
from math import comb

import numpy as np

from . import _backend
from .errors import NonConvergent, OutOfRange, PoleProximity, ValidationError

R_MIN = 0.3
POLE_GUARD = 1e-9
KINDS = ("plain", "I", "tilde")


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for the theta series.

    A paired term is the last one summed when its magnitude bound drops
    below ``abs_tol`` times the larger of the partial sum and the largest
    term seen, and the bound is already decreasing.
    """

    abs_tol: float = 1e-15
    max_terms: int = 200
    r_min: float = R_MIN

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValidationError("abs_tol must be positive")
        if self.max_terms < 8:
            raise ValidationError("max_terms must be at least 8")
        if not self.r_min > 0:
            raise ValidationError("r_min must be positive")


DEFAULT_CONTROL = SeriesControl()


def _ctl(ctl):
    return DEFAULT_CONTROL if ctl is None else ctl


def check_modulus(r, ctl=None):
    ctl = _ctl(ctl)
    if not np.isfinite(r) or r < ctl.r_min:
        raise OutOfRange(f"modulus r={r!r} below supported floor {ctl.r_min}")


def _as_array(z):
    za = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(za)):
        raise ValidationError("z must be finite")
    return za


def _restore(za, out):
    if za.ndim == 0:
        return complex(out.reshape(()))
    return out.reshape(za.shape)


def _jet(r, z, kind, nder, ctl):
    """Raw jet for kind 0 (Theta) or 1 (Theta_I); shape (nder+1,) + z.shape."""
    ctl = _ctl(ctl)
    check_modulus(r, ctl)
    za = _as_array(z)
    flat = za.reshape(-1)
    if flat.size == 0:
        return np.zeros((nder + 1,) + za.shape, dtype=complex)
    jet, used = _backend.theta_jet(float(r), flat, kind, nder, ctl.abs_tol, ctl.max_terms)
    if used < 0:
        raise NonConvergent(f"theta series did not converge within {ctl.max_terms} terms")
    return np.asarray(jet).reshape((nder + 1,) + za.shape)


def lattice_distance(r, z, shift=0.0):
    """Distance from ``z`` to the lattice ``shift + 2 pi Z + 2 i r Z``."""
    w = np.asarray(z, dtype=complex) - shift
    m = np.round(w.real / (2 * np.pi))
    n = np.round(w.imag / (2 * r))
    return np.abs(w - 2 * np.pi * m - 2j * r * n)


def _guard(r, z, pole_guard, shift=0.0):
    if np.any(lattice_distance(r, z, shift) < pole_guard):
        raise PoleProximity(f"argument within {pole_guard:g} of a pole")


def theta(r, z, ctl=None):
    return _restore(np.asarray(z), _jet(r, z, 0, 0, ctl)[0])


def theta_I(r, z, ctl=None):
    return _restore(np.asarray(z), _jet(r, z, 1, 0, ctl)[0])


def _gauss_factor_derivs(r, z, order):
    """d^j/dz^j exp(z^2/4r) for j = 0..order, as a list of arrays."""
    # g^(j) = P_j(z) g with P_{j+1} = P_j' + z/(2r) P_j
    g = np.exp(z * z / (4.0 * r))
    poly = np.polynomial.Polynomial([1.0])
    step = np.polynomial.Polynomial([0.0, 1.0 / (2.0 * r)])
    out = []
    for _ in range(order + 1):
        out.append(poly(z) * g)
        poly = poly.deriv() + step * poly
    return out


def theta_tilde(r, z, ctl=None):
    za = _as_array(z)
    return _restore(za, _jet(r, za, 0, 0, ctl)[0] * np.exp(za * za / (4.0 * r)))


def theta_jet(r, z, order, kind="plain", ctl=None):
    """Array of derivatives 0..order of the chosen theta function."""
    if kind not in KINDS:
        raise ValidationError(f"kind must be one of {KINDS}")
    za = _as_array(z)
    if kind == "plain":
        return _jet(r, za, 0, order, ctl)
    if kind == "I":
        return _jet(r, za, 1, order, ctl)
    base = _jet(r, za, 0, order, ctl)
    gauss = _gauss_factor_derivs(r, za, order)
    out = np.zeros_like(base)
    for k in range(order + 1):
        for j in range(k + 1):
            out[k] += comb(k, j) * base[k - j] * gauss[j]
    return out


def theta_deriv(r, z, order, kind="plain", ctl=None):
    """``order``-th z-derivative (1..4) of Theta, Theta_I or Theta~."""
    if order not in (1, 2, 3, 4):
        raise ValidationError("order must be in 1..4")
    return _restore(np.asarray(z), theta_jet(r, z, order, kind, ctl)[order])


def log_derivatives(jet, order):
    """Derivatives 1..order of log f from the jet (f, f', f'', ...)."""
    f0 = jet[0]
    u1 = jet[1] / f0
    out = [u1]
    if order >= 2:
        u2 = jet[2] / f0
        out.append(u2 - u1 * u1)
    if order >= 3:
        u3 = jet[3] / f0
        out.append(u3 - 3.0 * u2 * u1 + 2.0 * u1 ** 3)
    if order >= 4:
        raise ValidationError("log derivatives implemented up to order 3")
    return out


def loewner_kernel_jet(r, z, order=0, ctl=None, pole_guard=POLE_GUARD):
    """[H, H', ..., H^(order)] at z, order <= 2."""
    za = _as_array(z)
    _guard(r, za, pole_guard)
    ld = log_derivatives(_jet(r, za, 0, order + 1, ctl), order + 1)
    return [2.0 * d for d in ld]


def loewner_kernel_H(r, z, ctl=None, pole_guard=POLE_GUARD):
    za = _as_array(z)
    return _restore(za, loewner_kernel_jet(r, za, 0, ctl, pole_guard)[0])


def loewner_kernel_H_deriv(r, z, order=1, ctl=None, pole_guard=POLE_GUARD):
    za = _as_array(z)
    return _restore(za, loewner_kernel_jet(r, za, order, ctl, pole_guard)[order])


def loewner_kernel_HI(r, z, ctl=None, pole_guard=POLE_GUARD):
    """H_I(r, z) = H(r, z + ir) + i, evaluated as 2 Theta_I' / Theta_I."""
    za = _as_array(z)
    _guard(r, za, pole_guard, shift=1j * r)
    jet = _jet(r, za, 1, 1, ctl)
    return _restore(za, 2.0 * jet[1] / jet[0])


def loewner_kernel_Htilde(r, z, ctl=None, pole_guard=POLE_GUARD):
    za = _as_array(z)
    return _restore(za, loewner_kernel_jet(r, za, 0, ctl, pole_guard)[0] + za / r)


def zeta_pi(r, ctl=None):
    """zeta_r(pi) = 2 pi (1/24 - 1/4 sum_k sinh(k r)^-2)."""
    ctl = _ctl(ctl)
    check_modulus(r, ctl)
    total = 1.0 / 24.0
    for k in range(1, ctl.max_terms + 1):
        term = 0.25 / np.sinh(k * r) ** 2
        total -= term
        if term < ctl.abs_tol * max(abs(total), 1.0 / 24.0):
            return 2.0 * np.pi * total
    raise NonConvergent("sinh series for zeta_r(pi) did not converge")


def weierstrass_zeta(r, z, ctl=None, pole_guard=POLE_GUARD):
    """Weierstrass zeta with periods (2 pi, 2 i r), via H/2 + zeta_r(pi) z / pi."""
    za = _as_array(z)
    h = loewner_kernel_jet(r, za, 0, ctl, pole_guard)[0]
    return _restore(za, 0.5 * h + zeta_pi(r, ctl) * za / np.pi)


def weierstrass_zeta_deriv(r, z, ctl=None, pole_guard=POLE_GUARD):
    """zeta_r'(z) = H'(z)/2 + zeta_r(pi)/pi  (= -wp(z))."""
    za = _as_array(z)
    hp = loewner_kernel_jet(r, za, 1, ctl, pole_guard)[1]
    return _restore(za, 0.5 * hp + zeta_pi(r, ctl) / np.pi)


def theta_prime0(r, ctl=None):
    """Theta'(r, 0), real and positive."""
    return float(_jet(r, 0.0, 0, 1, ctl)[1].real)
