"""Green's functions and Gaussian free field correlators in the cylinder.

All quantities are evaluated in the identity chart of the cylinder of
modulus ``r`` (points ``z`` with ``0 < Im z < r``, modulo ``2 pi``).
"""
from enum import Enum

import numpy as np

from . import special_fn as sf
from .errors import CoincidentPoints, ValidationError

COINCIDENCE_TOL = 1e-9
MAX_POINTS = 12


class BoundaryCondition(str, Enum):
    ER = "er"
    DIRICHLET = "dirichlet"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown boundary condition {value!r}") from None


def _check_pair(zeta, z):
    if abs(zeta - z) < COINCIDENCE_TOL or abs(zeta - np.conj(z)) < COINCIDENCE_TOL:
        raise CoincidentPoints(f"points {zeta!r} and {z!r} coincide")


def _check_interior(r, *points):
    for p in points:
        if not 0.0 <= np.imag(p) <= r:
            raise ValidationError(f"point {p!r} outside the closed strip 0 <= Im <= {r}")


def green(bc, r, zeta, z, ctl=None):
    """Green's function G_r(zeta, z) for ER or Dirichlet boundary conditions."""
    bc = BoundaryCondition.parse(bc)
    zeta, z = complex(zeta), complex(z)
    _check_interior(r, zeta, z)
    _check_pair(zeta, z)
    num = sf.theta(r, zeta - z.conjugate(), ctl)
    den = sf.theta(r, zeta - z, ctl)
    g = float(np.log(abs(num) / abs(den)))
    if bc is BoundaryCondition.DIRICHLET:
        g -= zeta.imag * z.imag / r
    return g


def gff_two_point(bc, r, zeta, z, ctl=None):
    """E[Phi(zeta) Phi(z)] = 2 G_r(zeta, z)."""
    return 2.0 * green(bc, r, zeta, z, ctl)


def gff_two_point_theta_ratio(bc, r, zeta, z, ctl=None):
    """Same quantity from the displayed |Theta| (ER) or |Theta~| (Dirichlet) ratio."""
    bc = BoundaryCondition.parse(bc)
    zeta, z = complex(zeta), complex(z)
    _check_pair(zeta, z)
    f = sf.theta if bc is BoundaryCondition.ER else sf.theta_tilde
    return 2.0 * float(np.log(abs(f(r, zeta - z.conjugate(), ctl)) / abs(f(r, zeta - z, ctl))))


def perfect_matchings(items):
    """Yield every partition of ``items`` into unordered pairs.

    The first element is paired with each remaining element in turn and the
    rest is matched recursively.
    """
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i, partner in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for tail in perfect_matchings(remaining):
            yield [(first, partner)] + tail


def gff_n_point(bc, r, points, ctl=None):
    """Wick sum over perfect matchings of products of two-point functions."""
    points = [complex(p) for p in points]
    n = len(points)
    if n > MAX_POINTS:
        raise ValidationError(f"at most {MAX_POINTS} points supported")
    for i in range(n):
        for j in range(i + 1, n):
            if abs(points[i] - points[j]) < COINCIDENCE_TOL:
                raise CoincidentPoints("points must be pairwise distinct")
    if n % 2:
        return 0.0
    cov = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            cov[i, j] = cov[j, i] = gff_two_point(bc, r, points[i], points[j], ctl)
    total = 0.0
    for matching in perfect_matchings(range(n)):
        prod = 1.0
        for i, j in matching:
            prod *= cov[i, j]
        total += prod
    return total


def _kernel(bc):
    if bc is BoundaryCondition.ER:
        return sf.loewner_kernel_H
    return sf.loewner_kernel_Htilde


def current_gff(bc, r, zeta, z, ctl=None):
    """E[J(zeta) Phi(z)] with J = d Phi / d zeta."""
    bc = BoundaryCondition.parse(bc)
    zeta, z = complex(zeta), complex(z)
    _check_pair(zeta, z)
    h = _kernel(bc)
    return 0.5 * (h(r, zeta - z.conjugate(), ctl) - h(r, zeta - z, ctl))


def current_current(bc, r, zeta, z, ctl=None):
    """E[J(zeta) J(z)] = H'(zeta - z)/2 (ER) or H~'(zeta - z)/2 (Dirichlet)."""
    bc = BoundaryCondition.parse(bc)
    zeta, z = complex(zeta), complex(z)
    _check_pair(zeta, z)
    hp = sf.loewner_kernel_H_deriv(r, zeta - z, 1, ctl)
    if bc is BoundaryCondition.DIRICHLET:
        hp += 1.0 / r
    return 0.5 * hp


def green_grid(bc, r, zeta, re_values, im_values, ctl=None):
    """Rows (re, im, G(zeta, re + i im)) over a rectangular grid; NaN at zeta."""
    rows = []
    for y in im_values:
        for x in re_values:
            try:
                g = green(bc, r, zeta, complex(x, y), ctl)
            except CoincidentPoints:
                g = float("nan")
            rows.append((float(x), float(y), g))
    return rows
