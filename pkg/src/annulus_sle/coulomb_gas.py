"""Charges, Coulomb gas correlators, one-leg partition functions and drifts.

Points live in the identity chart of the cylinder of modulus ``r``.  A force
point ``q`` is on the outer boundary when ``Im q == 0`` and on the inner one
when ``Im q == r``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import special_fn as sf
from .correlations import BoundaryCondition
from .errors import (
    BoundaryRenormalizationRequired,
    BranchTrackingError,
    CoincidentPoints,
    NeutralityViolation,
    ValidationError,
)

NEUTRALITY_TOL = 1e-12
BOUNDARY_TOL = 1e-12
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class SleParams:
    kappa: float

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValidationError("kappa must be positive and finite")

    @property
    def a(self):
        return math.sqrt(2.0 / self.kappa)

    @property
    def b(self):
        return math.sqrt(self.kappa / 8.0) - math.sqrt(2.0 / self.kappa)

    @property
    def central_charge(self):
        return 1.0 - 12.0 * self.b ** 2

    @property
    def h12(self):
        return (6.0 - self.kappa) / (2.0 * self.kappa)


@dataclass(frozen=True)
class DoubleDivisor:
    """Charges (sigma_j, sigma_star_j) at distinct points z_j, neutral overall."""

    entries: tuple

    def __post_init__(self):
        ent = tuple((complex(z), float(s), float(ss)) for z, s, ss in self.entries)
        object.__setattr__(self, "entries", ent)
        pts = [e[0] for e in ent]
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if abs(pts[i] - pts[j]) < 1e-12:
                    raise CoincidentPoints("divisor points must be distinct")
        total = sum(s + ss for _, s, ss in ent)
        if abs(total) > NEUTRALITY_TOL:
            raise NeutralityViolation(f"sum of charges is {total!r}, expected 0")

    @classmethod
    def from_json(cls, obj):
        """Parse ``{"points": [{"re":..,"im":..,"sigma":..,"sigma_star":..}]}``."""
        try:
            pts = obj["points"]
            return cls(tuple(
                (complex(p["re"], p.get("im", 0.0)), p["sigma"], p.get("sigma_star", 0.0))
                for p in pts
            ))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed divisor JSON: {exc}") from None

    def to_json(self):
        return {"points": [
            {"re": z.real, "im": z.imag, "sigma": s, "sigma_star": ss}
            for z, s, ss in self.entries
        ]}


@dataclass(frozen=True)
class ForceDivisor:
    """Force points q_j with charges beta_j and seed charge ``seed`` at p.

    Neutrality ``seed + sum(beta) == 0`` is enforced unless ``strict`` is
    False (used only for negative controls).
    """

    points: tuple
    betas: tuple
    seed: float
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        pts = tuple(complex(q) for q in self.points)
        bet = tuple(float(b) for b in self.betas)
        if len(pts) != len(bet):
            raise ValidationError("points and betas differ in length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "betas", bet)
        if self.strict and abs(self.total_charge) > NEUTRALITY_TOL:
            raise NeutralityViolation(f"a + sum(beta) = {self.total_charge!r}, expected 0")

    @property
    def total_charge(self):
        return float(self.seed) + math.fsum(self.betas)

    @classmethod
    def single(cls, q, params, beta=None):
        """One force point carrying -a (or ``beta``; then neutrality is not enforced)."""
        if beta is None:
            return cls((q,), (-params.a,), params.a)
        return cls((q,), (beta,), params.a, strict=False)

    @classmethod
    def parse(cls, spec, params, strict=True):
        """Parse ``"q:beta,q:beta"``; q may be complex, e.g. ``1+2j``."""
        pts, bet = [], []
        for item in filter(None, (s.strip() for s in spec.split(","))):
            try:
                q, beta = item.rsplit(":", 1)
                pts.append(complex(q.replace(" ", "")))
                bet.append(float(beta))
            except ValueError:
                raise ValidationError(f"cannot parse force point {item!r}") from None
        return cls(tuple(pts), tuple(bet), params.a, strict=strict)

    def boundary_side(self, r):
        """'outer' / 'inner' per point; raise for interior points."""
        sides = []
        for q in self.points:
            if abs(q.imag) <= BOUNDARY_TOL:
                sides.append("outer")
            elif abs(q.imag - r) <= BOUNDARY_TOL * max(1.0, r):
                sides.append("inner")
            else:
                raise ValidationError(f"force point {q!r} is not on a boundary component of C_{r}")
        return sides


def conformal_dimension(sigma, params):
    return sigma * sigma / 2.0 - params.b * sigma


def _cpow(base, expo):
    """Principal branch base**expo, with exponent 0 giving exactly 1."""
    if expo == 0:
        return 1.0 + 0j
    return complex(np.exp(expo * np.log(complex(base))))


def coulomb_correlator(bc, r, dd, params=None, ctl=None):
    """Coulomb gas correlation function in the identity chart (w' = 1).

    Products are taken in the order of ``dd.entries`` with principal
    powers; permuting the entries changes the value only by a phase.
    """
    bc = BoundaryCondition.parse(bc)
    f = sf.theta if bc is BoundaryCondition.ER else sf.theta_tilde
    ent = dd.entries
    for z, s, ss in ent:
        if not -BOUNDARY_TOL <= z.imag <= r + BOUNDARY_TOL:
            raise ValidationError(f"point {z!r} outside the cylinder")
        on_bdry = z.imag <= BOUNDARY_TOL or z.imag >= r - BOUNDARY_TOL
        if on_bdry and s * ss != 0:
            raise BoundaryRenormalizationRequired(
                f"boundary point {z!r} carries sigma*sigma_star != 0")
    expo0 = 0.5 * sum(s * s + ss * ss for _, s, ss in ent)
    val = _cpow(sf.theta_prime0(r, ctl), expo0)
    for z, s, ss in ent:
        if s * ss:
            val *= _cpow(f(r, z - z.conjugate(), ctl), s * ss)
    for j in range(len(ent)):
        zj, sj, ssj = ent[j]
        for k in range(j + 1, len(ent)):
            zk, sk, ssk = ent[k]
            for arg, e in (
                (zj - zk, sj * sk),
                (zj.conjugate() - zk, ssj * sk),
                (zj - zk.conjugate(), sj * ssk),
                (zj.conjugate() - zk.conjugate(), ssj * ssk),
            ):
                if e:
                    val *= _cpow(f(r, arg, ctl), e)
    return val


def _check_p(p, force, r):
    if abs(complex(p).imag) > BOUNDARY_TOL:
        raise ValidationError("seed point p must be real")
    for q, side in zip(force.points, force.boundary_side(r)):
        if side == "outer" and sf.lattice_distance(r, p - q) < 1e-9:
            raise CoincidentPoints(f"p={p!r} coincides with force point {q!r} mod 2 pi")


def one_leg_partition(bc, r, p, force, params, ctl=None):
    """Z_beta(p, q) for force points on the boundary (constant fixed to Theta'(0) power).

    Dirichlet: C |Theta~(p-q_j)|^(a b_j) prod |Theta~(q_j-q_k)|^(b_j b_k).
    ER:        C |Theta(p-q_j)|^(a b_j) prod |Theta(q_j-q_k) Theta(q_j-conj q_k)|^(b_j b_k/2).
    """
    bc = BoundaryCondition.parse(bc)
    p = float(np.real(p))
    _check_p(p, force, r)
    a = params.a
    pts, bet = force.points, force.betas
    logz = (a * a / 2.0 + 0.5 * sum(b * b for b in bet)) * math.log(sf.theta_prime0(r, ctl))
    if bc is BoundaryCondition.DIRICHLET:
        for q, b in zip(pts, bet):
            logz += a * b * math.log(abs(sf.theta_tilde(r, p - q, ctl)))
        for j in range(len(pts)):
            for k in range(j + 1, len(pts)):
                logz += bet[j] * bet[k] * math.log(abs(sf.theta_tilde(r, pts[j] - pts[k], ctl)))
    else:
        for q, b in zip(pts, bet):
            logz += a * b * math.log(abs(sf.theta(r, p - q, ctl)))
        for j in range(len(pts)):
            for k in range(j + 1, len(pts)):
                t = sf.theta(r, pts[j] - pts[k], ctl) * sf.theta(r, pts[j] - pts[k].conjugate(), ctl)
                logz += 0.5 * bet[j] * bet[k] * math.log(abs(t))
    return math.exp(logz)


def drift_lambda(bc, r, xi, force, params, ctl=None):
    """Lambda_beta(xi, q) = kappa d/dxi log Z_beta, in closed form."""
    bc = BoundaryCondition.parse(bc)
    sides = force.boundary_side(r)
    pref = math.sqrt(params.kappa / 2.0)
    total = 0j
    for q, b, side in zip(force.points, force.betas, sides):
        if bc is BoundaryCondition.DIRICHLET:
            total += b * sf.loewner_kernel_Htilde(r, xi - q, ctl)
        elif side == "outer":
            total += b * sf.loewner_kernel_H(r, xi - q.real, ctl)
        else:
            total += b * sf.loewner_kernel_HI(r, xi - q.real, ctl)
    total *= pref
    if abs(total.imag) > IMAG_TOL * max(1.0, abs(total.real)):
        raise ValidationError(f"drift has imaginary part {total.imag!r}")
    return float(total.real)


def drift_lambda_bulk(r, z, points, betas, params, ctl=None):
    """Dirichlet drift with interior charges: sqrt(kappa/2) sum beta_j H~(z - z_j)."""
    pref = math.sqrt(params.kappa / 2.0)
    return pref * sum(b * sf.loewner_kernel_Htilde(r, z - zj, ctl) for zj, b in zip(points, betas))


# --- continuous branch of arg Theta -------------------------------------------------

def arg_theta(r, w, tilde=False, tol=1e-17):
    """Continuous branch of arg Theta(r, w) (or arg Theta~) off the real lattice rows.

    On ``-2r < Im w < 0`` the product formula
    ``Theta = 2 e^{-r/4} sin(w/2) prod (1-e^{-2nr})(1-e^{-2nr} e^{iw})(1-e^{-2nr} e^{-iw})``
    has every factor in a half-plane, giving a single-valued arg; the upper
    strip is reached by oddness.  Defined up to the same additive constant
    everywhere, continuous jointly in (r, w).
    """
    w = np.asarray(w, dtype=complex)
    lower = w.imag < 0
    if np.any((w.imag == 0) | (np.abs(w.imag) >= 2 * r)):
        raise BranchTrackingError("argument on a lattice row; arg branch undefined")
    u = np.where(lower, w, -w)
    out = -0.5 * np.pi + 0.5 * u.real + np.angle(1.0 - np.exp(-1j * u))
    qn = math.exp(-2.0 * r)
    pw = qn
    while True:
        t1 = pw * np.exp(1j * u)
        t2 = pw * np.exp(-1j * u)
        out = out + np.angle(1.0 - t1) + np.angle(1.0 - t2)
        if np.max(np.abs(t1), initial=0.0) < tol and np.max(np.abs(t2), initial=0.0) < tol:
            break
        pw *= qn
    out = np.where(lower, out, out + np.pi)
    if tilde:
        out = out + w.real * w.imag / (2.0 * r)
    return out if out.ndim else float(out)


def tracked_arg(func, z_start, z_end, max_doublings=16):
    """arg func along the segment [z_start, z_end], principal at z_start.

    The segment is subdivided until consecutive increments are below pi/2.
    """
    n = 16
    for _ in range(max_doublings):
        t = np.linspace(0.0, 1.0, n + 1)
        vals = np.asarray(func(z_start + (z_end - z_start) * t), dtype=complex)
        if np.any(vals == 0):
            raise BranchTrackingError("path crosses a zero")
        inc = np.angle(vals[1:] / vals[:-1])
        if np.max(np.abs(inc)) < 0.5 * np.pi:
            return float(np.angle(vals[0]) + inc.sum())
        n *= 2
    raise BranchTrackingError("could not resolve arg increments along the path")


def _insertion_terms(bc, r, z, p, force):
    """(coefficient, argument, tilde) triples whose weighted args sum to the insertion."""
    a = force.seed
    tilde = bc is BoundaryCondition.DIRICHLET
    terms = [(2.0 * a, p - z)]
    for q, b in zip(force.points, force.betas):
        if tilde:
            terms.append((2.0 * b, q - z))
        else:
            terms.append((b, q - z))
            terms.append((b, q.conjugate() - z))
    return terms, tilde


def insertion_one_point(bc, r, z, p, force, params=None, method="product", ctl=None):
    """Mean of the inserted boson, E Phi_hat(z), in the identity chart.

    Dirichlet: 2a arg Theta~(p - z) + 2 sum beta_j arg Theta~(q_j - z)
    ER:        2a arg Theta(p - z) + sum beta_j arg[Theta(q_j - z) Theta(conj q_j - z)]

    ``method="product"`` uses the closed-form branch of :func:`arg_theta`;
    ``method="track"`` continues the principal value at the anchor
    ``pi + i r/2`` along a straight segment.  The two differ by a constant.
    """
    bc = BoundaryCondition.parse(bc)
    z = complex(z)
    if not 0 < z.imag < r:
        raise ValidationError("z must be interior")
    force.boundary_side(r)
    terms, tilde = _insertion_terms(bc, r, z, p, force)
    if method == "product":
        return float(sum(c * arg_theta(r, w, tilde) for c, w in terms))
    if method != "track":
        raise ValidationError(f"unknown method {method!r}")
    f = sf.theta_tilde if tilde else sf.theta
    anchor = complex(math.pi, r / 2.0)
    total = 0.0
    for c, w in terms:
        shift = w + z  # w = shift - z
        total += c * tracked_arg(lambda zz: f(r, shift - zz, ctl), anchor, z)
    return total


def observable_drift_coefficient(bc, r, w, params, force, ctl=None):
    """(a + sum beta_j) (K^2/2 + K')(w): drift prefactor of the one-point observable.

    K is H for ER and H~ = H + w/r for Dirichlet; ``w`` is the image of the
    observation point in the moving chart.
    """
    bc = BoundaryCondition.parse(bc)
    w = complex(w)
    h, hp = sf.loewner_kernel_jet(r, w, 1, ctl)
    h, hp = complex(h), complex(hp)
    if bc is BoundaryCondition.DIRICHLET:
        h, hp = h + w / r, hp + 1.0 / r
    return force.total_charge * (0.5 * h * h + hp)
