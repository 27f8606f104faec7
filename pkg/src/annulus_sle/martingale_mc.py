"""Monte Carlo martingale tests for bosonic observables along annulus SLE.

Only the kappa = 4 Dirichlet case is supported: there b = 0, so the
observables are scalars and need no chart factor.  In the moving chart the
seed sits at 0, force points at g~_t(q_j) - xi_t and observation points at
g~_t(z) - xi_t, with modulus r0 - t.
"""
from dataclasses import asdict, dataclass, field
import json
import math

import numpy as np

from . import _backend
from . import coulomb_gas as cg
from . import correlations as corr
from . import loewner as lw
from . import special_fn as sf
from .correlations import BoundaryCondition
from .errors import TooManySwallowed, ValidationError

KINDS = ("one_point_boson", "two_point_boson")
CHECKPOINT_FRACTIONS = (1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0)
Z_THRESHOLD = 3.0
PASS_FRACTION = 0.95
MAX_STOPPED_FRACTION = 0.10


@dataclass(frozen=True)
class ObservableSpec:
    kind: str
    bc: BoundaryCondition
    eval_points: tuple
    params: cg.SleParams
    force: cg.ForceDivisor
    r0: float = 2.0
    p: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "bc", BoundaryCondition.parse(self.bc))
        object.__setattr__(self, "eval_points", tuple(complex(z) for z in self.eval_points))
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}")
        if self.bc is not BoundaryCondition.DIRICHLET:
            raise ValidationError("MC observables are implemented for Dirichlet only")
        if abs(self.params.kappa - 4.0) > 1e-12:
            raise ValidationError("scalar bosonic observables require kappa = 4")
        need = 1 if self.kind == "one_point_boson" else 2
        if len(self.eval_points) != need:
            raise ValidationError(f"{self.kind} needs {need} evaluation point(s)")
        for z in self.eval_points:
            if not 0 < z.imag < self.r0:
                raise ValidationError(f"evaluation point {z!r} is not interior")
        self.force.boundary_side(self.r0)


def _chart(spec, state):
    xi = state.xi
    zs = [state.tracked[i] - xi for i in range(len(spec.eval_points))]
    qs = tuple(q - xi for q in state.force_images)
    return zs, cg.ForceDivisor(qs, spec.force.betas, spec.force.seed, strict=spec.force.strict)


def evaluate_observable(spec, state):
    """M_t for one path state (tracked labels 0.. are the evaluation points)."""
    r = state.r
    zs, fd = _chart(spec, state)
    m = [cg.insertion_one_point(spec.bc, r, z, 0.0, fd, spec.params) for z in zs]
    if spec.kind == "one_point_boson":
        return m[0]
    return m[0] * m[1] + 2.0 * corr.green(spec.bc, r, zs[0], zs[1])


def initial_state(spec, cfg):
    return lw.initial_state(spec.r0, spec.p, list(spec.eval_points), spec.force.points, cfg)


# --- vectorized ensemble -------------------------------------------------------------

def _one_point_values(spec, r, z, q):
    """Vectorized insertion value; z (n,), q (n, m) in the moving chart."""
    tilde = spec.bc is BoundaryCondition.DIRICHLET
    out = 2.0 * spec.force.seed * cg.arg_theta(r, -z, tilde)
    for j, b in enumerate(spec.force.betas):
        out = out + 2.0 * b * cg.arg_theta(r, q[:, j] - z, tilde)
    return np.asarray(out, dtype=float)


def _green_dirichlet(r, u, v):
    num = np.abs(sf.theta(r, u - np.conj(v)))
    den = np.abs(sf.theta(r, u - v))
    return np.log(num / den) - u.imag * v.imag / r


def _observable_values(spec, r, z, q):
    m1 = _one_point_values(spec, r, z[:, 0], q)
    if spec.kind == "one_point_boson":
        return m1
    m2 = _one_point_values(spec, r, z[:, 1], q)
    return m1 * m2 + 2.0 * _green_dirichlet(r, z[:, 0], z[:, 1])


def _drift(spec, r, xi, q, ctl):
    """Lambda = sqrt(kappa/2) sum_j beta_j H~(xi - q_j), vectorized over paths."""
    tot = np.zeros(xi.shape)
    for j, b in enumerate(spec.force.betas):
        w = (xi - q[:, j]).astype(complex)
        h, ok = _backend.loewner_h(r, w, ctl.abs_tol, ctl.max_terms)
        tot += b * (np.real(h) + np.real(w) / r)
    return math.sqrt(spec.params.kappa / 2.0) * tot


def _predicted_rate(spec, r, z, force_total):
    """Ito drift of M_t when neutrality is broken: eps Im (K^2/2 + K')(w), w = -z."""
    w = -z
    h, hp = sf.loewner_kernel_jet(r, w, 1)
    k, kp = h + w / r, hp + 1.0 / r
    return force_total * np.imag(0.5 * k * k + kp)


@dataclass
class MartingaleReport:
    times: list
    mean_increment: list
    std_error: list
    z_scores: list
    n_paths: int = 0
    n_stopped: int = 0
    seed: int = 0
    dt: float = 0.0
    passed: bool = False
    predicted_increment: list = field(default_factory=list)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def csv_rows(self):
        rows = [("t", "mean_increment", "std_error", "z_score")]
        for row in zip(self.times, self.mean_increment, self.std_error, self.z_scores):
            rows.append(row)
        return rows

    @property
    def max_abs_z(self):
        return max(abs(z) for z in self.z_scores[1:])


def checkpoint_steps(T, dt):
    n_total = int(round(T / dt))
    return sorted({max(1, int(round(f * n_total))) for f in CHECKPOINT_FRACTIONS})


def simulate_increments(spec, n_paths, T, dt, seed, drift_shift=0.0, swallow_guard=1e-3,
                        ctl=None, predict=False):
    """Run the ensemble; returns (step indices, increments (n_ck, n_paths), n_stopped, predicted).

    Stopped paths keep the observable value of their last state before the
    guard zone (stopped process).
    """
    ctl = ctl or sf.DEFAULT_CONTROL
    if not 0 < T < spec.r0:
        raise ValidationError("need 0 < T < r0")
    checks = checkpoint_steps(T, dt)
    n_steps = checks[-1]
    npt = len(spec.eval_points)
    nq = len(spec.force.points)
    sides = spec.force.boundary_side(spec.r0)
    # per-path streams, identical to single-path runs with path_index = i
    noise = np.empty((n_paths, n_steps))
    for i in range(n_paths):
        noise[i] = lw.make_rng(seed, i).standard_normal(n_steps)
    xi = np.full(n_paths, float(spec.p))
    pts = np.empty((n_paths, npt + nq), dtype=complex)
    pts[:, :npt] = spec.eval_points
    pts[:, npt:] = spec.force.points
    sqk = math.sqrt(spec.params.kappa * dt)
    m0 = _observable_values(spec, spec.r0, pts[:, :npt] - xi[:, None], pts[:, npt:] - xi[:, None])
    frozen = np.full(n_paths, np.nan)
    active = np.ones(n_paths, dtype=bool)
    pred = np.zeros(n_paths)
    incs, preds = [], []
    t = 0.0
    for k in range(1, n_steps + 1):
        r = spec.r0 - (k - 1) * dt
        if predict:
            pred[active] += dt * _predicted_rate(
                spec, r, pts[active, 0] - xi[active], spec.force.total_charge)
        lam = _drift(spec, r, xi, pts[:, npt:].real, ctl) + drift_shift
        new = lw.ensemble_step(pts, xi, r, dt, ctl)
        xi_new = xi + sqk * noise[:, k - 1] + lam * dt
        r_new = r - dt
        for j, side in enumerate(sides):
            new[:, npt + j] = new[:, npt + j].real + 1j * (0.0 if side == "outer" else r_new)
        bad = active & np.any(
            ~np.isfinite(new) | (np.abs(np.sin(0.5 * (new - xi_new[:, None]))) < swallow_guard), axis=1)
        if np.any(bad):
            idx = np.flatnonzero(bad)
            frozen[idx] = _observable_values(
                spec, r, pts[idx, :npt] - xi[idx, None], pts[idx, npt:] - xi[idx, None])
            active &= ~bad
        pts[active] = new[active]
        xi[active] = xi_new[active]
        t = k * dt
        if k in checks:
            cur = np.array(frozen)
            if np.any(active):
                cur[active] = _observable_values(
                    spec, spec.r0 - t, pts[active, :npt] - xi[active, None],
                    pts[active, npt:] - xi[active, None])
            incs.append(cur - m0)
            preds.append(pred.copy())
    return checks, np.array(incs), int(np.sum(~active)), np.array(preds)


def martingale_test(spec, n_paths, T, dt=1e-4, seed=0, drift_shift=0.0, swallow_guard=1e-3,
                    ctl=None, predict=False):
    """Checkpoint z-scores of E[M_t - M_0].

    PASS iff |z| < 3 on at least 95% of the checkpoints.  The first report
    entry is t = 0, where the increment is 0 by construction.  With
    ``predict`` the increments are compared with the integrated drift
    predicted for broken neutrality instead of with 0.
    """
    if n_paths < 2:
        raise ValidationError("need at least two paths")
    checks, incs, n_stopped, preds = simulate_increments(
        spec, n_paths, T, dt, seed, drift_shift, swallow_guard, ctl, predict)
    if n_stopped > MAX_STOPPED_FRACTION * n_paths:
        raise TooManySwallowed(f"{n_stopped} of {n_paths} paths stopped early")
    times, means, ses, zs, pm = [0.0], [0.0], [0.0], [0.0], [0.0]
    for k, inc, pr in zip(checks, incs, preds):
        d = inc - pr if predict else inc
        mean = float(np.mean(d))
        se = float(np.std(d, ddof=1) / math.sqrt(n_paths))
        times.append(k * dt)
        means.append(float(np.mean(inc)))
        ses.append(se)
        zs.append(mean / se if se > 0 else math.inf)
        pm.append(float(np.mean(pr)))
    ok = sum(abs(z) < Z_THRESHOLD for z in zs[1:])
    return MartingaleReport(
        times=times, mean_increment=means, std_error=ses, z_scores=zs,
        n_paths=n_paths, n_stopped=n_stopped, seed=seed, dt=dt,
        passed=ok >= PASS_FRACTION * (len(zs) - 1), predicted_increment=pm if predict else [],
    )


def default_spec(kind="one_point_boson", r0=2.0, eval_points=None, q=math.pi, beta=None):
    """kappa = 4 Dirichlet setup with seed at 0 and one force point at ``q``.

    ``beta`` other than -a breaks neutrality (negative control).
    """
    params = cg.SleParams(4.0)
    if eval_points is None:
        eval_points = (complex(math.pi, r0 / 2),) if kind == "one_point_boson" else (
            complex(math.pi - 1.0, r0 / 2), complex(math.pi + 1.0, r0 / 2))
    force = cg.ForceDivisor.single(q, params, beta)
    return ObservableSpec(kind, "dirichlet", tuple(eval_points), params, force, r0=r0, p=0.0)
