"""Covering-strip annulus Loewner flow and the SLE(kappa, Lambda) driver.

Tracked points follow ``dz/dt = H(r0 - t, z - xi_t)`` with an explicit RK4
step (driver frozen over the step); the driver follows Euler-Maruyama,
``xi += sqrt(kappa dt) N(0,1) + Lambda dt``.
"""
import copy
from dataclasses import dataclass, field
import math

import numpy as np

from . import _backend
from . import coulomb_gas as cg
from . import special_fn as sf
from .correlations import BoundaryCondition
from .errors import (
    ForcePointSwallowed,
    ReverseFlowDiverged,
    Swallowed,
    ValidationError,
)

BOUNDARY_SNAP_TOL = 1e-8


def make_rng(seed, path_index=0):
    """PCG64 stream for path ``path_index`` of run ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(path_index),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class DriverConfig:
    kappa: float = 0.0
    drift: object = None  # callable (r_remaining, xi, force_images) -> float
    dt: float = 1e-4
    rng_seed: int = 0
    swallow_guard: float = 1e-3
    path_index: int = 0
    track_derivatives: bool = False
    ctl: sf.SeriesControl = field(default_factory=sf.SeriesControl)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if self.kappa < 0:
            raise ValidationError("kappa must be non-negative")
        if not self.swallow_guard > 0:
            raise ValidationError("swallow_guard must be positive")


@dataclass
class LoewnerState:
    t: float
    xi: float
    tracked: dict
    force_images: tuple
    r0: float
    force_sides: tuple = ()
    history: list = field(default_factory=list)  # driver value on each completed step
    derivatives: dict = field(default_factory=dict)
    rng: object = None

    @property
    def r(self):
        return self.r0 - self.t

    def copy(self):
        return copy.deepcopy(self)


def initial_state(r0, p, points=None, force_points=(), cfg=None):
    """State at t = 0 with driver ``p``.

    ``points`` maps labels to initial positions (a list is labelled by index).
    """
    cfg = cfg or DriverConfig()
    if points is None:
        points = {}
    elif not isinstance(points, dict):
        points = {i: z for i, z in enumerate(points)}
    tracked = {k: complex(v) for k, v in points.items()}
    for k, z in tracked.items():
        if not -1e-12 <= z.imag <= r0 + 1e-12:
            raise ValidationError(f"tracked point {k!r} outside the strip")
    sides = []
    for q in force_points:
        q = complex(q)
        if abs(q.imag) <= 1e-12:
            sides.append("outer")
        elif abs(q.imag - r0) <= 1e-12 * max(1.0, r0):
            sides.append("inner")
        else:
            raise ValidationError(f"force point {q!r} not on the boundary")
    derivs = {k: 1.0 + 0j for k in tracked} if cfg.track_derivatives else {}
    return LoewnerState(
        t=0.0, xi=float(p), tracked=tracked,
        force_images=tuple(complex(q) for q in force_points), r0=float(r0),
        force_sides=tuple(sides), derivatives=derivs,
        rng=make_rng(cfg.rng_seed, cfg.path_index),
    )


def _near_driver(z, xi, guard):
    return np.abs(np.sin(0.5 * (np.asarray(z) - xi))) < guard


def _deriv_step(g, d, xi, r, dt, ctl):
    """RK4 for the pair (g, g') with d g'/dt = H'(r - t, g - xi) g'."""
    def rhs(gg, dd, rr):
        h, hp = sf.loewner_kernel_jet(rr, gg - xi, 1, ctl)
        return complex(h), complex(hp) * dd
    h = 0.5 * dt
    a1, b1 = rhs(g, d, r)
    a2, b2 = rhs(g + h * a1, d + h * b1, r - h)
    a3, b3 = rhs(g + h * a2, d + h * b2, r - h)
    a4, b4 = rhs(g + dt * a3, d + dt * b3, r - dt)
    return (g + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4),
            d + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4))


def _snap_force(images, sides, r_new):
    out = []
    for q, side in zip(images, sides):
        target = 0.0 if side == "outer" else r_new
        if abs(q.imag - target) > BOUNDARY_SNAP_TOL:
            raise ValidationError(f"force image left its boundary (Im={q.imag!r})")
        out.append(complex(q.real, target))
    return tuple(out)


def advance(state, cfg, n_steps=1):
    """Advance ``n_steps`` steps of size ``cfg.dt``; returns a new state.

    Raises :class:`Swallowed` / :class:`ForcePointSwallowed` carrying the last
    state before the offending step.
    """
    if state.t + n_steps * cfg.dt >= state.r0:
        raise ValidationError("requested time reaches the modulus r0")
    st = state.copy()
    labels = list(st.tracked)
    nt = len(labels)
    sqk = math.sqrt(cfg.kappa * cfg.dt)
    for _ in range(n_steps):
        r = st.r
        pts = np.array([st.tracked[k] for k in labels] + list(st.force_images), dtype=complex)
        if pts.size:
            new, ok = _backend.rk4_step(pts, st.xi, r, cfg.dt, cfg.ctl.abs_tol, cfg.ctl.max_terms)
            new = np.asarray(new)
        else:
            new = pts
        noise = st.rng.standard_normal() if cfg.kappa > 0 else 0.0
        lam = cfg.drift(r, st.xi, st.force_images) if cfg.drift is not None else 0.0
        xi_new = st.xi + sqk * noise + lam * cfg.dt
        bad = np.flatnonzero(~np.isfinite(new) | _near_driver(new, xi_new, cfg.swallow_guard))
        if bad.size:
            i = int(bad[0])
            if i < nt:
                raise Swallowed(labels[i], st)
            raise ForcePointSwallowed(i - nt, st)
        r_new = r - cfg.dt
        if cfg.track_derivatives:
            for k in labels:
                _, st.derivatives[k] = _deriv_step(st.tracked[k], st.derivatives[k], st.xi, r, cfg.dt, cfg.ctl)
        st.tracked = {k: complex(new[i]) for i, k in enumerate(labels)}
        st.force_images = _snap_force([complex(v) for v in new[nt:]], st.force_sides, r_new)
        st.history.append(st.xi)
        st.xi = float(xi_new)
        st.t += cfg.dt
    return st


def _reverse_segment(w, xi, r_end, dt, max_sub=10 ** 6):
    """Integrate dw/ds = -H(r_end + s, w - xi) for s in [0, dt] with adaptive RK4.

    ``r_end`` is the modulus at the later time of the step.
    """
    s = 0.0
    n = 0
    while s < dt:
        h0 = complex(_backend.loewner_h(r_end + s, np.array([w - xi]), 1e-15, 200)[0][0])
        scale = 2.0 * abs(math.sin(0.5 * (w - xi).real)) + abs((w - xi).imag)
        step = min(dt - s, 0.05 * max(scale, 1e-12) / max(abs(h0), 1e-300))
        hh = 0.5 * step
        k1 = -h0
        k2 = -_backend.loewner_h(r_end + s + hh, np.array([w + hh * k1 - xi]), 1e-15, 200)[0][0]
        k3 = -_backend.loewner_h(r_end + s + hh, np.array([w + hh * k2 - xi]), 1e-15, 200)[0][0]
        k4 = -_backend.loewner_h(r_end + s + step, np.array([w + step * k3 - xi]), 1e-15, 200)[0][0]
        w = w + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        s += step
        n += 1
        if n > max_sub or not np.isfinite(w):
            raise ReverseFlowDiverged("reverse Loewner flow did not converge")
    return complex(w)


def trace_point(state, cfg, eps=1e-3):
    """Approximate gamma_t by flowing xi_t + i eps backwards to time 0."""
    w = complex(state.xi, eps)
    n = len(state.history)
    for k in range(n - 1, -1, -1):
        r_end = state.r0 - (k + 1) * cfg.dt
        w = _reverse_segment(w, state.history[k], r_end, cfg.dt)
    if not (np.isfinite(w) and -1e-9 <= w.imag <= state.r0 + 1e-9):
        raise ReverseFlowDiverged(f"trace point {w!r} left the strip")
    return w


@dataclass
class TraceSample:
    times: list
    gamma: list
    xi: list
    stop_reason: str = "completed"


def sle_drift(bc, kappa, force, ctl=None):
    """Lambda(r, xi, force_images) from the one-leg partition function of ``force``."""
    bc = BoundaryCondition.parse(bc)
    params = cg.SleParams(kappa)

    def drift(r, xi, images):
        fd = cg.ForceDivisor(images, force.betas, force.seed, strict=force.strict)
        return cg.drift_lambda(bc, r, xi, fd, params, ctl)

    return drift


def run_sle(bc, r0, kappa, p, force, T, cfg=None, points=None,
            snapshot_stride=100, trace_stride=100, eps=1e-3):
    """Simulate one annulus SLE(kappa, Lambda) path up to time T.

    Returns ``(TraceSample, snapshots)``; the trace sample carries the stop
    reason when a point or force point is swallowed first.
    """
    if not 0 < T < r0:
        raise ValidationError("need 0 < T < r0")
    cfg = cfg or DriverConfig()
    cfg = copy.copy(cfg)
    cfg.kappa = float(kappa)
    # at kappa = 0 the drift sqrt(kappa/2) sum beta H vanishes
    if force is not None and force.points and kappa > 0:
        cfg.drift = sle_drift(bc, kappa, force, cfg.ctl)
    qs = force.points if force is not None else ()
    state = initial_state(r0, p, points, qs, cfg)
    n_total = int(round(T / cfg.dt))
    if n_total * cfg.dt >= r0:
        n_total -= 1
    sample = TraceSample([0.0], [complex(p, 0.0)], [float(p)])
    snapshots = [state.copy()]
    done = 0
    while done < n_total:
        chunk = min(trace_stride, n_total - done)
        try:
            state = advance(state, cfg, chunk)
        except Swallowed as exc:
            sample.stop_reason = f"{type(exc).__name__}:{exc.label}"
            if exc.state is not None:
                snapshots.append(exc.state)
            break
        done += chunk
        sample.times.append(state.t)
        sample.xi.append(state.xi)
        sample.gamma.append(trace_point(state, cfg, eps))
        if done % snapshot_stride == 0 or done == n_total:
            snapshots.append(state.copy())
    return sample, snapshots


# --- vectorized ensemble stepping -----------------------------------------------------

def ensemble_step(points, xi, r, dt, ctl=None):
    """RK4-advance ``points`` (n_paths, n_pts) with per-path drivers ``xi``."""
    ctl = ctl or sf.DEFAULT_CONTROL
    pts = np.asarray(points, dtype=complex)
    flat = pts.reshape(-1)
    drivers = np.repeat(np.asarray(xi, dtype=float), pts.shape[1])
    new, ok = _backend.rk4_step(flat, drivers, r, dt, ctl.abs_tol, ctl.max_terms)
    if not ok:
        raise ValidationError("theta series failed to converge during the flow")
    return np.asarray(new).reshape(pts.shape)
