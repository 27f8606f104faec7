"""Pure numpy implementation of the hot kernels.

Same series, term order and stopping rule as ``_core.pyx``; used when the compiled module is
unavailable or when ``ANNULUS_SLE_PURE=1``.
"""
import numpy as np

# sign and trig selector for d^k/dz^k of sin and cos
_SIN_DERIV = ((1.0, "sin"), (1.0, "cos"), (-1.0, "sin"), (-1.0, "cos"))
_COS_DERIV = ((1.0, "cos"), (-1.0, "sin"), (-1.0, "cos"), (1.0, "sin"))


def theta_jet(r, z, kind, nder, abs_tol, max_terms):
    """Derivatives 0..nder of Theta (kind=0) or Theta_I (kind=1) at points z.

    Parameters
    ----------
    r : float
    z : 1-D complex ndarray
    kind : int
    nder : int
    abs_tol : float
    max_terms : int

    Returns
    -------
    jet : complex ndarray, shape (nder + 1, len(z))
    n_used : int
        Number of paired terms summed; ``-1`` if the stopping rule was not
        met within ``max_terms``.
    """
    z = np.asarray(z, dtype=complex)
    y = np.abs(z.imag)
    jet = np.zeros((nder + 1, z.size), dtype=complex)
    maxb = np.zeros((nder + 1, z.size))
    active = np.ones(z.size, dtype=bool)
    if kind == 1:
        jet[0] += 1.0
        maxb[0] += 1.0
        start = 1
    else:
        start = 0
    table = _SIN_DERIV if kind == 0 else _COS_DERIV
    n = start
    used = 0
    while n < start + max_terms:
        m = n + 0.5 if kind == 0 else float(n)
        sign = -1.0 if n % 2 else 1.0
        w = 2.0 * sign * np.exp(-r * m * m)
        mz = m * z[active]
        s = np.sin(mz)
        c = np.cos(mz)
        ch = np.cosh(m * y[active])
        done = np.ones(mz.size, dtype=bool)
        for k in range(nder + 1):
            fac, which = table[k % 4]
            mk = m ** k
            jet[k, active] += (w * fac * mk) * (s if which == "sin" else c)
            bound = abs(w) * mk * ch
            cur = maxb[k, active]
            np.maximum(cur, bound, out=cur)
            maxb[k, active] = cur
            scale = np.maximum(np.abs(jet[k, active]), cur)
            # next term must also be smaller, i.e. past the peak of the bound
            grow = -r * (2.0 * m + 1.0) + y[active] + k * np.log1p(1.0 / m)
            done &= (bound < abs_tol * scale) & (grow < 0.0)
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        used = n - start + 1
        if not active.any():
            return jet, used
        n += 1
    return jet, -1


def loewner_h(r, z, abs_tol, max_terms):
    jet, used = theta_jet(r, z, 0, 1, abs_tol, max_terms)
    return 2.0 * jet[1] / jet[0], used


def rk4_step(z, xi, r, dt, abs_tol, max_terms):
    """One RK4 step of dz/dt = H(r - t, z - xi) with xi frozen over the step.

    ``r`` is the remaining modulus at the start of the step; z and xi are
    arrays of equal length.
    """
    h = 0.5 * dt
    k1, u1 = loewner_h(r, z - xi, abs_tol, max_terms)
    k2, u2 = loewner_h(r - h, z + h * k1 - xi, abs_tol, max_terms)
    k3, u3 = loewner_h(r - h, z + h * k2 - xi, abs_tol, max_terms)
    k4, u4 = loewner_h(r - dt, z + dt * k3 - xi, abs_tol, max_terms)
    ok = min(u1, u2, u3, u4) >= 0
    return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), ok
