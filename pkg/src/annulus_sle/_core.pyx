# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: theta-series jets and the RK4 Loewner step.

Same stopping rule and term ordering as ``_kernels_py``; the per-term
exponentials are advanced by recurrence rather than recomputed.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, log1p, fmax, sqrt

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)

cnp.import_array()

DEF MAXDER = 8


cdef int _jet_point(double r, double complex z, int kind, int nder,
                    double abs_tol, int max_terms,
                    double complex *out) noexcept nogil:
    # e^{+-imz} and e^{-rm^2} are advanced by recurrence instead of calling
    # complex trig per term; sin and cos are rebuilt from the two exponentials.
    cdef double y = fabs(z.imag)
    cdef double maxb[MAXDER]
    cdef int k, n, start, done, sel
    cdef double m, sign, w, mk, bound, scale, ch, grow, wabs, ratio, rr, ey, ey_step
    cdef double complex s, c, f, g, step_f, step_g, iz
    iz = 1j * z
    for k in range(nder + 1):
        out[k] = 0
        maxb[k] = 0.0
    if kind == 1:
        out[0] = 1.0
        maxb[0] = 1.0
        start = 1
        m = 1.0
    else:
        start = 0
        m = 0.5
    f = cexp(m * iz)
    g = 1.0 / f
    step_f = cexp(iz)
    step_g = 1.0 / step_f
    wabs = exp(-r * m * m)
    ratio = exp(-r * (2.0 * m + 1.0))
    rr = exp(-2.0 * r)
    ey = exp(m * y)
    ey_step = exp(y)
    n = start
    while n < start + max_terms:
        sign = -1.0 if (n % 2) else 1.0
        w = 2.0 * sign * wabs
        s = (f - g) * (-0.5j)
        c = (f + g) * 0.5
        ch = 0.5 * (ey + 1.0 / ey)
        done = 1
        mk = 1.0
        for k in range(nder + 1):
            sel = k % 4
            if kind == 0:
                # d^k sin: sin, cos, -sin, -cos
                if sel == 0:
                    out[k] += (w * mk) * s
                elif sel == 1:
                    out[k] += (w * mk) * c
                elif sel == 2:
                    out[k] -= (w * mk) * s
                else:
                    out[k] -= (w * mk) * c
            else:
                # d^k cos: cos, -sin, -cos, sin
                if sel == 0:
                    out[k] += (w * mk) * c
                elif sel == 1:
                    out[k] -= (w * mk) * s
                elif sel == 2:
                    out[k] -= (w * mk) * c
                else:
                    out[k] += (w * mk) * s
            bound = 2.0 * wabs * mk * ch
            maxb[k] = fmax(maxb[k], bound)
            if done:
                scale = fmax(sqrt(out[k].real * out[k].real + out[k].imag * out[k].imag), maxb[k])
                if not bound < abs_tol * scale:
                    done = 0
                else:
                    grow = -r * (2.0 * m + 1.0) + y + k * log1p(1.0 / m)
                    if not grow < 0.0:
                        done = 0
            mk *= m
        if done:
            return n - start + 1
        n += 1
        m += 1.0
        f *= step_f
        g *= step_g
        wabs *= ratio
        ratio *= rr
        ey *= ey_step
    return -1


def theta_jet(double r, z, int kind, int nder, double abs_tol, int max_terms):
    if nder >= MAXDER:
        raise ValueError("nder too large")
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zz = np.ascontiguousarray(z, dtype=np.complex128)
    cdef Py_ssize_t npts = zz.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] jet = np.empty((nder + 1, npts), dtype=np.complex128)
    cdef double complex buf[MAXDER]
    cdef Py_ssize_t i
    cdef int k, used, worst = 0
    with nogil:
        for i in range(npts):
            used = _jet_point(r, zz[i], kind, nder, abs_tol, max_terms, buf)
            if used < 0:
                worst = -1
            elif worst >= 0 and used > worst:
                worst = used
            for k in range(nder + 1):
                jet[k, i] = buf[k]
    return jet, worst


cdef inline double complex _h(double r, double complex z, double abs_tol,
                              int max_terms, int *ok) noexcept nogil:
    cdef double complex buf[2]
    if _jet_point(r, z, 0, 1, abs_tol, max_terms, buf) < 0:
        ok[0] = 0
    return 2.0 * buf[1] / buf[0]


def loewner_h(double r, z, double abs_tol, int max_terms):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zz = np.ascontiguousarray(z, dtype=np.complex128)
    cdef Py_ssize_t npts = zz.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(npts, dtype=np.complex128)
    cdef Py_ssize_t i
    cdef int ok = 1
    with nogil:
        for i in range(npts):
            out[i] = _h(r, zz[i], abs_tol, max_terms, &ok)
    return out, (1 if ok else -1)


def rk4_step(z, xi, double r, double dt, double abs_tol, int max_terms):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zz = np.ascontiguousarray(z, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xx = np.ascontiguousarray(
        np.broadcast_to(xi, (zz.shape[0],)), dtype=np.float64)
    cdef Py_ssize_t npts = zz.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(npts, dtype=np.complex128)
    cdef Py_ssize_t i
    cdef int ok = 1
    cdef double h = 0.5 * dt
    cdef double complex z0, k1, k2, k3, k4
    with nogil:
        for i in range(npts):
            z0 = zz[i] - xx[i]
            k1 = _h(r, z0, abs_tol, max_terms, &ok)
            k2 = _h(r - h, z0 + h * k1, abs_tol, max_terms, &ok)
            k3 = _h(r - h, z0 + h * k2, abs_tol, max_terms, &ok)
            k4 = _h(r - dt, z0 + dt * k3, abs_tol, max_terms, &ok)
            out[i] = zz[i] + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return out, bool(ok)
