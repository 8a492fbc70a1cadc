# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled off-grid Fourier kernels (see _kernels_py for the reference version).

Powers exp(i k y) are generated by complex multiplication, so each point
costs one sincos call plus O(K) multiply-adds.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, fabs, isfinite

cnp.import_array()


cdef inline void _eval_point(double a0, const double[:] cr, const double[:] ci,
                             Py_ssize_t K, double y, double* f, double* df) noexcept nogil:
    cdef double zr = cos(y), zi = sin(y)
    cdef double wr = zr, wi = zi, tr
    cdef double acc = 0.0, dacc = 0.0
    cdef Py_ssize_t k
    for k in range(K):
        # Re(c w) and Re(i (k+1) c w)
        acc += cr[k] * wr - ci[k] * wi
        dacc -= (k + 1) * (cr[k] * wi + ci[k] * wr)
        tr = wr * zr - wi * zi
        wi = wr * zi + wi * zr
        wr = tr
    f[0] = a0 + acc
    df[0] = dacc


def eval_series(double a0, c, y):
    cdef const double[:] cr = np.ascontiguousarray(np.real(c), dtype=np.float64)
    cdef const double[:] ci = np.ascontiguousarray(np.imag(c), dtype=np.float64)
    cdef const double[:] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t M = yv.shape[0], K = cr.shape[0], j
    out = np.empty(M, dtype=np.float64)
    cdef double[:] o = out
    cdef double f, df
    with nogil:
        for j in range(M):
            _eval_point(a0, cr, ci, K, yv[j], &f, &df)
            o[j] = f
    return out


def eval_series_deriv(double a0, c, y):
    cdef const double[:] cr = np.ascontiguousarray(np.real(c), dtype=np.float64)
    cdef const double[:] ci = np.ascontiguousarray(np.imag(c), dtype=np.float64)
    cdef const double[:] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t M = yv.shape[0], K = cr.shape[0], j
    out = np.empty(M, dtype=np.float64)
    dout = np.empty(M, dtype=np.float64)
    cdef double[:] o = out
    cdef double[:] do = dout
    cdef double f, df
    with nogil:
        for j in range(M):
            _eval_point(a0, cr, ci, K, yv[j], &f, &df)
            o[j] = f
            do[j] = df
    return out, dout


def invert_shift(double a0, c, targets, lo, hi, double tol, int max_iter):
    cdef const double[:] cr = np.ascontiguousarray(np.real(c), dtype=np.float64)
    cdef const double[:] ci = np.ascontiguousarray(np.imag(c), dtype=np.float64)
    cdef const double[:] xv = np.ascontiguousarray(targets, dtype=np.float64)
    lo_arr = np.array(lo, dtype=np.float64)
    hi_arr = np.array(hi, dtype=np.float64)
    cdef double[:] lov = lo_arr
    cdef double[:] hiv = hi_arr
    cdef Py_ssize_t M = xv.shape[0], K = cr.shape[0], j
    out = np.empty(M, dtype=np.float64)
    cdef double[:] o = out
    cdef double x, y, f, df, g, a, b, step, worst = 0.0
    cdef int it, used = 0
    with nogil:
        for j in range(M):
            x = xv[j]
            a = lov[j]
            b = hiv[j]
            _eval_point(a0, cr, ci, K, x, &f, &df)
            y = x - f
            if y < a:
                y = a
            if y > b:
                y = b
            for it in range(1, max_iter + 1):
                _eval_point(a0, cr, ci, K, y, &f, &df)
                g = y + f - x
                if fabs(g) <= tol:
                    break
                if g < 0:
                    a = y
                else:
                    b = y
                if 1.0 + df > 0:
                    step = y - g / (1.0 + df)
                else:
                    step = a - 1.0
                if not isfinite(step) or step <= a or step >= b:
                    step = 0.5 * (a + b)
                y = step
            if it > used:
                used = it
            _eval_point(a0, cr, ci, K, y, &f, &df)
            g = fabs(y + f - x)
            if g > worst:
                worst = g
            o[j] = y
    return out, worst, used
