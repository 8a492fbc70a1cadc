"""Pure numpy implementations of the off-grid Fourier kernels.

Fallback for :mod:`mep_lab._kernels`; same signatures, same results to
round-off. Series are passed as ``a0`` plus weighted positive-mode
coefficients ``c[k-1]`` so that f(y) = a0 + Re sum_k c_k exp(i k y).
"""

import numpy as np


def eval_series(a0, c, y):
    k = np.arange(1, c.shape[0] + 1, dtype=float)
    phase = np.exp(1j * np.multiply.outer(y, k))
    return a0 + np.real(phase @ c)


def eval_series_deriv(a0, c, y):
    k = np.arange(1, c.shape[0] + 1, dtype=float)
    phase = np.exp(1j * np.multiply.outer(y, k))
    f = a0 + np.real(phase @ c)
    df = np.real(phase @ (1j * k * c))
    return f, df


def invert_shift(a0, c, targets, lo, hi, tol, max_iter):
    """Solve y + p(y) = target for every target, p given as a series.

    Safeguarded Newton: a step that leaves the current bracket is replaced by
    bisection. Returns (y, worst_residual, iterations_used).
    """
    x = np.asarray(targets, dtype=float)
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    y = x - eval_series(a0, c, x)
    y = np.clip(y, lo, hi)
    res = np.full_like(x, np.inf)
    it = 0
    for it in range(1, max_iter + 1):
        p, dp = eval_series_deriv(a0, c, y)
        g = y + p - x
        res = np.abs(g)
        if np.all(res <= tol):
            break
        lo = np.where(g < 0, y, lo)
        hi = np.where(g > 0, y, hi)
        slope = 1.0 + dp
        with np.errstate(divide="ignore", invalid="ignore"):
            step = y - g / slope
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi) | (slope <= 0)
        y = np.where(res <= tol, y, np.where(bad, 0.5 * (lo + hi), step))
    p = eval_series(a0, c, y)
    res = np.abs(y + p - x)
    return y, float(res.max(initial=0.0)), it
