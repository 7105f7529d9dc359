"""Small numeric helpers: extrapolation, slope fits, golden-section search."""

from __future__ import annotations

import numpy as np

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def linear_fit_to_zero(eps, values):
    """Least-squares linear fit values ~ c0 + c1*eps, extrapolated to eps=0.

    values may have extra trailing axes (fit runs along axis 0).
    Returns (intercept, slope, max_abs_residual) with the fit axis
    removed.
    """
    eps = np.asarray(eps, dtype=np.float64)
    values = np.asarray(values)
    L = eps.shape[0]
    if L < 2:
        raise ValueError("need at least two ladder values to extrapolate")
    shape = (L,) + (1,) * (values.ndim - 1)
    x = eps.reshape(shape)
    sx = eps.sum()
    sxx = float(np.dot(eps, eps))
    sy = values.sum(axis=0)
    sxy = (x * values).sum(axis=0)
    denom = L * sxx - sx * sx
    slope = (L * sxy - sx * sy) / denom
    intercept = (sy * sxx - sx * sxy) / denom
    resid = np.abs(values - (intercept + slope * x)).max(axis=0)
    return intercept, slope, resid


def ls_slope(x, y):
    """Least-squares slope/intercept of y against x, with max residual."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    sx, sy = x.sum(), y.sum()
    sxx = float(np.dot(x, x))
    sxy = float(np.dot(x, y))
    denom = n * sxx - sx * sx
    slope = (n * sxy - sx * sy) / denom
    intercept = (sy - slope * sx) / n
    resid = float(np.abs(y - (intercept + slope * x)).max())
    return slope, intercept, resid


def golden_section_max(f, a, b, xtol):
    """Maximise a unimodal function on [a, b] to within xtol."""
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > xtol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
    return 0.5 * (a + b)
