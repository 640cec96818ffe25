"""Least-squares power laws on log-log data."""
from __future__ import annotations

import numpy as np


def fit_power_law(points):
    """Fit y = exp(intercept) * x**exponent by least squares in (log x, log y).

    Returns (exponent, intercept, residual) with residual the RMS of the
    log-space residuals.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise ValueError("need at least three (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive x and y")
    lx, ly = np.log(x), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([slope, icpt]) - ly) ** 2)))
    return float(slope), float(icpt), resid
