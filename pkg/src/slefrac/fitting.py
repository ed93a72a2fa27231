"""Least-squares exponent fits shared by the experiments."""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class PowerLawFit:
    """Slope/intercept/stderr/R^2 of a straight-line regression on
    transformed coordinates (log-log for power laws, semilog for
    exponential decays)."""

    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float


def linear_fit(x, y) -> PowerLawFit:
    """Ordinary least squares y ~ slope*x + intercept.

    Slope standard error comes from the residual variance; needs at least
    3 points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 3 or len(y) != n:
        raise DataError(f"need at least 3 paired points, got {len(x)}/{len(y)}")
    xm = x.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise DataError("degenerate fit: all x values identical")
    slope = float(np.sum((x - xm) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xm)
    resid = y - (slope * x + intercept)
    ssr = float(np.sum(resid ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    sigma2 = ssr / (n - 2)
    stderr = float(np.sqrt(sigma2 / sxx))
    r2 = 1.0 if sst == 0.0 else max(0.0, 1.0 - ssr / sst)
    return PowerLawFit(slope=slope, intercept=intercept,
                       slope_stderr=stderr, r_squared=float(r2))


def fit_power_law(xs, ys) -> PowerLawFit:
    """Fit y = exp(intercept) * x^slope by least squares on (log x, log y).

    Zero or negative y entries are dropped with a warning; fewer than 3
    usable points is an error.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(xs <= 0.0):
        raise DataError("power-law fit needs positive x values")
    keep = ys > 0.0
    if not np.all(keep):
        warnings.warn(f"dropping {int((~keep).sum())} nonpositive y values from power-law fit",
                      stacklevel=2)
    xs, ys = xs[keep], ys[keep]
    if len(xs) < 3:
        raise DataError(f"only {len(xs)} usable points for power-law fit (need >= 3)")
    return linear_fit(np.log(xs), np.log(ys))
