"""Box-counting dimension estimation and space-filling diagnostics."""

import warnings
from dataclasses import dataclass

import numpy as np

from . import loewner
from .errors import ParameterError, ResolutionError
from .estimators import MESH_SAFETY
from .fitting import PowerLawFit, linear_fit


@dataclass(frozen=True)
class BoxCountTable:
    """Covering counts N(eps) on a decreasing radius grid."""

    eps_list: np.ndarray
    counts: np.ndarray


def _as_points(points) -> np.ndarray:
    if isinstance(points, loewner.TracePath):
        points = points.points
    pts = np.asarray(points, dtype=complex)
    if pts.size == 0:
        raise ParameterError("empty point set")
    return pts


def box_count(points, eps: float) -> int:
    """Number of cells of the origin-anchored grid eps*Z^2 meeting the points."""
    if not (eps > 0.0):
        raise ParameterError(f"eps must be positive, got {eps}")
    pts = _as_points(points)
    ix = np.floor(pts.real / eps).astype(np.int64)
    iy = np.floor(pts.imag / eps).astype(np.int64)
    return len(np.unique(np.stack([ix, iy], axis=1), axis=0))


def box_count_table(points, eps_list) -> BoxCountTable:
    """Box counts over a radius grid, sorted decreasing."""
    eps = np.sort(np.asarray(eps_list, dtype=float))[::-1]
    pts = _as_points(points)
    counts = np.array([box_count(pts, e) for e in eps], dtype=np.int64)
    return BoxCountTable(eps_list=eps, counts=counts)


def dimension_fit(trace, eps_list) -> PowerLawFit:
    """Box-dimension estimate: slope of log N(eps) against log(1/eps).

    Requires the radius grid to span at least a decade and the trace mesh
    (largest consecutive gap) to be at most min(eps)/5; a coarser trace
    would silently bias the slope toward a curve that looks 1-dimensional.
    """
    eps = np.sort(np.asarray(eps_list, dtype=float))[::-1]
    if len(eps) < 3:
        raise ParameterError("need at least 3 radii")
    if np.any(eps <= 0.0):
        raise ParameterError("radii must be positive")
    if eps[0] / eps[-1] < 10.0 * (1.0 - 1e-12):
        raise ParameterError(
            f"radius grid must span at least a decade, got ratio {eps[0] / eps[-1]:.3g}")
    pts = _as_points(trace)
    mesh = float(np.abs(np.diff(pts)).max())
    if mesh > eps[-1] / MESH_SAFETY:
        raise ResolutionError(
            f"trace mesh {mesh:.4g} exceeds min(eps)/{MESH_SAFETY:g} = "
            f"{eps[-1] / MESH_SAFETY:.4g}; refine the trace or raise the radii")
    diam = float(max(pts.real.max() - pts.real.min(), pts.imag.max() - pts.imag.min()))
    if eps[0] > diam / 4.0:
        warnings.warn(f"largest radius {eps[0]:g} exceeds diameter/4 = {diam / 4.0:g}; "
                      "counts there saturate and flatten the fit", stacklevel=2)
    table = box_count_table(pts, eps)
    return linear_fit(np.log(1.0 / table.eps_list), np.log(table.counts.astype(float)))


def eps_range_policy(trace, per_octave: int = 2) -> np.ndarray:
    """Radius grid for a dimension fit: geometric between 5x the trace mesh
    and diameter/4.  Raises if that window is narrower than a decade."""
    pts = _as_points(trace)
    mesh = float(np.abs(np.diff(pts)).max())
    diam = float(max(pts.real.max() - pts.real.min(), pts.imag.max() - pts.imag.min()))
    lo = MESH_SAFETY * mesh
    hi = diam / 4.0
    if lo <= 0.0 or hi / lo < 10.0:
        raise ResolutionError(
            f"usable radius window [{lo:.4g}, {hi:.4g}] is narrower than a decade; "
            "increase the step count")
    n = int(np.floor(np.log2(hi / lo) * per_octave)) + 1
    return hi * (2.0 ** (-np.arange(n) / per_octave))


def half_range_spread(trace, eps_list) -> float:
    """Difference of the raw slope estimates on the finer and coarser halves
    of the radius grid; a reported stability diagnostic (the halves need not
    span a decade on their own)."""
    eps = np.sort(np.asarray(eps_list, dtype=float))[::-1]
    mid = len(eps) // 2
    if mid < 3 or len(eps) - mid < 3:
        return float("nan")
    table = box_count_table(_as_points(trace), eps)
    x = np.log(1.0 / table.eps_list)
    y = np.log(table.counts.astype(float))
    coarse = linear_fit(x[:mid + 1], y[:mid + 1])
    fine = linear_fit(x[mid:], y[mid:])
    return float(fine.slope - coarse.slope)


def standard_grid() -> np.ndarray:
    """The diagnostic grid {(j/10, 1/2 + k/10)}: j = -10..10, k = 0..10."""
    xs = np.arange(-10, 11) / 10.0
    ys = 0.5 + np.arange(0, 11) / 10.0
    gx, gy = np.meshgrid(xs, ys)
    return (gx + 1j * gy).ravel()


def swallow_fraction(kappa: float, grid, horizon: float, steps: int, seed: int,
                     swallow_tol: float = loewner.SWALLOW_TOL,
                     swallow_im_tol: float = loewner.SWALLOW_IM_TOL) -> float:
    """Fraction of grid points swallowed by capacity time ``horizon``.

    Zero for simple curves (kappa <= 4); grows toward 1 with horizon in
    the space-filling phase.
    """
    grid = np.asarray(grid, dtype=complex)
    if np.any(grid.imag <= 0.0):
        raise ParameterError("grid points must be interior (Im > 0)")
    if horizon == 0.0:
        return 0.0
    driving = loewner.sample_driving(kappa, horizon, steps, seed)
    out = np.empty(len(grid), dtype=np.int64)
    from . import _kernels
    _kernels.swallow_grid_kernel(driving.values, driving.dt,
                                 np.ascontiguousarray(grid.real),
                                 np.ascontiguousarray(grid.imag),
                                 swallow_tol, swallow_im_tol,
                                 loewner.BRANCH_CUT_TOL, kappa > 4.0, out)
    return float((out >= 0).mean())
