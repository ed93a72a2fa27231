"""Discretized chordal Loewner evolution.

The evolution d(g_t) = 2 / (g_t - W_t) is discretized by freezing the
driving on each capacity-time step at its terminal value, which makes
every step an exact vertical-slit map.  One forward step with driving
frozen at ``dw`` maps z to ``dw + sqrt((z - dw)^2 + 4 dt)``; traces are
obtained by composing the inverse steps from the current time back to
zero (zipper composition).  Square roots are always taken with
nonnegative imaginary part.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels, rng
from .errors import ParameterError, StateError

#: swallowing threshold on |image - driving|, in units of sqrt(dt)
SWALLOW_TOL = 1e-6
#: swallowing threshold on the image's imaginary part, in units of sqrt(dt);
#: active only in the non-simple phase kappa > 4
SWALLOW_IM_TOL = 1e-3
#: relative branch-cut proximity that flags a point as swallowed
BRANCH_CUT_TOL = 1e-14


@dataclass(frozen=True)
class DrivingPath:
    """Sampled driving function on a uniform capacity-time grid.

    ``values`` holds W_0..W_n with W_0 = 0; increments over a step have
    variance kappa*dt when generated by :func:`sample_driving`.
    """

    kappa: float
    dt: float
    values: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1

    @property
    def horizon(self) -> float:
        return self.dt * self.n_steps


@dataclass(frozen=True)
class TracePath:
    """Approximate trace points gamma(k dt) in the closed upper half-plane."""

    kappa: float
    dt: float
    points: np.ndarray  # complex128, gamma_0 .. gamma_n

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.points))

    def mesh(self) -> float:
        """Largest consecutive-vertex gap."""
        return float(np.abs(np.diff(self.points)).max())

    def diameter(self) -> float:
        pts = self.points
        return float(max(pts.real.max() - pts.real.min(), pts.imag.max() - pts.imag.min()))


@dataclass(frozen=True)
class TrackedPoint:
    """Forward-map history of one interior point."""

    origin: complex
    image: complex
    log_deriv: float
    swallowed_at: Optional[float]

    @property
    def deriv_modulus(self) -> float:
        """|g'_t(origin)| accumulated by the chain rule."""
        return float(np.exp(self.log_deriv))


def sample_driving(kappa: float, horizon: float, steps: int, seed: int,
                   path_index: int = 0) -> DrivingPath:
    """Sample a driving path sqrt(kappa) * B on a uniform grid.

    Identical (seed, path_index, parameters) give bit-identical output;
    path j of an ensemble keyed by a master seed equals
    ``sample_driving(..., seed=master, path_index=j)``.
    """
    if not (kappa > 0.0):
        raise ParameterError(f"kappa must be positive, got {kappa}")
    if not (horizon > 0.0):
        raise ParameterError(f"horizon must be positive, got {horizon}")
    if not (steps >= 1):
        raise ParameterError(f"steps must be >= 1, got {steps}")
    dt = horizon / steps
    incr = np.sqrt(kappa * dt) * rng.normals(rng.stream_seed(seed, path_index), steps)
    values = np.concatenate([[0.0], np.cumsum(incr)])
    return DrivingPath(kappa=float(kappa), dt=float(dt), values=values)


def slit_map_forward(z: complex, dt: float, dw: float) -> complex:
    """Exact one-step forward map: dw + sqrt((z - dw)^2 + 4 dt)."""
    if not (dt > 0.0):
        raise ParameterError(f"dt must be positive, got {dt}")
    z = complex(z)
    if z.imag < 0.0:
        raise ParameterError("point must lie in the closed upper half-plane")
    u = z - dw
    zeta = u * u + 4.0 * dt
    x, y = _kernels._sqrt_upper(zeta.real, zeta.imag)
    return complex(dw + x, y)


def compute_trace(driving: DrivingPath) -> TracePath:
    """Trace points by inverse zipper composition, O(n^2) total.

    Negative imaginary parts produced by roundoff are clamped to zero.
    """
    out = np.empty(driving.n_steps + 1, dtype=np.complex128)
    _kernels.trace_kernel(driving.values, driving.dt, out)
    return TracePath(kappa=driving.kappa, dt=driving.dt, points=out)


def track_point(driving: DrivingPath, z: complex,
                swallow_tol: float = SWALLOW_TOL,
                swallow_im_tol: float = SWALLOW_IM_TOL) -> TrackedPoint:
    """Push an interior point through all forward slit maps.

    Accumulates log|g'| by the chain rule.  Swallowing is declared at the
    first step where the image comes within ``swallow_tol*sqrt(dt)`` of
    the driving position or the square-root argument lands on the slit
    segment [0, 4 dt] (within relative tolerance ``BRANCH_CUT_TOL``); in
    the non-simple phase kappa > 4 (the only phase where interior points
    are absorbed), also when the image's imaginary part collapses below
    ``swallow_im_tol*sqrt(dt)``.
    """
    z = complex(z)
    if not (z.imag > 0.0):
        raise ParameterError("tracked point must have positive imaginary part")
    x, y, logd, step = _kernels.track_kernel(
        driving.values, driving.dt, z.real, z.imag,
        swallow_tol, swallow_im_tol, BRANCH_CUT_TOL, driving.kappa > 4.0)
    swallowed_at = None if step < 0 else step * driving.dt
    return TrackedPoint(origin=z, image=complex(x, y), log_deriv=logd,
                        swallowed_at=swallowed_at)


def conformal_distance_bounds(p: TrackedPoint) -> tuple:
    """Two-sided bounds on the distance from the origin point to the hull.

    Distortion bounds give d in [q/4, 4q] with q = Im(image) / |g'|.
    """
    if p.swallowed_at is not None:
        raise StateError("point was swallowed; conformal distance undefined")
    q = p.image.imag * np.exp(-p.log_deriv)
    return (q / 4.0, 4.0 * q)


def trace_distance(trace: TracePath, z: complex) -> float:
    """Minimum Euclidean distance from z to the sampled trace vertices."""
    pts = trace.points if isinstance(trace, TracePath) else np.asarray(trace, dtype=complex)
    if len(pts) == 0:
        raise ParameterError("empty trace")
    return float(np.abs(pts - complex(z)).min())
