"""Angular diffusion with absorbing endpoints.

The process d(alpha) = sqrt(kappa) dB + ((kappa-4)/2) cot(alpha/2) ds on
(0, 2*pi) governs how fast an interior point's conformal distance to the
hull shrinks; its survival probability decays like exp(-(1 - kappa/8) s)
for kappa < 8, with positive eigenfunction sin(x/2)^(8/kappa - 1) of the
generator (kappa/2) d^2 + ((kappa-4)/2) cot(x/2) d.

Euler-Maruyama stepping with two guards near the cot singularity: paths
are absorbed on exiting (eps_b, 2*pi - eps_b) rather than at the exact
endpoints, and the per-step drift displacement is capped at pi/4.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from . import _kernels, rng
from .errors import NumericalError, ParameterError
from .fitting import PowerLawFit, linear_fit

TWOPI = 2.0 * math.pi
DRIFT_CAP = math.pi / 4.0


def boundary_margin(kappa: float, ds: float) -> float:
    """Absorbing margin eps_b = min(1e-3, sqrt(kappa*ds))."""
    return min(1e-3, math.sqrt(kappa * ds))


@dataclass(frozen=True)
class AlphaPath:
    """One realization of the angular diffusion."""

    kappa: float
    alpha0: float
    ds: float
    samples: np.ndarray
    absorbed_at: Optional[float]


@dataclass(frozen=True)
class SurvivalEstimate:
    """Ensemble survival probabilities on a time grid."""

    s_grid: np.ndarray
    probs: np.ndarray
    stderrs: np.ndarray
    n_paths: int


@dataclass(frozen=True)
class SpectralResult:
    """Leading eigenvalue of the absorbed generator and its eigenvector."""

    lambda_hat: float
    grid_size: int
    eigenvector: np.ndarray
    nodes: np.ndarray


def _validate_alpha_args(kappa, alpha0, ds):
    if not (kappa > 0.0):
        raise ParameterError(f"kappa must be positive, got {kappa}")
    if not (0.0 < alpha0 < TWOPI):
        raise ParameterError(f"alpha0 must lie in (0, 2*pi), got {alpha0}")
    if not (ds > 0.0):
        raise ParameterError(f"ds must be positive, got {ds}")


def simulate_alpha(kappa: float, alpha0: float, s_max: float, ds: float,
                   seed: int) -> AlphaPath:
    """Euler-Maruyama path of the angular diffusion up to time s_max."""
    _validate_alpha_args(kappa, alpha0, ds)
    if not (s_max > 0.0):
        raise ParameterError(f"s_max must be positive, got {s_max}")
    n_steps = int(math.ceil(s_max / ds - 1e-12))
    samples = np.empty(n_steps + 1)
    eps_b = boundary_margin(kappa, ds)
    step = _kernels.alpha_path_kernel(rng.seed_u64(rng.stream_seed(seed, 0)), kappa, alpha0,
                                      ds, n_steps, eps_b, DRIFT_CAP, samples)
    if step >= 0:
        return AlphaPath(kappa, alpha0, ds, samples[:step + 1], step * ds)
    return AlphaPath(kappa, alpha0, ds, samples, None)


def sample_alpha_ensemble(kappa: float, alpha0: float, s: float, n_paths: int,
                          ds: float, seed: int):
    """Ensemble of paths run to time s.

    Returns (alpha_final, absorbed_at): final angles (boundary-clamped for
    absorbed paths) and absorption times (inf where the path survived).
    Path j uses the stream derived from (seed, j).
    """
    _validate_alpha_args(kappa, alpha0, ds)
    if not (n_paths >= 1):
        raise ParameterError(f"n_paths must be >= 1, got {n_paths}")
    if s < 0.0:
        raise ParameterError(f"time must be nonnegative, got {s}")
    n_steps = int(round(s / ds))
    absorb_step = np.empty(n_paths, dtype=np.int64)
    alpha_final = np.empty(n_paths)
    eps_b = boundary_margin(kappa, ds)
    _kernels.alpha_ensemble(rng.seed_u64(seed), n_paths, kappa, alpha0, ds, n_steps,
                            eps_b, DRIFT_CAP, absorb_step, alpha_final)
    absorbed_at = np.where(absorb_step >= 0, absorb_step * ds, np.inf)
    return alpha_final, absorbed_at


def survival_curve(kappa: float, alpha0: float, s_grid, n_paths: int,
                   ds: float, seed: int) -> SurvivalEstimate:
    """Monte-Carlo survival probabilities P(S > s) on the given grid."""
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid.size == 0:
        raise ParameterError("empty s_grid")
    if np.any(np.diff(s_grid) <= 0.0):
        raise ParameterError("s_grid must be strictly increasing")
    if np.any(s_grid < 0.0):
        raise ParameterError("s_grid values must be nonnegative")
    _, absorbed_at = sample_alpha_ensemble(kappa, alpha0, float(s_grid[-1]),
                                           n_paths, ds, seed)
    probs = np.array([(absorbed_at > s).mean() for s in s_grid])
    stderrs = np.sqrt(probs * (1.0 - probs) / n_paths)
    return SurvivalEstimate(s_grid=s_grid, probs=probs, stderrs=stderrs,
                            n_paths=n_paths)


def survival_exponent(estimate: SurvivalEstimate, s_min: float = 1.0,
                      s_max: Optional[float] = None) -> PowerLawFit:
    """Decay rate fit: least squares of log P(S > s) against s.

    The decay exponent is -slope; compare to 1 - kappa/8.
    """
    s = estimate.s_grid
    p = estimate.probs
    mask = s >= s_min
    if s_max is not None:
        mask &= s <= s_max
    mask &= p > 0.0
    return linear_fit(s[mask], np.log(p[mask]))


def martingale_expectation(kappa: float, alpha0: float, s: float, n_paths: int,
                           ds: float, seed: int):
    """Ensemble mean and stderr of sin(alpha_s/2)^(8/kappa-1) *
    exp((1-kappa/8) s), with absorbed paths contributing zero.

    Constancy of the mean in s is the martingale property behind the
    survival exponent.
    """
    if not (s >= 0.0):
        raise ParameterError(f"s must be nonnegative, got {s}")
    alpha_final, absorbed_at = sample_alpha_ensemble(kappa, alpha0, s,
                                                     n_paths, ds, seed)
    p = 8.0 / kappa - 1.0
    x = np.where(np.isfinite(absorbed_at), 0.0,
                 np.sin(0.5 * alpha_final) ** p * math.exp((1.0 - kappa / 8.0) * s))
    mean = float(x.mean())
    stderr = float(x.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
    return mean, stderr


# ------------------------------------------------------------- spectral

def _eigenfunction_exponent(kappa: float) -> float:
    return 8.0 / kappa - 1.0


def eigenfunction_residual(kappa: float, grid_size: int,
                           window=(math.pi / 8.0, TWOPI - math.pi / 8.0)) -> float:
    """Max finite-difference residual of the candidate eigenpair.

    Checks (kappa/2) phi'' + ((kappa-4)/2) cot(x/2) phi' + (1 - kappa/8) phi
    for phi(x) = sin(x/2)^(8/kappa-1) with central differences on an
    interior uniform grid, evaluated on a window bounded away from the
    endpoints.  Decays as O(h^2) under refinement.
    """
    if not (kappa > 0.0):
        raise ParameterError(f"kappa must be positive, got {kappa}")
    if grid_size < 16:
        raise ParameterError(f"grid_size must be >= 16, got {grid_size}")
    h = TWOPI / grid_size
    x = h * np.arange(grid_size + 1)
    p = _eigenfunction_exponent(kappa)
    phi = np.sin(0.5 * x) ** p
    lam = 1.0 - kappa / 8.0
    xi = x[1:-1]
    d2 = (phi[2:] - 2.0 * phi[1:-1] + phi[:-2]) / h ** 2
    d1 = (phi[2:] - phi[:-2]) / (2.0 * h)
    drift = 0.5 * (kappa - 4.0) / np.tan(0.5 * xi)
    resid = 0.5 * kappa * d2 + drift * d1 + lam * phi[1:-1]
    mask = (xi >= window[0]) & (xi <= window[1])
    return float(np.abs(resid[mask]).max())


#: endpoint clustering exponent of the spectral mesh; resolves the
#: x^(8/kappa-1) eigenfunction corner at the absorbing endpoints
MESH_GRADING = 3.0


def spectral_nodes(grid_size: int, grading: float = MESH_GRADING) -> np.ndarray:
    """Interior mesh on (0, 2*pi), symmetric and endpoint-clustered.

    Node i sits at 2*pi * u^grading / (u^grading + (1-u)^grading) with
    u = i/grid_size; the right half is mirrored from the left so spacings
    near 2*pi stay exactly representable.
    """
    u = np.arange(1, grid_size) / grid_size
    left = u <= 0.5
    b = np.empty(grid_size - 1)
    g = grading
    b[left] = u[left] ** g / (u[left] ** g + (1.0 - u[left]) ** g)
    mirror = (1.0 - u[~left]) ** g / (u[~left] ** g + (1.0 - u[~left]) ** g)
    b[~left] = 1.0 - mirror
    return TWOPI * b


def leading_eigenvalue(kappa: float, grid_size: int, max_sweeps: int = 10_000,
                       rtol: float = 1e-6) -> SpectralResult:
    """Smallest eigenvalue of minus the generator with absorbing endpoints.

    The generator is discretized in conserved (flux) form,
    (kappa/2) w^{-1} d(w dphi) with w = sin(x/2)^(2(kappa-4)/kappa), by
    three-point differences on the endpoint-clustered interior mesh of
    :func:`spectral_nodes`; Dirichlet rows are dropped and the resulting
    nonsymmetric tridiagonal matrix is handled by inverse power iteration.
    The flux form keeps the off-diagonal signs uniform, so the computed
    eigenvector is positive; it is sign-normalized and scaled to max 1.
    Accuracy degrades as kappa approaches 8, where the eigenfunction's
    endpoint exponent 8/kappa - 1 tends to zero.
    """
    if not (kappa > 0.0):
        raise ParameterError(f"kappa must be positive, got {kappa}")
    if grid_size < 64:
        raise ParameterError(f"grid_size must be >= 64, got {grid_size}")
    n = grid_size - 1
    x = spectral_nodes(grid_size)
    xa = np.concatenate([[0.0], x, [TWOPI]])
    hm = xa[1:-1] - xa[:-2]
    hp = xa[2:] - xa[1:-1]
    xh = 0.5 * (xa[1:] + xa[:-1])  # half nodes
    q = 2.0 * (kappa - 4.0) / kappa
    logw = q * np.log(np.sin(0.5 * x))
    logwh = q * np.log(np.sin(0.5 * xh))
    k2fac = 0.5 * kappa * 2.0 / (hm + hp)
    cu = k2fac * np.exp(logwh[1:] - logw) / hp
    cl = k2fac * np.exp(logwh[:-1] - logw) / hm
    diag = cu + cl          # A = -L
    upper = -cu[:-1]
    lower = -cl[1:]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower

    def apply_a(v):
        out = diag * v
        out[1:] += lower * v[:-1]
        out[:-1] += upper * v[1:]
        return out

    v = np.sin(0.5 * x)
    lam_old = np.inf
    for _ in range(max_sweeps):
        v = scipy.linalg.solve_banded((1, 1), ab, v)
        v /= np.abs(v).max()
        lam = float(v @ apply_a(v) / (v @ v))
        if abs(lam - lam_old) <= rtol * abs(lam):
            if v[np.argmax(np.abs(v))] < 0.0:
                v = -v
            if np.any(v <= 0.0):
                raise NumericalError("inverse iteration converged to a sign-changing vector")
            return SpectralResult(lambda_hat=lam, grid_size=grid_size,
                                  eigenvector=v / v.max(), nodes=x)
        lam_old = lam
    raise NumericalError(f"inverse power iteration did not converge in {max_sweeps} sweeps")
