"""Monte-Carlo hitting estimators, closed-form measures, and the
combinatorial partition-sum bound.

All ensembles are keyed by a master seed; path j draws from the stream
derived from (master_seed, j), so estimates are deterministic, independent
of parallel scheduling, and different experiments over the same
(master_seed, horizon, steps, kappa) see identical trajectories.
"""

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from itertools import accumulate

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels, rng
from .errors import ParameterError, ResourceBudgetError
from .fitting import PowerLawFit, fit_power_law, linear_fit  # noqa: F401 (re-export)
from .loewner import TracePath

#: eps values below this multiple of the observed local trace mesh are
#: suspect; estimators warn when the grid dips under it
MESH_SAFETY = 5.0


@dataclass(frozen=True)
class HittingEstimate:
    """Hit frequencies of disks around one target point."""

    z0: complex
    eps_list: np.ndarray      # decreasing radii
    probs: np.ndarray
    stderrs: np.ndarray
    n_paths: int
    horizon: float
    steps: int


def ensemble_min_distances(kappa: float, targets, n_paths: int, horizon: float,
                           steps: int, master_seed: int):
    """Min vertex distance from each sampled trace to each target point.

    Returns (min_dist, gap_at_min), both shaped (n_paths, n_targets);
    gap_at_min is the consecutive-vertex gap at the minimizing index, the
    local resolution scale relevant to the distance estimate.
    """
    if not (kappa > 0.0):
        raise ParameterError(f"kappa must be positive, got {kappa}")
    if not (horizon > 0.0 and steps >= 1):
        raise ParameterError("horizon must be positive and steps >= 1")
    if not (n_paths >= 1):
        raise ParameterError(f"n_paths must be >= 1, got {n_paths}")
    targets = np.asarray(targets, dtype=complex)
    dt = horizon / steps
    mind = np.empty((n_paths, len(targets)))
    gap = np.empty((n_paths, len(targets)))
    _kernels.min_dist_batch(rng.seed_u64(master_seed), n_paths, kappa, dt, steps,
                            np.ascontiguousarray(targets.real),
                            np.ascontiguousarray(targets.imag),
                            mind, gap)
    return mind, gap


def _binomial_stderr(p: np.ndarray, n: int) -> np.ndarray:
    return np.sqrt(p * (1.0 - p) / n)


def _warn_if_under_resolved(mind, gap, eps_min, eps_max):
    # local mesh observed at the decision region: gap at the minimizing
    # vertex over paths that came within 2*eps_max of the target
    near = mind <= 2.0 * eps_max
    if np.any(near):
        observed = float(gap[near].max())
        if eps_min < MESH_SAFETY * observed:
            warnings.warn(
                f"smallest radius {eps_min:g} is under {MESH_SAFETY:g}x the observed "
                f"local trace mesh {observed:g}; hit frequencies there are biased low",
                stacklevel=3)


def hitting_probability_mc(z0: complex, eps_list, kappa: float, n_paths: int,
                           horizon: float, steps: int,
                           master_seed: int) -> HittingEstimate:
    """Frequency of {dist(trace, z0) <= eps} over an ensemble of traces.

    The radii must all be smaller than Im(z0).  Radii are processed in
    decreasing order on one common ensemble, so the frequencies are
    monotone by containment.
    """
    z0 = complex(z0)
    if not (z0.imag > 0.0):
        raise ParameterError("target point must be interior (Im > 0)")
    eps = np.sort(np.asarray(eps_list, dtype=float))[::-1]
    if len(eps) == 0:
        raise ParameterError("empty eps list")
    if np.any(eps <= 0.0):
        raise ParameterError("radii must be positive")
    if eps[0] >= z0.imag:
        raise ParameterError(
            f"largest radius {eps[0]:g} must be below Im(z0) = {z0.imag:g}")
    mind, gap = ensemble_min_distances(kappa, [z0], n_paths, horizon, steps,
                                       master_seed)
    mind = mind[:, 0]
    probs = np.array([(mind <= e).mean() for e in eps])
    _warn_if_under_resolved(mind, gap[:, 0], float(eps[-1]), float(eps[0]))
    return HittingEstimate(z0=z0, eps_list=eps, probs=probs,
                           stderrs=_binomial_stderr(probs, n_paths),
                           n_paths=n_paths, horizon=horizon, steps=steps)


def angle_profile(kappa: float, modulus: float, angles, eps: float,
                  n_paths: int, horizon: float, steps: int, seed: int):
    """Hitting probability of radius-eps disks at modulus*exp(i*angle).

    All angles are evaluated on one shared trace ensemble (paired
    comparisons).  Returns a list of (angle, prob, stderr).
    """
    angles = np.asarray(angles, dtype=float)
    if np.any((angles <= 0.0) | (angles >= math.pi)):
        raise ParameterError("angles must lie in (0, pi)")
    if not (modulus > 0.0):
        raise ParameterError("modulus must be positive")
    if not (eps < modulus * np.min(np.sin(angles))):
        raise ParameterError("eps must be below modulus*min(sin(angle))")
    targets = modulus * np.exp(1j * angles)
    mind, gap = ensemble_min_distances(kappa, targets, n_paths, horizon,
                                       steps, seed)
    hits = mind <= eps
    probs = hits.mean(axis=0)
    _warn_if_under_resolved(mind, gap, eps, eps)
    errs = _binomial_stderr(probs, n_paths)
    return [(float(a), float(p), float(se))
            for a, p, se in zip(angles, probs, errs)]


def two_point_mc(z: complex, zp: complex, eps: float, kappa: float,
                 n_paths: int, horizon: float, steps: int, seed: int):
    """Joint frequency of the trace visiting both eps-disks.

    Requires eps < |z - zp| / 2.  Returns (prob, stderr).
    """
    z = complex(z)
    zp = complex(zp)
    if not (z.imag > 0.0 and zp.imag > 0.0):
        raise ParameterError("both points must be interior (Im > 0)")
    sep = abs(z - zp)
    if not (eps > 0.0 and eps < sep / 2.0):
        raise ParameterError(
            f"eps must lie in (0, |z - zp|/2) = (0, {sep / 2.0:g}), got {eps:g}")
    mind, gap = ensemble_min_distances(kappa, [z, zp], n_paths, horizon,
                                       steps, seed)
    joint = (mind[:, 0] <= eps) & (mind[:, 1] <= eps)
    p = float(joint.mean())
    _warn_if_under_resolved(mind, gap, eps, eps)
    return p, float(_binomial_stderr(np.array(p), n_paths))


# ------------------------------------------------------------ closed forms

def harmonic_measure_pos_axis(z: complex) -> float:
    """Harmonic measure of the positive real axis seen from z:
    1/2 + arctan(x/y)/pi (Cauchy exit law of the half-plane)."""
    z = complex(z)
    if not (z.imag > 0.0):
        raise ParameterError("point must be interior (Im > 0)")
    return 0.5 + math.atan(z.real / z.imag) / math.pi


def min_side_measure(z: complex) -> float:
    """Smaller harmonic measure of the two real half-axes from z;
    comparable to sin(arg z)."""
    w = harmonic_measure_pos_axis(z)
    return min(w, 1.0 - w)


def phi1(z: complex, kappa: float) -> float:
    """One-point occupation-density profile
    Im(z)^(kappa/8-1) * sin(arg z)^(8/kappa-1), normalization fixed to 1."""
    z = complex(z)
    if not (z.imag > 0.0):
        raise ParameterError("point must be interior (Im > 0)")
    if not (0.0 < kappa < 8.0):
        raise ParameterError(f"kappa must lie in (0, 8), got {kappa}")
    return z.imag ** (kappa / 8.0 - 1.0) * math.sin(np.angle(z)) ** (8.0 / kappa - 1.0)


# ------------------------------------------------------- occupation density

def occupation_density(trace: TracePath, eps: float, window, cells: int,
                       subsamples: int = 3) -> np.ndarray:
    """Cell averages of the rescaled occupation density eps^(-s) * 1{within
    eps of the trace}, s = 1 - kappa/8.

    ``window`` is (x0, x1, y0, y1) in the open upper half-plane; the
    returned array has shape (cells, cells) indexed [iy, ix] with y
    increasing along axis 0.  Cell area fractions are estimated on a
    subsamples x subsamples grid of probe points per cell.
    """
    x0, x1, y0, y1 = map(float, window)
    if not (x1 > x0 and y1 > y0):
        raise ParameterError("degenerate window")
    if not (y0 > 0.0):
        raise ParameterError("window must lie in the open upper half-plane")
    if not (eps > 0.0):
        raise ParameterError("eps must be positive")
    if cells < 1 or subsamples < 1:
        raise ParameterError("cells and subsamples must be >= 1")
    s = 1.0 - trace.kappa / 8.0
    pts = np.column_stack([trace.points.real, trace.points.imag])
    tree = cKDTree(pts)
    nx = cells * subsamples
    xs = x0 + (x1 - x0) * (np.arange(nx) + 0.5) / nx
    ys = y0 + (y1 - y0) * (np.arange(nx) + 0.5) / nx
    gx, gy = np.meshgrid(xs, ys)
    probe = np.column_stack([gx.ravel(), gy.ravel()])
    dist, _ = tree.query(probe, k=1, distance_upper_bound=eps)
    inside = (dist <= eps).reshape(nx, nx)
    frac = inside.reshape(cells, subsamples, cells, subsamples).mean(axis=(1, 3))
    return eps ** (-s) * frac


# ----------------------------------------------------------- partition sum

def _pos_comps(k, parts):
    # ordered compositions of k into `parts` positive parts
    if parts == 0:
        if k == 0:
            yield ()
        return
    if parts == 1:
        if k >= 1:
            yield (k,)
        return
    for first in range(1, k - parts + 2):
        for rest in _pos_comps(k - first, parts - 1):
            yield (first,) + rest


def _comps_first_zero(k, parts):
    # first part may be zero, the rest positive
    if parts == 1:
        yield (k,)
        return
    for first in range(0, k - (parts - 1) + 1):
        for rest in _pos_comps(k - first, parts - 1):
            yield (first,) + rest


def composition_pairs(k1: int, k2: int):
    """All pairs (m, l) of equal-length ordered compositions of k1 and k2:
    every part positive except possibly the first of m and the last of l."""
    max_len = min(k1, k2) + 1
    for length in range(1, max_len + 1):
        for m in _comps_first_zero(k1, length):
            for l_rev in _comps_first_zero(k2, length):
                yield m, l_rev[::-1]


def count_composition_pairs(k1: int, k2: int) -> int:
    """Number of terms enumerated by :func:`composition_pairs`."""
    return sum(math.comb(k1, length - 1) * math.comb(k2, length - 1)
               for length in range(1, min(k1, k2) + 2))


def _cumsum_head_total(l):
    # sum of the cumulative sums l1, l1+l2, ..., up to length-1 terms
    return sum(accumulate(l[:-1]))


def _validate_partition_args(k1, k2, a, c, alpha, beta, gamma):
    if not (isinstance(k1, int) and isinstance(k2, int) and k1 >= 1 and k2 >= 1):
        raise ParameterError("k1 and k2 must be integers >= 1")
    if not (0 < a < 1):
        raise ParameterError(f"a must lie in (0, 1), got {a}")
    if not (c > 0):
        raise ParameterError(f"c must be positive, got {c}")
    if not (alpha > 0 and beta > 0 and gamma > 0):
        raise ParameterError("exponents alpha, beta, gamma must be positive")


def partition_sum(k1, k2, a, c, alpha, beta, gamma,
                  term_budget: int = 10_000_000):
    """Exact sum over composition pairs of a^(alpha*sum(m) + beta*sum(l) +
    gamma*sum(l+)) * c^len, by exhaustive enumeration.

    ``l+`` is the sequence of leading cumulative sums of l (all but the
    last).  Comparing against C * a^(alpha*k1/2 + beta*k2), uniformly in
    k1, k2, witnesses the combinatorial bound behind the second-moment
    argument.  Fraction-valued a and c with integer exponents give an
    exact rational result.
    """
    _validate_partition_args(k1, k2, a, c, alpha, beta, gamma)
    n_terms = count_composition_pairs(k1, k2)
    if n_terms > term_budget:
        raise ResourceBudgetError(
            f"enumeration needs {n_terms} terms, over the budget {term_budget}")
    exact = isinstance(a, Fraction) or isinstance(c, Fraction)
    if exact and not all(float(e).is_integer() for e in (alpha, beta, gamma)):
        raise ParameterError("exact mode needs integer exponents")
    total = Fraction(0) if exact else 0.0
    for m, l in composition_pairs(k1, k2):
        e = alpha * sum(m) + beta * sum(l) + gamma * _cumsum_head_total(l)
        total += a ** (int(e) if exact else e) * c ** len(l)
    return total


def partition_sum_dp(k1, k2, a, c, alpha, beta, gamma):
    """Independent dynamic-programming evaluation of :func:`partition_sum`.

    Splits the sum by composition length: counts the m-compositions with a
    Pascal-style recursion and folds the l-weights positionally, using
    a^(gamma*sum(l+)) = prod_j (a^(gamma*(len-j)))^(l_j).
    """
    _validate_partition_args(k1, k2, a, c, alpha, beta, gamma)
    exact = isinstance(a, Fraction) or isinstance(c, Fraction)
    if exact and not all(float(e).is_integer() for e in (alpha, beta, gamma)):
        raise ParameterError("exact mode needs integer exponents")
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    max_len = min(k1, k2) + 1

    # ways_pos[r][j]: ordered compositions of r into j positive parts
    ways_pos = [[0 for _ in range(max_len + 1)] for _ in range(k1 + 1)]
    ways_pos[0][0] = 1
    for r in range(1, k1 + 1):
        for j in range(1, max_len + 1):
            ways_pos[r][j] = sum(ways_pos[r - v][j - 1] for v in range(1, r + 1))

    def a_pow(e):
        return a ** (int(e) if exact else e)

    total = zero
    for length in range(1, max_len + 1):
        m_count = sum(ways_pos[k1 - first][length - 1]
                      for first in range(0, k1 + 1)) if length > 1 else (1 if k1 >= 1 else 0)
        # positional fold over l: part j carries weight a^(gamma*(length-j))
        f = [zero] * (k2 + 1)
        f[0] = one
        for j in range(1, length + 1):
            x = a_pow(gamma * (length - j))
            g = [zero] * (k2 + 1)
            vmin = 0 if j == length else 1
            for r in range(k2 + 1):
                if f[r] == 0:
                    continue
                xpow = x ** vmin
                for v in range(vmin, k2 - r + 1):
                    g[r + v] += f[r] * xpow
                    xpow *= x
            f = g
        total += m_count * f[k2] * (c ** length)
    return a_pow(alpha * k1 + beta * k2) * total
