"""Compiled numerical kernels.

Single authority for the per-path random streams (see rng.py for the
definition) and for the slit-map recursions, so that every Monte-Carlo
driver sees bit-identical paths for identical (master_seed, path_index)
regardless of which experiment consumes them.

The inverse zipper composition is evaluated four trace indices at a time:
the four recursions are independent, which lets the CPU overlap the
square-root latency chains (about a 5x throughput gain over the naive
loop; results are identical).
"""

import numpy as np
from numba import config, njit, prange

# OpenMP layer: present on all target platforms here, and skips the noisy
# TBB version probe
config.THREADING_LAYER = "omp"

U64 = np.uint64
_GOLDEN = U64(0x9E3779B97F4A7C15)
_M1 = U64(0xBF58476D1CE4E5B9)
_M2 = U64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0
_TWOPI = 2.0 * np.pi


# ---------------------------------------------------------------- random

@njit(cache=True, inline="always")
def _mix64(x):
    x = U64(x)
    x ^= x >> U64(30)
    x = U64(x * _M1)
    x ^= x >> U64(27)
    x = U64(x * _M2)
    x ^= x >> U64(31)
    return x


@njit(cache=True, inline="always")
def _stream_seed(master, idx):
    return _mix64(U64(master) + _GOLDEN * (U64(idx) + U64(1)))


@njit(cache=True, inline="always")
def _unif(base, k):
    return float(_mix64(U64(base) + _GOLDEN * (U64(k) + U64(1))) >> U64(11)) * _INV53


@njit(cache=True)
def fill_normals(base, out):
    """Standard normals 0..len(out)-1 of the stream with the given base."""
    n = out.shape[0]
    for m in range((n + 1) // 2):
        u0 = _unif(base, 4 * m)
        u1 = _unif(base, 4 * m + 1)
        r = np.sqrt(-2.0 * np.log(1.0 - u0))
        th = _TWOPI * u1
        out[2 * m] = r * np.cos(th)
        if 2 * m + 1 < n:
            out[2 * m + 1] = r * np.sin(th)


@njit(cache=True, inline="always")
def _fill_driving(base, sig, w):
    # w[0..n]: running sum of sig * normal_i, w[0] = 0
    n = w.shape[0] - 1
    w[0] = 0.0
    acc = 0.0
    carry = 0.0
    for i in range(n):
        if (i & 1) == 0:
            m = i >> 1
            u0 = _unif(base, 4 * m)
            u1 = _unif(base, 4 * m + 1)
            r = np.sqrt(-2.0 * np.log(1.0 - u0))
            th = _TWOPI * u1
            z = r * np.cos(th)
            carry = r * np.sin(th)
        else:
            z = carry
        acc += sig * z
        w[i + 1] = acc


# ---------------------------------------------------------- complex sqrt

@njit(cache=True, inline="always")
def _sqrt_upper(x, y):
    # square root of x + iy with nonnegative imaginary part
    r = np.sqrt(x * x + y * y)
    if x >= 0.0:
        u = np.sqrt(0.5 * (r + x))
        v = y / (2.0 * u) if u > 0.0 else 0.0
    else:
        av = np.sqrt(0.5 * (r - x))
        v = av if y >= 0.0 else -av
        u = y / (2.0 * v) if v != 0.0 else 0.0
    if v < 0.0:
        u = -u
        v = -v
    return u, v


@njit(cache=True, inline="always")
def _zip_step(bx, by, dwi, dt):
    # inverse slit step: b -> dw_increment + sqrt(b^2 - 4 dt)
    zr = bx * bx - by * by - 4.0 * dt
    zi = 2.0 * bx * by
    u, v = _sqrt_upper(zr, zi)
    return dwi + u, v


# ----------------------------------------------------------------- trace

@njit(cache=True, parallel=True)
def trace_kernel(w, dt, out):
    """Zipper trace for driving values w[0..n]; out[k] = gamma(k dt)."""
    n = w.shape[0] - 1
    out[0] = 0.0 + 0.0j
    nblocks = (n + 3) // 4
    for blk in prange(nblocks):
        k0 = 1 + 4 * blk
        kend = min(k0 + 3, n)
        b0x = 0.0; b0y = 0.0
        b1x = 0.0; b1y = 0.0
        b2x = 0.0; b2y = 0.0
        b3x = 0.0; b3y = 0.0
        for j in range(kend, 0, -1):
            d = w[j] - w[j - 1]
            if j <= k0:
                b0x, b0y = _zip_step(b0x, b0y, d, dt)
            if j <= k0 + 1:
                b1x, b1y = _zip_step(b1x, b1y, d, dt)
            if j <= k0 + 2:
                b2x, b2y = _zip_step(b2x, b2y, d, dt)
            if j <= k0 + 3:
                b3x, b3y = _zip_step(b3x, b3y, d, dt)
        out[k0] = complex(b0x, b0y if b0y > 0.0 else 0.0)
        if k0 + 1 <= n:
            out[k0 + 1] = complex(b1x, b1y if b1y > 0.0 else 0.0)
        if k0 + 2 <= n:
            out[k0 + 2] = complex(b2x, b2y if b2y > 0.0 else 0.0)
        if k0 + 3 <= n:
            out[k0 + 3] = complex(b3x, b3y if b3y > 0.0 else 0.0)


@njit(cache=True, parallel=True)
def min_dist_batch(master, n_paths, kappa, dt, n, tx, ty, out_mind, out_gap):
    """Ensemble of zipper traces; per path and target point, the minimum
    vertex distance and the consecutive-vertex gap at the minimizing index.

    out_mind, out_gap: float64 (n_paths, n_targets).
    """
    nt = tx.shape[0]
    sig = np.sqrt(kappa * dt)
    for p in prange(n_paths):
        base = _stream_seed(master, p)
        w = np.empty(n + 1)
        _fill_driving(base, sig, w)
        gx = np.empty(4)
        gy = np.empty(4)
        best = np.empty(nt)
        bestg = np.zeros(nt)
        for t in range(nt):
            best[t] = np.sqrt(tx[t] * tx[t] + ty[t] * ty[t])  # gamma_0 = 0
        px = 0.0
        py = 0.0
        for k0 in range(1, n + 1, 4):
            kend = min(k0 + 3, n)
            nl = kend - k0 + 1
            b0x = 0.0; b0y = 0.0
            b1x = 0.0; b1y = 0.0
            b2x = 0.0; b2y = 0.0
            b3x = 0.0; b3y = 0.0
            for j in range(kend, 0, -1):
                d = w[j] - w[j - 1]
                if j <= k0:
                    b0x, b0y = _zip_step(b0x, b0y, d, dt)
                if j <= k0 + 1:
                    b1x, b1y = _zip_step(b1x, b1y, d, dt)
                if j <= k0 + 2:
                    b2x, b2y = _zip_step(b2x, b2y, d, dt)
                if j <= k0 + 3:
                    b3x, b3y = _zip_step(b3x, b3y, d, dt)
            gx[0] = b0x; gy[0] = b0y
            gx[1] = b1x; gy[1] = b1y
            gx[2] = b2x; gy[2] = b2y
            gx[3] = b3x; gy[3] = b3y
            for i in range(nl):
                xx = gx[i]
                yy = gy[i] if gy[i] > 0.0 else 0.0
                dpx = xx - px
                dpy = yy - py
                gap = np.sqrt(dpx * dpx + dpy * dpy)
                for t in range(nt):
                    ddx = xx - tx[t]
                    ddy = yy - ty[t]
                    dd = np.sqrt(ddx * ddx + ddy * ddy)
                    if dd < best[t]:
                        best[t] = dd
                        bestg[t] = gap
                px = xx
                py = yy
        for t in range(nt):
            out_mind[p, t] = best[t]
            out_gap[p, t] = bestg[t]


# ----------------------------------------------------- forward tracking

@njit(cache=True)
def track_kernel(w, dt, zx, zy, tol_abs, tol_im, cut_tol, im_active):
    """Forward slit-map flow of one interior point.

    Returns (x, y, log_deriv, swallow_step); swallow_step = -1 if the point
    survives to the horizon.  Swallowing triggers on (a) image within
    tol_abs*sqrt(dt) of the driving position, (b) square-root argument
    within relative cut_tol of the segment [0, 4 dt] -- the image of the
    removed slit, the map's only singular locus -- or, only when
    im_active, i.e. in the non-simple phase kappa > 4, (c) collapse of the
    image's imaginary part below tol_im*sqrt(dt).
    """
    n = w.shape[0] - 1
    sq = np.sqrt(dt)
    x = zx
    y = zy
    logd = 0.0
    for k in range(1, n + 1):
        dw = w[k]
        ux = x - dw
        uy = y
        zr = ux * ux - uy * uy + 4.0 * dt
        zi = 2.0 * ux * uy
        sx, sy = _sqrt_upper(zr, zi)
        nx = dw + sx
        ny = sy
        slack = cut_tol * 4.0 * dt
        if np.abs(zi) <= slack and -slack <= zr <= 4.0 * dt + slack:
            return nx, ny, logd, k
        if np.sqrt(sx * sx + sy * sy) < tol_abs * sq:
            return nx, ny, logd, k
        if im_active and ny < tol_im * sq:
            return nx, ny, logd, k
        # chain rule: step derivative is u / sqrt(u^2 + 4 dt)
        logd += 0.5 * np.log((ux * ux + uy * uy) / (sx * sx + sy * sy))
        x = nx
        y = ny
    return x, y, logd, -1


@njit(cache=True, parallel=True)
def swallow_grid_kernel(w, dt, gx, gy, tol_abs, tol_im, cut_tol, im_active, out_step):
    for i in prange(gx.shape[0]):
        x, y, logd, st = track_kernel(w, dt, gx[i], gy[i], tol_abs, tol_im,
                                      cut_tol, im_active)
        out_step[i] = st


# ------------------------------------------------------ angular diffusion

@njit(cache=True, inline="always")
def _alpha_run(base, kappa, alpha0, ds, n_steps, eps_b, drift_cap, samples, record):
    sq = np.sqrt(kappa * ds)
    half = 0.5 * (kappa - 4.0)
    hi = _TWOPI - eps_b
    a = alpha0
    if record:
        samples[0] = a
    carry = 0.0
    for i in range(n_steps):
        if (i & 1) == 0:
            m = i >> 1
            u0 = _unif(base, 4 * m)
            u1 = _unif(base, 4 * m + 1)
            r = np.sqrt(-2.0 * np.log(1.0 - u0))
            th = _TWOPI * u1
            z = r * np.cos(th)
            carry = r * np.sin(th)
        else:
            z = carry
        drift = half / np.tan(0.5 * a) * ds
        if drift > drift_cap:
            drift = drift_cap
        elif drift < -drift_cap:
            drift = -drift_cap
        a = a + sq * z + drift
        if a <= eps_b or a >= hi:
            a = 0.0 if a <= eps_b else _TWOPI
            if record:
                samples[i + 1] = a
            return a, i + 1
        if record:
            samples[i + 1] = a
    return a, -1


@njit(cache=True)
def alpha_path_kernel(base, kappa, alpha0, ds, n_steps, eps_b, drift_cap, samples):
    a, st = _alpha_run(base, kappa, alpha0, ds, n_steps, eps_b, drift_cap, samples, True)
    return st


@njit(cache=True, parallel=True)
def alpha_ensemble(master, n_paths, kappa, alpha0, ds, n_steps, eps_b, drift_cap,
                   absorb_step, alpha_final):
    dummy = np.empty(1)
    for p in prange(n_paths):
        base = _stream_seed(master, p)
        a, st = _alpha_run(base, kappa, alpha0, ds, n_steps, eps_b, drift_cap, dummy, False)
        absorb_step[p] = st
        alpha_final[p] = a
