import math

import numpy as np
import pytest

from slefrac import loewner
from slefrac.errors import ParameterError, StateError


def zero_driving(kappa, horizon, steps):
    return loewner.DrivingPath(kappa=kappa, dt=horizon / steps,
                               values=np.zeros(steps + 1))


# ------------------------------------------------------------ sample_driving

def test_sample_driving_shape_and_start():
    d = loewner.sample_driving(2.0, 1.0, 4, seed=7)
    assert len(d.values) == 5
    assert d.values[0] == 0.0
    assert d.dt == 0.25
    assert d.horizon == 1.0


def test_sample_driving_deterministic():
    a = loewner.sample_driving(2.0, 1.0, 64, seed=7)
    b = loewner.sample_driving(2.0, 1.0, 64, seed=7)
    assert np.array_equal(a.values, b.values)


@pytest.mark.parametrize("kappa,horizon,steps", [(-1, 1, 4), (0, 1, 4),
                                                 (2, 0, 4), (2, 1, 0)])
def test_sample_driving_parameter_errors(kappa, horizon, steps):
    with pytest.raises(ParameterError):
        loewner.sample_driving(kappa, horizon, steps, seed=1)


def test_single_step_increment_is_gaussian_scale():
    vals = np.array([loewner.sample_driving(3.0, 0.5, 1, seed=s).values[1]
                     for s in range(4000)])
    assert abs(vals.mean()) < 4.0 * math.sqrt(3.0 * 0.5 / 4000)
    assert abs(vals.var() - 1.5) < 4.0 * 1.5 * math.sqrt(2.0 / 4000)


def test_endpoint_variance_matches_kappa_t():
    # variance of W_n over many seeds ~ kappa * horizon
    kappa, horizon = 2.0, 1.0
    n = 100_000
    w_end = np.array([loewner.sample_driving(kappa, horizon, 4, seed=9, path_index=j)
                      .values[-1] for j in range(n)])
    var = w_end.var()
    stderr = kappa * horizon * math.sqrt(2.0 / n)
    assert abs(var - kappa * horizon) < 3.0 * stderr


# ---------------------------------------------------------- slit_map_forward

def test_slit_map_closed_forms():
    assert loewner.slit_map_forward(2j, 1.0, 0.0) == 0j
    assert abs(loewner.slit_map_forward(3j, 1.0, 0.0) - 1j * math.sqrt(5)) < 1e-15


def test_slit_map_upper_branch():
    z = loewner.slit_map_forward(-0.3 + 0.5j, 0.01, 0.2)
    assert z.imag >= 0.0


def test_slit_map_large_z_expansion():
    # result - z - 2 dt / z = O(|z|^-2)
    dt, dw = 1.0, 0.7
    errs = []
    for mod in (1e2, 1e3):
        z = mod * np.exp(1j * 0.9)
        out = loewner.slit_map_forward(z, dt, dw)
        errs.append(abs(out - z - 2.0 * dt / z))
    assert errs[0] < 1e-3
    ratio = errs[0] / errs[1]
    assert 30.0 < ratio < 300.0  # ~ |z|^-2 decay


def test_slit_map_rejects_bad_input():
    with pytest.raises(ParameterError):
        loewner.slit_map_forward(1 - 1j, 0.1, 0.0)
    with pytest.raises(ParameterError):
        loewner.slit_map_forward(1j, 0.0, 0.0)


# -------------------------------------------------------------- compute_trace

def test_zero_driving_trace_is_sqrt_law():
    d = zero_driving(2.0, 1.0, 4096)
    trace = loewner.compute_trace(d)
    expect = 2j * np.sqrt(trace.times)
    assert np.max(np.abs(trace.points - expect)) < 1e-9


def test_trace_stays_in_closed_half_plane():
    d = loewner.sample_driving(8.0 / 3.0, 1.0, 2048, seed=11)
    trace = loewner.compute_trace(d)
    assert trace.points[0] == 0j
    assert np.all(trace.points.imag >= 0.0)


def test_reflection_negates_real_parts():
    d = loewner.sample_driving(8.0 / 3.0, 1.0, 512, seed=3)
    flipped = loewner.DrivingPath(kappa=d.kappa, dt=d.dt, values=-d.values)
    a = loewner.compute_trace(d).points
    b = loewner.compute_trace(flipped).points
    assert np.array_equal(a.real, -b.real)
    assert np.array_equal(a.imag, b.imag)


def test_loewner_scaling_by_two():
    # (dt, W) -> (4 dt, 2 W) scales the trace by exactly 2
    d = loewner.sample_driving(6.0, 1.0, 512, seed=5)
    scaled = loewner.DrivingPath(kappa=d.kappa, dt=4.0 * d.dt, values=2.0 * d.values)
    a = loewner.compute_trace(d).points
    b = loewner.compute_trace(scaled).points
    np.testing.assert_allclose(b, 2.0 * a, rtol=1e-12, atol=1e-15)


def test_refinement_shrinks_mesh():
    # max consecutive gap decreases under refinement at fixed horizon;
    # averaged over seeds since each step count draws a fresh realization
    def mean_mesh(steps):
        return np.mean([loewner.compute_trace(
            loewner.sample_driving(8.0 / 3.0, 1.0, steps, seed=21 + s)).mesh()
            for s in range(3)])

    coarse = mean_mesh(512)
    fine = mean_mesh(8192)
    assert fine < 0.5 * coarse


def test_capacity_expansion_at_large_z():
    # g_T(z) = z + 2T/z + O(|z|^-2)
    d = loewner.sample_driving(8.0 / 3.0, 1.0, 1024, seed=3)
    errs = []
    for mod in (1e2, 1e3):
        p = loewner.track_point(d, mod * 1j)
        assert p.swallowed_at is None
        errs.append(abs(p.image - mod * 1j - 2.0 * d.horizon / (mod * 1j)))
    assert errs[1] < 1e-4
    assert 20.0 < errs[0] / errs[1] < 500.0


# ---------------------------------------------------------------- track_point

def test_track_point_zero_driving_closed_form():
    d = zero_driving(2.0, 1.0, 4096)
    p = loewner.track_point(d, 3j)
    # g_1(3i) = i sqrt(5), g_1'(3i) = 3i / (i sqrt 5) = 3/sqrt(5)
    assert abs(p.image - 1j * math.sqrt(5)) < 1e-10
    assert abs(p.deriv_modulus - 3.0 / math.sqrt(5)) < 1e-10
    assert p.swallowed_at is None
    lo, hi = loewner.conformal_distance_bounds(p)
    q = math.sqrt(5) / (3.0 / math.sqrt(5))  # = 5/3
    assert abs(lo - q / 4.0) < 1e-9 and abs(hi - 4.0 * q) < 1e-9
    # true distance from 3i to the slit [0, 2i] union R is 1
    assert lo <= 1.0 <= hi


def test_track_point_exact_hit_is_swallowed():
    d = zero_driving(2.0, 1.0, 1)
    p = loewner.track_point(d, 2j)
    assert p.swallowed_at == 1.0
    assert abs(p.image) < 1e-12


def test_track_point_monotone_imaginary_part():
    d = loewner.sample_driving(6.0, 2.0, 256, seed=13)
    z = 0.3 + 0.8j
    ims = [z.imag]
    cur = z
    for k in range(1, 257):
        cur = loewner.slit_map_forward(cur, d.dt, d.values[k])
        ims.append(cur.imag)
        if cur.imag <= 0:
            break
    assert all(b <= a + 1e-15 for a, b in zip(ims, ims[1:]))


def test_track_point_rejects_boundary():
    d = zero_driving(2.0, 1.0, 8)
    with pytest.raises(ParameterError):
        loewner.track_point(d, 1.0 + 0.0j)


def test_simple_phase_never_swallows():
    for seed in range(25):
        d = loewner.sample_driving(2.0, 10.0, 4096, seed=seed)
        assert loewner.track_point(d, 1j).swallowed_at is None


def test_nonsimple_phase_swallows_often():
    hits = 0
    for seed in range(40):
        d = loewner.sample_driving(6.0, 10.0, 10_000, seed=seed)
        if loewner.track_point(d, 1j).swallowed_at is not None:
            hits += 1
    assert hits >= 16  # detector is conservative; true rate is higher


def test_bounds_raise_for_swallowed():
    d = zero_driving(2.0, 1.0, 1)
    p = loewner.track_point(d, 2j)
    with pytest.raises(StateError):
        loewner.conformal_distance_bounds(p)


def test_bounds_at_time_zero():
    p = loewner.TrackedPoint(origin=0.5j, image=0.5j, log_deriv=0.0,
                             swallowed_at=None)
    lo, hi = loewner.conformal_distance_bounds(p)
    assert lo == 0.125 and hi == 2.0
    assert lo <= 0.5 <= hi  # distance to the empty hull union R


def test_conformal_bounds_contain_trace_distance():
    # distance to trace union R within [q/4, 4q] for nearly all samples
    trials = ok = 0
    pts = [0.4 + 0.9j, -0.6 + 1.3j, 0.1 + 0.5j]
    for kappa in (2.0, 8.0 / 3.0, 6.0):
        for seed in range(40):
            d = loewner.sample_driving(kappa, 4.0, 2048, seed=100 + seed)
            trace = loewner.compute_trace(d)
            for z in pts:
                p = loewner.track_point(d, z)
                if p.swallowed_at is not None:
                    continue
                lo, hi = loewner.conformal_distance_bounds(p)
                dist = min(loewner.trace_distance(trace, z), z.imag)
                trials += 1
                ok += (lo <= dist <= hi)
    assert trials > 150
    assert ok / trials >= 0.99


# -------------------------------------------------------------- trace_distance

def test_trace_distance_basics():
    t = loewner.TracePath(kappa=2.0, dt=1.0, points=np.array([0j, 1j]))
    assert loewner.trace_distance(t, 1j) == 0.0
    t2 = loewner.TracePath(kappa=2.0, dt=1.0, points=np.array([0j]))
    assert loewner.trace_distance(t2, 3 + 4j) == 5.0


def test_trace_distance_zero_driving_segment():
    d = zero_driving(2.0, 1.0, 4096)
    trace = loewner.compute_trace(d)
    dist = loewner.trace_distance(trace, 1 + 1j)
    assert abs(dist - 1.0) < 2.0 * trace.mesh()


def test_trace_distance_empty():
    with pytest.raises(ParameterError):
        loewner.trace_distance(np.array([], dtype=complex), 1j)
