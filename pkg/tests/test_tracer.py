import numpy as np
import pytest
from hypothesis import given, strategies as st

import geoexp as gx
from geoexp import implicit as imp
from geoexp.errors import AntipodalNormals, PathAborted, SeedFailure, TraceFailed
from geoexp.tracer import TraceParams, full_step, initial_tangents, radial_trace, seed_frame, solve_alignment
from geoexp.transport import transport_rotation


NO_MC = gx.SmoothingConfig(enabled=False)


class CapsuleField(gx.ImplicitSurface):
    """Distance to a segment minus a radius: a capsule SDF."""

    def __init__(self, a, b, radius):
        super().__init__()
        self.a = np.asarray(a, float)
        self.b = np.asarray(b, float)
        self.radius = radius

    def _closest(self, x):
        ab = self.b - self.a
        t = np.clip((x - self.a) @ ab / (ab @ ab), 0.0, 1.0)
        return self.a + t * ab

    def _value(self, x):
        return np.linalg.norm(x - self._closest(x)) - self.radius

    def _gradient(self, x):
        d = x - self._closest(x)
        return d / np.linalg.norm(d)


# --------------------------------------------------------------------------
# seed frame


def test_seed_frame_plane(plane_field):
    fr = seed_frame(plane_field, [0.0, 0.0, 0.5])
    assert np.allclose(fr.origin, [0, 0, 0], atol=1e-10)
    assert np.allclose(fr.normal, [0, 0, 1], atol=1e-10)


def test_seed_frame_sphere(sphere_sdf):
    fr = seed_frame(sphere_sdf, [0.0, 0.0, 3.0], NO_MC)
    assert np.allclose(fr.origin, [0, 0, 1], atol=1e-10)


def test_seed_frame_orthonormal_on_torus(torus_sdf):
    from geoexp import rng

    u = rng.uniforms(rng.derive_key(77), 300).reshape(100, 3) * 2.0 - 1.0
    for p in u:
        fr = seed_frame(torus_sdf, p, NO_MC)
        G = np.array([fr.e1, fr.e2, fr.normal])
        assert np.abs(G @ G.T - np.eye(3)).max() <= 1e-10
        assert np.allclose(np.cross(fr.e1, fr.e2), fr.normal, atol=1e-10)


def test_seed_frame_failure():
    class Bad(gx.ImplicitSurface):
        def _value(self, x):
            return 1.0

        def _gradient(self, x):
            return np.zeros(3)

    with pytest.raises(SeedFailure):
        seed_frame(Bad(), [0, 0, 0])


def test_seed_frame_reference_axis_fallback(plane_field):
    # on f=z the default x-axis reference works; force the parallel case
    class WallField(gx.ImplicitSurface):
        def _value(self, x):
            return x[0]

        def _gradient(self, x):
            return np.array([1.0, 0.0, 0.0])

    fr = seed_frame(WallField(), [0.5, 0.0, 0.0])
    assert np.allclose(fr.normal, [1, 0, 0], atol=1e-12)
    assert abs(fr.e1 @ fr.normal) <= 1e-12


# --------------------------------------------------------------------------
# initial tangents


def test_initial_tangents_m4(plane_field):
    fr = seed_frame(plane_field, [0, 0, 0])
    t = initial_tangents(fr, 4)
    expect = np.array([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], dtype=float)
    assert np.allclose(t, expect, atol=1e-12)


def test_initial_tangents_unit_and_tangent(sphere_sdf):
    fr = seed_frame(sphere_sdf, [0.3, -0.2, 2.0], NO_MC)
    t = initial_tangents(fr, 50)
    assert np.abs(np.linalg.norm(t, axis=1) - 1).max() <= 1e-12
    assert np.abs(t @ fr.normal).max() <= 1e-12
    ang = np.arctan2(t @ fr.e2, t @ fr.e1)
    gaps = np.diff(np.unwrap(ang))
    assert np.abs(gaps - 2 * np.pi / 50).max() <= 1e-9


# --------------------------------------------------------------------------
# transport


def test_transport_identity():
    n = np.array([0.0, 0.0, 1.0])
    assert np.array_equal(transport_rotation(n, n), np.eye(3))


def _rodrigues(axis, angle):
    axis = axis / np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


def test_transport_quarter_turn_matches_rodrigues_oracle():
    R = transport_rotation([0, 0, 1], [1, 0, 0])
    assert np.allclose(R @ [0, 0, 1], [1, 0, 0], atol=1e-12)
    assert np.allclose(R @ [1, 0, 0], [0, 0, -1], atol=1e-12)
    oracle = _rodrigues(np.array([0.0, 1.0, 0.0]), np.pi / 2)
    assert np.allclose(R, oracle, atol=1e-12)


def test_transport_orthogonal_random_pairs():
    from geoexp import rng

    u = rng.uniforms(rng.derive_key(5), 6000).reshape(1000, 6)
    a = u[:, :3] * 2 - 1
    b = u[:, 3:] * 2 - 1
    a /= np.linalg.norm(a, axis=1)[:, None]
    b /= np.linalg.norm(b, axis=1)[:, None]
    for i in range(len(a)):
        if a[i] @ b[i] <= -1 + 1e-9:
            continue
        R = transport_rotation(a[i], b[i])
        assert np.abs(R.T @ R - np.eye(3)).max() <= 1e-12
        assert np.allclose(R @ a[i], b[i], atol=1e-12)


def test_transport_antipodal_raises():
    with pytest.raises(AntipodalNormals):
        transport_rotation([0, 0, 1], [0, 0, -1])


# --------------------------------------------------------------------------
# alignment solve


def test_alignment_plane_returns_upper_bound(plane_field):
    l = solve_alignment(plane_field, np.zeros(3), np.array([1.0, 0, 0]), 0.7, 1 / np.sqrt(2))
    assert l == 0.7


def test_alignment_sphere_closed_form(sphere_sdf):
    # cos of projected-normal angle = 1/sqrt(1+l^2); equals s at l = 1
    l = solve_alignment(
        sphere_sdf, np.array([0.0, 0, 1.0]), np.array([1.0, 0, 0]), 2.0, 1 / np.sqrt(2),
        smoothing=NO_MC,
    )
    assert abs(l - 1.0) <= 1e-7


def test_alignment_sphere_no_crossing_inside_bound(sphere_sdf):
    l = solve_alignment(
        sphere_sdf, np.array([0.0, 0, 1.0]), np.array([1.0, 0, 0]), 0.5, 1 / np.sqrt(2),
        smoothing=NO_MC,
    )
    assert l == 0.5


# --------------------------------------------------------------------------
# full step


def test_full_step_plane_exact(plane_field):
    params = TraceParams(m=4, n=1, h=0.1)
    t = np.array([0.6, 0.8, 0.0])
    q, tn, count, _ = full_step(plane_field, np.zeros(3), t, 0.1, params)
    assert np.allclose(q, 0.1 * t, atol=1e-12)
    assert np.allclose(tn, t, atol=1e-12)
    assert count == 1


def test_full_step_sphere_arc_length(sphere_sdf):
    params = TraceParams(m=4, n=1, h=0.01)
    q, tn, count, _ = full_step(
        sphere_sdf, np.array([0.0, 0, 1.0]), np.array([1.0, 0, 0]), 0.01, params, NO_MC
    )
    arc = np.arccos(np.clip(q @ [0, 0, 1.0], -1, 1))
    assert 0.99 * 0.01 <= arc <= 1.01 * 0.01
    assert abs(np.linalg.norm(tn) - 1) <= 1e-12
    assert abs(tn @ q) <= 1e-8


def test_full_step_substep_counts(sphere_sdf):
    params = TraceParams(m=4, n=1, h=0.1)
    _, _, count, _ = full_step(
        sphere_sdf, np.array([0.0, 0, 1.0]), np.array([1.0, 0, 0]), 0.1, params, NO_MC
    )
    assert count == 1  # alignment never triggers on the unit sphere at h <= 0.1
    capsule = CapsuleField([-0.5, 0, 0], [0.5, 0, 0], 0.05)
    q0 = np.array([0.0, 0.0, 0.05])
    t0 = np.array([0.0, 1.0, 0.0])  # circumferential: normal curvature 1/0.05
    _, _, count2, _ = full_step(capsule, q0, t0, 0.1, params, NO_MC)
    assert count2 >= 2


class SteepConeField(gx.ImplicitSurface):
    """z = c * rho cone: the apex is a normal singularity that stalls paths."""

    def __init__(self, c=5.0):
        super().__init__()
        self.c = c

    def _value(self, x):
        return float(x[2] - self.c * np.hypot(x[0], x[1]))

    def _gradient(self, x):
        rho = np.hypot(x[0], x[1])
        if rho < 1e-300:
            return np.array([0.0, 0.0, 1.0])
        return np.array([-self.c * x[0] / rho, -self.c * x[1] / rho, 1.0])


def test_full_step_stall_aborts():
    # a path aimed at the cone apex keeps finding alignment crossings at
    # ever-shorter lengths and stalls below the substep floor
    cone = SteepConeField(c=5.0)
    q = np.array([0.2, 0.0, 1.0])
    t = np.array([-1.0, 0.0, -5.0]) / np.sqrt(26.0)
    params = TraceParams(m=4, n=1, h=1.5)
    with pytest.raises(PathAborted):
        full_step(cone, q, t, 1.5, params, NO_MC)


# --------------------------------------------------------------------------
# radial trace


def test_radial_trace_plane_exact(plane_field):
    params = TraceParams(m=4, n=2, h=0.1, substepping_enabled=False)
    tr = radial_trace(plane_field, [0, 0, 0.5], params)
    t0 = initial_tangents(tr.frame, 4)
    for i in range(4):
        for j in range(3):
            assert np.allclose(tr.points[i, j], tr.frame.origin + j * 0.1 * t0[i], atol=1e-12)
    assert np.allclose(tr.phi[1:], -2 * np.pi / 4, atol=1e-9)
    assert np.allclose(tr.theta, 0.0, atol=1e-9)


def test_radial_trace_grid_shape_distinct_points(sphere_sdf):
    params = TraceParams(m=6, n=3, h=0.05, smoothing_enabled=False)
    tr = radial_trace(sphere_sdf, [0, 0, 2.0], params, NO_MC)
    pts = {tuple(np.round(tr.points[i, j], 12)) for i in range(6) for j in range(4)}
    assert len(pts) == 6 * 3 + 1


def test_radial_trace_sphere_accuracy_vs_analytic(sphere_sdf):
    # smoothing off: traced points against the analytic exponential map
    params = TraceParams(m=10, n=40, h=0.01, smoothing_enabled=False, substepping_enabled=False)
    tr = radial_trace(sphere_sdf, [0, 0, 1.0], params, NO_MC)
    t0 = initial_tangents(tr.frame, 10)
    errs = []
    for i in range(10):
        for j in range(41):
            r = j * 0.01
            exact = np.cos(r) * tr.frame.origin + np.sin(r) * t0[i]
            errs.append(np.linalg.norm(tr.points[i, j] - exact))
    assert np.mean(errs) <= 1e-4


def test_radial_trace_invariants_sphere_torus(sphere_sdf, torus_sdf):
    for surface, seed in ((sphere_sdf, [0, 0, 2.0]), (torus_sdf, [1.2, 0, 0])):
        params = TraceParams(m=12, n=10, h=0.01)
        tr = radial_trace(surface, seed, params, NO_MC)
        tol = gx.ProjectionConfig().tolerance
        for i in range(12):
            for j in range(11):
                assert abs(surface.eval(tr.points[i, j])) <= 10 * tol
        chords = np.linalg.norm(np.diff(tr.points, axis=1), axis=2)
        assert chords.min() >= 0.5 * 0.01
        assert chords.max() <= 1.05 * 0.01
        for i in range(12):
            for j in range(1, 11):
                n = gx.normal(surface, tr.points[i, j], NO_MC)
                assert abs(tr.tangents[i, j] @ n) <= 1e-6


def test_radial_trace_determinism(torus_sdf):
    params = TraceParams(m=8, n=5, h=0.01)
    sm = gx.SmoothingConfig(seed=99)
    a = radial_trace(torus_sdf, [1.1, 0.05, 0.02], params, sm)
    b = radial_trace(torus_sdf, [1.1, 0.05, 0.02], params, sm)
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.tangents, b.tangents)
    assert np.array_equal(a.phi, b.phi)
    assert np.array_equal(a.theta, b.theta)


class WalledPlane(gx.ImplicitSurface):
    """Plane z=0 whose field degenerates (constant, zero gradient) past a
    wall: projection beyond the wall cannot converge."""

    def __init__(self, wall):
        super().__init__()
        self.wall = wall

    def _value(self, x):
        return 1.0 if x[0] > self.wall else float(x[2])

    def _gradient(self, x):
        if x[0] > self.wall:
            return np.zeros(3)
        return np.array([0.0, 0.0, 1.0])


def test_radial_trace_truncation_policy():
    # only the 3 directions aimed nearly straight at the wall truncate
    field = WalledPlane(wall=0.195)
    params = TraceParams(m=50, n=4, h=0.05, smoothing_enabled=False)
    tr = radial_trace(field, [0, 0, 0], params, NO_MC)
    truncated = tr.completed_steps < 4
    assert 1 <= truncated.sum() <= 5
    assert tr.completed_steps.max() == 4
    i_bad = int(tr.completed_steps.argmin())
    j_stop = tr.completed_steps[i_bad]
    # frozen rows replicate the last good point
    assert np.array_equal(tr.points[i_bad, j_stop], tr.points[i_bad, 4])
    assert tr.n_complete == tr.completed_steps.min()


def test_radial_trace_fails_when_too_many_paths_truncate():
    field = WalledPlane(wall=0.08)
    params = TraceParams(m=50, n=4, h=0.05, smoothing_enabled=False)
    with pytest.raises(TraceFailed):
        radial_trace(field, [0, 0, 0], params, NO_MC)


@given(st.integers(min_value=3, max_value=64))
def test_initial_tangent_count(m):
    frame = gx.TangentFrame(
        origin=np.zeros(3),
        normal=np.array([0.0, 0.0, 1.0]),
        e1=np.array([1.0, 0.0, 0.0]),
        e2=np.array([0.0, 1.0, 0.0]),
    )
    t = initial_tangents(frame, m)
    assert t.shape == (m, 3)
    assert np.abs(np.linalg.norm(t, axis=1) - 1).max() <= 1e-12
