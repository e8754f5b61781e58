import numpy as np
import pytest
from hypothesis import given, strategies as st

import geoexp as gx
from geoexp import holonomy as hol
from geoexp.tracer import TraceParams, radial_trace

NO_MC = gx.SmoothingConfig(enabled=False)


def sphere_front(m, r):
    """Analytic front on the unit sphere at polar radius r: points, radial
    tangents, outward normals."""
    beta = 2 * np.pi * np.arange(m) / m
    pts = np.column_stack([np.sin(r) * np.cos(beta), np.sin(r) * np.sin(beta),
                           np.full(m, np.cos(r))])
    tans = np.column_stack([np.cos(r) * np.cos(beta), np.cos(r) * np.sin(beta),
                            np.full(m, -np.sin(r))])
    return pts, tans, pts.copy()


# --------------------------------------------------------------------------
# change_in_angles


def test_flat_front_angles():
    m = 8
    ang = 2 * np.pi * np.arange(m) / m
    pts = np.column_stack([np.cos(ang), np.sin(ang), np.zeros(m)])
    tans = pts.copy()
    normals = np.tile([0.0, 0.0, 1.0], (m, 1))
    front = gx.change_in_angles(pts, tans, normals)
    assert np.allclose(front.phi, -2 * np.pi / m, atol=1e-12)


def test_sphere_front_wedge_curvature_oracle():
    # wedge holonomy = spherical cap-sector area = (2*pi/m)(1 - cos r)
    m = 50
    for r in (0.1, 0.3, 0.5):
        pts, tans, normals = sphere_front(m, r)
        front = gx.change_in_angles(pts, tans, normals)
        R = gx.wedge_holonomy(np.zeros(m), front.phi, m)
        expected = (2 * np.pi / m) * (1 - np.cos(r))
        assert np.abs(R - expected).max() <= 0.02 * expected


def test_reversed_traversal_negates_angles():
    m = 12
    pts, tans, normals = sphere_front(m, 0.4)
    # make the front asymmetric so the test has teeth
    jitter = 0.02 * np.sin(3 * (2 * np.pi * np.arange(m) / m))
    tans = tans + jitter[:, None] * np.cross(normals, tans)
    tans /= np.linalg.norm(tans, axis=1)[:, None]
    fwd = gx.change_in_angles(pts, tans, normals).phi
    rev = gx.change_in_angles(pts[::-1], tans[::-1], normals[::-1]).phi
    for i in range(m):
        assert rev[i] == pytest.approx(-fwd[(m - 2 - i) % m], abs=1e-12)


# --------------------------------------------------------------------------
# wedge holonomy algebra


def test_wedge_holonomy_zero_on_flat():
    m = 6
    theta = np.zeros(m)
    phi = np.full(m, -2 * np.pi / m)
    assert np.allclose(gx.wedge_holonomy(theta, phi, m), 0.0, atol=1e-15)


def test_wedge_holonomy_direct_substitution():
    theta = np.zeros(4)
    phi = np.array([-1.5, -1.6, -1.5, -1.6])
    R = gx.wedge_holonomy(theta, phi, 4)
    assert np.allclose(R, phi + np.pi / 2, atol=1e-15)


@given(
    st.integers(min_value=3, max_value=40),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_total_holonomy_telescopes(m, seed):
    from geoexp import rng

    u = rng.uniforms(rng.derive_key(seed), 2 * m).reshape(2, m)
    theta = 2.0 * u[0] - 1.0
    phi = 2.0 * np.pi * (u[1] - 0.5)
    total = gx.wedge_holonomy(theta, phi, m).sum()
    assert total == pytest.approx(phi.sum() + 2 * np.pi, abs=1e-10)
    total0 = gx.wedge_holonomy(np.zeros(m), phi, m).sum()
    assert total == pytest.approx(total0, abs=1e-10)


# --------------------------------------------------------------------------
# wedge smoothing solve


def test_smoothing_constant_phi_gives_zero():
    sol = gx.wedge_smoothing_solve(np.full(10, -0.63), 1e3)
    assert np.allclose(sol.theta, 0.0, atol=1e-15)


def test_smoothing_small_kappa_limit():
    phi = np.array([-0.5, -0.7, -0.6, -0.55, -0.65])
    kappa = 1e-8
    sol = gx.wedge_smoothing_solve(phi, kappa)
    Phi = hol.angle_differences(phi)
    assert np.abs(sol.theta - kappa * Phi).max() <= 10 * kappa**2


def test_smoothing_matches_dense_oracle_m4():
    Phi = np.array([0.1, -0.1, 0.1, -0.1])
    phi = np.zeros(4)
    for i in range(1, 4):
        phi[i] = phi[i - 1] - Phi[i]
    assert np.allclose(hol.angle_differences(phi), Phi)
    sol = gx.wedge_smoothing_solve(phi, 1e3)
    L = 2 * np.eye(4) - np.roll(np.eye(4), 1, 0) - np.roll(np.eye(4), -1, 0)
    dense = np.linalg.solve(L + np.eye(4) / 1e3, Phi)
    assert np.abs(sol.theta - dense).max() <= 1e-12


@given(
    st.integers(min_value=3, max_value=80),
    st.floats(min_value=1e-3, max_value=1e9),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_cyclic_solve_matches_dense(m, kappa, seed):
    from geoexp import rng

    rhs = rng.uniforms(rng.derive_key(seed, 1), m) - 0.5
    x = hol.solve_regularized_laplacian(rhs, kappa)
    L = 2 * np.eye(m) - np.roll(np.eye(m), 1, 0) - np.roll(np.eye(m), -1, 0)
    dense = np.linalg.solve(L + np.eye(m) / kappa, rhs)
    assert np.abs(x - dense).max() <= 1e-9 * max(1.0, np.abs(dense).max())


def test_smoothing_reduces_objective():
    from geoexp import rng

    m, kappa = 24, 1e3
    for trial in range(1000):
        phi = 2 * np.pi * (rng.uniforms(rng.derive_key(trial, 2), m) - 0.5)
        sol = gx.wedge_smoothing_solve(phi, kappa)

        def objective(theta):
            return float((gx.wedge_holonomy(theta, phi, m) ** 2).sum()
                         + (theta @ theta) / kappa)

        assert objective(sol.theta) <= objective(np.zeros(m)) + 1e-12


def test_total_holonomy_conserved_by_smoothing():
    from geoexp import rng

    m, kappa = 16, 1e3
    for trial in range(1000):
        phi = 2 * np.pi * (rng.uniforms(rng.derive_key(trial, 3), m) - 0.5)
        sol = gx.wedge_smoothing_solve(phi, kappa)
        before = gx.wedge_holonomy(np.zeros(m), phi, m).sum()
        after = gx.wedge_holonomy(sol.theta, phi, m).sum()
        assert abs(before - after) <= 1e-12 * max(1.0, abs(before))


def test_null_space_mean_pinned():
    from geoexp import rng

    m, kappa = 20, 1e3
    for trial in range(50):
        phi = 0.5 * (rng.uniforms(rng.derive_key(trial, 4), m) - 0.5)
        sol = gx.wedge_smoothing_solve(phi, kappa)
        bias = abs(sol.theta.sum())
        assert bias <= 1e-9 * m * max(np.abs(phi).max(), 1e-30)


@given(st.integers(min_value=3, max_value=60), st.integers(min_value=0, max_value=2**31))
def test_solve_symmetry_under_reversal(m, seed):
    from geoexp import rng

    rhs = rng.uniforms(rng.derive_key(seed, 5), m) - 0.5
    x = hol.solve_regularized_laplacian(rhs, 1e3)
    x_rev = hol.solve_regularized_laplacian(rhs[::-1].copy(), 1e3)
    assert np.abs(x_rev - x[::-1]).max() <= 1e-10


# --------------------------------------------------------------------------
# strip scheme diagnostic


def test_strip_flat_is_zero():
    m = 8
    phi = np.full(m, -2 * np.pi / m)
    sol = gx.strip_smoothing_solve(phi, phi, np.zeros(m), 1e3)
    assert np.allclose(sol.theta, 0.0, atol=1e-14)


def test_strip_single_step_equivalence():
    # with zero history the strip and wedge right-hand sides coincide
    phi1 = np.array([-0.7, -0.8, -0.75, -0.9, -0.85])
    phi0 = np.full(5, phi1.mean())  # constant previous front: Phi_0 = 0
    wedge = gx.wedge_smoothing_solve(phi1, 1e3)
    strip = gx.strip_smoothing_solve(phi1, phi0, np.zeros(5), 1e3)
    assert np.allclose(wedge.theta, strip.theta, atol=1e-14)


def test_strip_rotations_grow_on_dented_sphere(dented_sphere):
    params_w = TraceParams(m=50, n=20, h=0.01, smoothing_scheme="wedge")
    params_s = TraceParams(m=50, n=20, h=0.01, smoothing_scheme="strip")
    seed = [0.0, 0.0, 1.5]
    tr_w = radial_trace(dented_sphere, seed, params_w, NO_MC)
    tr_s = radial_trace(dented_sphere, seed, params_s, NO_MC)
    max_w = np.abs(tr_w.theta).max(axis=1)
    max_s = np.abs(tr_s.theta).max(axis=1)
    assert max_s[20] > max_w[20]
    assert max_s.max() >= 5.0 * max_w.max()
