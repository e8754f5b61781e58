"""Parameterization quality measures on uv-equipped triangle meshes, plus the
analytic-sphere accuracy experiment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import implicit as imp
from .implicit import ProjectionConfig, SmoothingConfig
from .splinemap import LocalMap, fit
from .tracer import TraceParams, TraceResult, radial_trace

DEGENERATE_UV_AREA = 1e-14


@dataclass(frozen=True)
class EnergyReport:
    """Per-triangle energies with area-weighted aggregates.

    Degenerate uv triangles are skipped and counted (their energy is NaN);
    `flipped_triangles` counts orientation-reversing maps.
    """

    energies: np.ndarray
    areas: np.ndarray  # 3D areas
    weighted_mean: float
    median: float
    max: float
    degenerate_triangles: int
    flipped_triangles: int


def _corner_arrays(uv, positions, triangles):
    uv = np.asarray(uv, dtype=np.float64)
    positions = np.asarray(positions, dtype=np.float64)
    triangles = np.asarray(triangles, dtype=np.int64)
    return uv[triangles], positions[triangles]


def _jacobians(uv_corners: np.ndarray, pos_corners: np.ndarray):
    """2x2 Jacobians of the uv->3D triangle maps, with the 3D triangle laid
    out isometrically in the plane. Returns (J, areas3d, valid_mask)."""
    e1uv = uv_corners[:, 1] - uv_corners[:, 0]
    e2uv = uv_corners[:, 2] - uv_corners[:, 0]
    det_uv = e1uv[:, 0] * e2uv[:, 1] - e1uv[:, 1] * e2uv[:, 0]
    valid = np.abs(det_uv) * 0.5 >= DEGENERATE_UV_AREA

    e1 = pos_corners[:, 1] - pos_corners[:, 0]
    e2 = pos_corners[:, 2] - pos_corners[:, 0]
    l1 = np.linalg.norm(e1, axis=1)
    cross = np.cross(e1, e2)
    areas3d = 0.5 * np.linalg.norm(cross, axis=1)
    # isometric layout: P1 = (|e1|, 0), P2 = (e2.e1/|e1|, 2A/|e1|)
    safe_l1 = np.where(l1 > 0, l1, 1.0)
    x2 = np.einsum("ij,ij->i", e2, e1) / safe_l1
    y2 = 2.0 * areas3d / safe_l1
    # J = L U^-1 with L = [[l1, x2], [0, y2]], U = [[e1uv, e2uv]] columns
    inv_det = np.where(valid, 1.0 / np.where(valid, det_uv, 1.0), 0.0)
    J = np.empty((len(det_uv), 2, 2))
    J[:, 0, 0] = (l1 * e2uv[:, 1] - x2 * e1uv[:, 1]) * inv_det
    J[:, 0, 1] = (-l1 * e2uv[:, 0] + x2 * e1uv[:, 0]) * inv_det
    J[:, 1, 0] = (-y2 * e1uv[:, 1]) * inv_det
    J[:, 1, 1] = (y2 * e1uv[:, 0]) * inv_det
    return J, areas3d, valid


def _report(energies: np.ndarray, areas: np.ndarray, valid: np.ndarray, flipped: int) -> EnergyReport:
    energies = np.where(valid, energies, np.nan)
    ok = valid & np.isfinite(energies)
    if not ok.any():
        return EnergyReport(energies, areas, np.nan, np.nan, np.nan, int((~valid).sum()), flipped)
    w = areas[ok]
    e = energies[ok]
    wm = float((e * w).sum() / w.sum()) if w.sum() > 0 else float(e.mean())
    return EnergyReport(
        energies=energies,
        areas=areas,
        weighted_mean=wm,
        median=float(np.median(e)),
        max=float(e.max()),
        degenerate_triangles=int((~valid).sum()),
        flipped_triangles=flipped,
    )


def symmetric_dirichlet(uv, positions, triangles) -> EnergyReport:
    """||J||_F^2 + ||J^-1||_F^2 per triangle; 4 exactly for isometries."""
    uvc, pc = _corner_arrays(uv, positions, triangles)
    return symmetric_dirichlet_corners(uvc, pc)


def symmetric_dirichlet_corners(uv_corners, pos_corners) -> EnergyReport:
    J, areas, valid = _jacobians(np.asarray(uv_corners, float), np.asarray(pos_corners, float))
    fro2 = np.einsum("ijk,ijk->i", J, J)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    small = np.abs(det) < 1e-300
    valid = valid & ~small
    det_safe = np.where(small, 1.0, det)
    energies = fro2 + fro2 / (det_safe * det_safe)  # ||J^-1||_F^2 = ||J||_F^2 / det^2
    flipped = int((valid & (det < 0)).sum())
    return _report(energies, areas, valid, flipped)


def lscm_energy(uv, positions, triangles) -> EnergyReport:
    """Conformal deviation (sigma1 - sigma2)^2 / 2 per triangle, with the
    second singular value signed by orientation; zero iff a similarity."""
    uvc, pc = _corner_arrays(uv, positions, triangles)
    return lscm_energy_corners(uvc, pc)


def lscm_energy_corners(uv_corners, pos_corners) -> EnergyReport:
    J, areas, valid = _jacobians(np.asarray(uv_corners, float), np.asarray(pos_corners, float))
    a, b = J[:, 0, 0], J[:, 0, 1]
    c, d = J[:, 1, 0], J[:, 1, 1]
    # sigma1 - signed sigma2 = 2 sqrt(F^2 + G^2) with F=(a-d)/2, G=(b+c)/2
    anti2 = (a - d) ** 2 + (b + c) ** 2
    energies = anti2 / 2.0
    det = a * d - b * c
    flipped = int((valid & (det < 0)).sum())
    return _report(energies, areas, valid, flipped)


def mapmesh_energies(mesh) -> tuple[EnergyReport, EnergyReport]:
    sd = symmetric_dirichlet(mesh.uv, mesh.positions, mesh.triangles)
    ls = lscm_energy(mesh.uv, mesh.positions, mesh.triangles)
    return sd, ls


# ---------------------------------------------------------------------------
# analytic accuracy experiment


def sphere_exp_map(frame, u) -> np.ndarray:
    """Analytic exponential map of the unit sphere at the frame origin."""
    u = np.asarray(u, dtype=np.float64)
    r = float(np.hypot(u[0], u[1]))
    p = frame.origin
    if r == 0.0:
        return p.copy()
    direction = frame.to_world(u / r)
    return np.cos(r) * p + np.sin(r) * direction


def disc_error_samples(R: float, interior: int, boundary: int, seed: int) -> np.ndarray:
    """Uniform random interior points of D_R plus uniform boundary points."""
    from . import rng

    u = rng.uniforms(rng.derive_key(seed, 0xE44), 2 * interior).reshape(interior, 2)
    r = R * np.sqrt(u[:, 0])
    ang = 2.0 * np.pi * u[:, 1]
    inside = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
    ub = rng.uniforms(rng.derive_key(seed, 0xB0D), boundary)
    bang = 2.0 * np.pi * ub
    ring = R * np.column_stack([np.cos(bang), np.sin(bang)])
    return np.vstack([inside, ring])


def map_error_experiment(
    surface,
    exact_map,
    p_raw,
    params: TraceParams,
    smoothing: SmoothingConfig,
    projection: ProjectionConfig = ProjectionConfig(),
    samples: tuple[int, int] = (2000, 500),
    seed: int = 0,
):
    """Mean L2 error of the fitted map against an analytic map, over random
    interior + boundary samples, plus the error along radial curve 0.

    Returns (mean_error, traced_curve_error, trace, local_map).
    """
    trace = radial_trace(surface, p_raw, params, smoothing, projection)
    local_map = fit(trace)
    pts = disc_error_samples(local_map.R, samples[0], samples[1], seed)
    err = 0.0
    for u in pts:
        err += float(np.linalg.norm(local_map.eval(u) - exact_map(trace.frame, u)))
    mean_error = err / len(pts)

    t_err = 0.0
    for j in range(1, trace.n_complete + 1):
        u = np.array([j * params.h, 0.0])
        t_err += float(np.linalg.norm(trace.points[0, j] - exact_map(trace.frame, u)))
    traced_curve_error = t_err / max(trace.n_complete, 1)
    return mean_error, traced_curve_error, trace, local_map


def sphere_error_experiment(
    m: int,
    n: int,
    h: float,
    substepping: bool = False,
    smoothing: bool = False,
    samples: tuple[int, int] = (2000, 500),
    seed: int = 0,
):
    """Accuracy of the traced+fitted map on the unit sphere against the
    analytic exponential map, seeded at the north pole with a fixed frame.

    The unit sphere field is an exact SDF, so the raw-gradient fast path is
    used; n*h must stay inside the injectivity radius.

    Returns (mean_error, traced_curve_error).
    """
    if n * h > np.pi:
        raise ValueError("map radius n*h exceeds the sphere's injectivity radius")
    surface = imp.build_csg_field(imp.sphere(radius=1.0))
    params = TraceParams(
        m=m, n=n, h=h,
        substepping_enabled=substepping,
        smoothing_enabled=smoothing,
    )
    cfg = SmoothingConfig(enabled=False, seed=seed)
    mean_error, traced_curve_error, _, _ = map_error_experiment(
        surface, sphere_exp_map, np.array([0.0, 0.0, 1.0]), params, cfg,
        samples=samples, seed=seed,
    )
    return mean_error, traced_curve_error
