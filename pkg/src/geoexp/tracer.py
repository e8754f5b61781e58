"""Radial tracing of geodesic-like curves on an implicit surface.

From a seed point, m equally spaced directions in the tangent plane are
integrated outward by project-and-transport steps. Each full step of length h
may be split into substeps wherever the projected normal tilts past the
alignment cosine (high curvature), and after each full step the inter-curve
angles can be smoothed by the wedge-holonomy solve.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import holonomy
from .errors import (
    AlignmentProbeFailed,
    AntipodalNormals,
    NoConvergence,
    PathAborted,
    SeedFailure,
    TraceFailed,
)
from .implicit import ImplicitSurface, ProjectionConfig, SmoothingConfig, normal, project
from .transport import transport_rotation

__all__ = [
    "TangentFrame", "TraceParams", "TraceResult", "seed_frame", "initial_tangents",
    "transport_rotation", "solve_alignment", "full_step", "radial_trace", "dump_trace_csv",
]

ALIGNMENT_SCAN_POINTS = 32
BISECTION_WIDTH = 1e-8
MAX_SUBSTEPS = 64
PROBE_RETRIES = 4


@dataclass(frozen=True)
class TangentFrame:
    """Orthonormal frame (e1, e2, normal) at an on-surface origin."""

    origin: np.ndarray
    normal: np.ndarray
    e1: np.ndarray
    e2: np.ndarray

    def to_world(self, u) -> np.ndarray:
        """Embed tangent coordinates (u1, u2) as a 3D vector."""
        u = np.asarray(u, dtype=np.float64)
        return u[0] * self.e1 + u[1] * self.e2

    def to_plane(self, v) -> np.ndarray:
        """Tangent coordinates of the 3D vector v (its tangential part)."""
        v = np.asarray(v, dtype=np.float64)
        return np.array([v @ self.e1, v @ self.e2])


@dataclass(frozen=True)
class TraceParams:
    """Knobs of the radial tracer.

    m radial curves, n steps of size h; `alignment_cosine` triggers
    substepping, `kappa` weighs the holonomy smoothing regularizer.
    """

    n: int
    h: float
    m: int = 50
    alignment_cosine: float = 1.0 / np.sqrt(2.0)
    substep_floor: float = 1e-6
    smoothing_enabled: bool = True
    kappa: float = 1e3
    substepping_enabled: bool = True
    smoothing_scheme: str = "wedge"  # "strip" only as the instability diagnostic

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("m must be >= 3")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.h <= 0:
            raise ValueError("h must be > 0")
        if not (0.0 < self.alignment_cosine < 1.0):
            raise ValueError("alignment cosine must be in (0, 1)")
        if self.kappa <= 0:
            raise ValueError("kappa must be > 0")
        if self.smoothing_scheme not in ("wedge", "strip"):
            raise ValueError("smoothing_scheme must be 'wedge' or 'strip'")


@dataclass
class TraceResult:
    """The m x (n+1) traced grid.

    Row j of `points` is the isoline at step j; column i is radial curve i.
    `phi[j]` holds the measured inter-curve angles and `theta[j]` the applied
    smoothing rotations at step j. Curves that failed before step n are frozen
    at their last good point; `completed_steps[i]` says how far curve i got.
    """

    frame: TangentFrame
    params: TraceParams
    points: np.ndarray  # (m, n+1, 3)
    tangents: np.ndarray  # (m, n+1, 3)
    phi: np.ndarray  # (n+1, m)
    theta: np.ndarray  # (n+1, m)
    substeps: np.ndarray  # (m, n+1) int
    completed_steps: np.ndarray  # (m,) int
    surface: ImplicitSurface = field(repr=False, default=None)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1] - 1

    @property
    def n_complete(self) -> int:
        """Largest j for which every curve has a valid point."""
        return int(self.completed_steps.min())


def seed_frame(
    surface: ImplicitSurface,
    p_raw,
    smoothing: SmoothingConfig = SmoothingConfig(),
    projection: ProjectionConfig = ProjectionConfig(),
    ref_axis=(1.0, 0.0, 0.0),
) -> TangentFrame:
    """Project the (possibly off-surface) seed and build a tangent basis.

    e1 is the normalized rejection of `ref_axis` from the normal, falling
    back to the next axis when they are near-parallel; e2 = n x e1.
    """
    try:
        origin = project(surface, p_raw, projection, smoothing)
    except NoConvergence as e:
        raise SeedFailure(f"seed point does not project: {e}")
    n = normal(surface, origin, smoothing)
    ref = np.asarray(ref_axis, dtype=np.float64)
    e1 = ref - (ref @ n) * n
    if np.linalg.norm(e1) < 1e-8:
        ref = np.array([0.0, 1.0, 0.0]) if abs(ref[0]) >= abs(ref[1]) else np.array([1.0, 0.0, 0.0])
        e1 = ref - (ref @ n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    e2 /= np.linalg.norm(e2)
    return TangentFrame(origin=origin, normal=n, e1=e1, e2=e2)


def initial_tangents(frame: TangentFrame, m: int) -> np.ndarray:
    """m unit tangents at launch angles 2*pi*i/m in the (e1, e2) plane."""
    ang = 2.0 * np.pi * np.arange(m) / m
    return np.cos(ang)[:, None] * frame.e1 + np.sin(ang)[:, None] * frame.e2


def _tangentialize(t: np.ndarray, n: np.ndarray) -> np.ndarray:
    t = t - (t @ n) * n
    norm = np.linalg.norm(t)
    if norm < 1e-12:
        raise PathAborted("tangent collapsed onto the normal")
    return t / norm


def solve_alignment(
    surface: ImplicitSurface,
    q,
    t,
    h_max: float,
    s: float,
    smoothing: SmoothingConfig = SmoothingConfig(),
    projection: ProjectionConfig = ProjectionConfig(),
    n_q: np.ndarray | None = None,
) -> float:
    """First length l in (0, h_max] where the projected normal's alignment
    with n(q) drops to the cosine s; h_max when no such crossing exists.

    A uniform scan brackets the first sign change, then bisection narrows it.
    """
    q = np.asarray(q, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if n_q is None:
        n_q = normal(surface, q, smoothing)

    def g(l: float) -> float:
        try:
            x = project(surface, q + l * t, projection, smoothing)
            return float(n_q @ normal(surface, x, smoothing)) - s
        except NoConvergence as e:
            raise AlignmentProbeFailed(str(e))

    lo, g_lo = 0.0, 1.0 - s  # g(0+) by continuity
    hi = None
    for k in range(1, ALIGNMENT_SCAN_POINTS + 1):
        l = h_max * k / ALIGNMENT_SCAN_POINTS
        gl = g(l)
        if gl <= 0.0:
            hi, g_hi = l, gl
            break
        lo, g_lo = l, gl
    if hi is None:
        return h_max
    while hi - lo > BISECTION_WIDTH:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm <= 0.0:
            hi, g_hi = mid, gm
        else:
            lo, g_lo = mid, gm
    return hi


def full_step(
    surface: ImplicitSurface,
    q,
    t,
    h: float,
    params: TraceParams,
    smoothing: SmoothingConfig = SmoothingConfig(),
    projection: ProjectionConfig = ProjectionConfig(),
    n_q: np.ndarray | None = None,
):
    """One integration step of total projected length ~h from (q, t).

    Returns (q_next, t_next, substep_count, n_next). Substeps repeat until
    the remaining budget drops below the floor: solve the alignment length,
    project, subtract the projected chord, transport the tangent.
    """
    q = np.asarray(q, dtype=np.float64).copy()
    t = np.asarray(t, dtype=np.float64).copy()
    if n_q is None:
        n_q = normal(surface, q, smoothing)
    h_rem = float(h)
    substeps = 0
    tiny_streak = 0
    while h_rem >= params.substep_floor:
        if substeps >= MAX_SUBSTEPS:
            raise PathAborted(f"more than {MAX_SUBSTEPS} substeps; feature below resolution at h={h:g}")
        shortened = False
        if params.substepping_enabled:
            budget = h_rem
            l = None
            for _ in range(PROBE_RETRIES + 1):
                try:
                    l = solve_alignment(surface, q, t, budget, params.alignment_cosine,
                                        smoothing, projection, n_q=n_q)
                    break
                except AlignmentProbeFailed:
                    budget *= 0.5
            if l is None:
                raise PathAborted("alignment probe kept failing after shrinking the step")
            shortened = l < budget or budget < h_rem
        else:
            l = h_rem
        try:
            q_new = project(surface, q + l * t, projection, smoothing)
            n_new = normal(surface, q_new, smoothing)
        except NoConvergence as e:
            raise PathAborted(f"projection failed mid-step: {e}")
        chord = float(np.linalg.norm(q_new - q))
        if chord < params.substep_floor:
            tiny_streak += 1
            if tiny_streak >= 2:
                raise PathAborted("step stalled: projected substep length below floor twice")
        else:
            tiny_streak = 0
        R = transport_rotation(n_q, n_new)
        t = _tangentialize(R @ t, n_new)
        h_rem -= chord
        q, n_q = q_new, n_new
        substeps += 1
        if not shortened:
            # the whole remaining budget went into this substep; the residual
            # h_rem is only the O(h^3) chord shortfall, not an unsplit feature
            break
    if substeps == 0:
        raise PathAborted("step budget below the substep floor before any substep")
    return q, t, substeps, n_q


def radial_trace(
    surface: ImplicitSurface,
    p_raw,
    params: TraceParams,
    smoothing: SmoothingConfig = SmoothingConfig(),
    projection: ProjectionConfig = ProjectionConfig(),
    ref_axis=(1.0, 0.0, 0.0),
) -> TraceResult:
    """Trace the full m x (n+1) grid from a seed point.

    After each outer step the inter-curve angles are measured; when smoothing
    is enabled the regularized holonomy solve yields in-plane rotations that
    are applied to the front's tangents. A curve that cannot be extended is
    frozen at its last good point; the trace fails outright if more than 10%
    of the curves truncate early.
    """
    m, n = params.m, params.n
    frame = seed_frame(surface, p_raw, smoothing, projection, ref_axis)

    points = np.empty((m, n + 1, 3))
    tangents = np.empty((m, n + 1, 3))
    phi = np.zeros((n + 1, m))
    theta = np.zeros((n + 1, m))
    substeps = np.zeros((m, n + 1), dtype=np.int64)
    completed = np.full(m, n, dtype=np.int64)

    points[:, 0] = frame.origin
    tangents[:, 0] = initial_tangents(frame, m)
    phi[0, :] = -2.0 * np.pi / m
    normals_front = np.tile(frame.normal, (m, 1))

    active = np.ones(m, dtype=bool)

    for j in range(n):
        for i in range(m):
            if not active[i]:
                points[i, j + 1] = points[i, j]
                tangents[i, j + 1] = tangents[i, j]
                continue
            try:
                q_new, t_new, count, n_new = full_step(
                    surface, points[i, j], tangents[i, j], params.h,
                    params, smoothing, projection, n_q=normals_front[i],
                )
            except PathAborted:
                active[i] = False
                completed[i] = j
                points[i, j + 1] = points[i, j]
                tangents[i, j + 1] = tangents[i, j]
                continue
            points[i, j + 1] = q_new
            tangents[i, j + 1] = t_new
            substeps[i, j + 1] = count
            normals_front[i] = n_new

        if (~active).sum() > 0.10 * m:
            raise TraceFailed(
                f"{int((~active).sum())} of {m} radial curves truncated by step {j + 1}"
            )

        # inter-curve angles on the new front (diagnostic even when smoothing
        # is off; transported with the cached normals, no extra field queries)
        try:
            front = holonomy.change_in_angles(points[:, j + 1], tangents[:, j + 1], normals_front)
            phi[j + 1, :] = front.phi
        except AntipodalNormals:
            phi[j + 1, :] = np.nan

        if params.smoothing_enabled and np.all(np.isfinite(phi[j + 1])):
            if params.smoothing_scheme == "wedge":
                solve = holonomy.wedge_smoothing_solve(phi[j + 1], params.kappa)
            else:
                # strip diagnostic: history enters through the previous front's
                # raw angles and applied rotations (rows j of phi/theta)
                solve = holonomy.strip_smoothing_solve(
                    phi[j + 1], phi[j], theta[j], params.kappa
                )
            theta[j + 1, :] = solve.theta
            for i in range(m):
                if not active[i]:
                    continue
                tangents[i, j + 1] = _rotate_in_plane(
                    tangents[i, j + 1], normals_front[i], theta[j + 1, i]
                )

    return TraceResult(
        frame=frame,
        params=params,
        points=points,
        tangents=tangents,
        phi=phi,
        theta=theta,
        substeps=substeps,
        completed_steps=completed,
        surface=surface,
    )


def _rotate_in_plane(t: np.ndarray, n: np.ndarray, angle: float) -> np.ndarray:
    """Rotate the tangent t about the normal n by `angle` (right-handed)."""
    c, s = np.cos(angle), np.sin(angle)
    out = c * t + s * np.cross(n, t)
    return _tangentialize(out, n)


def dump_trace_csv(trace: TraceResult, path) -> None:
    """Grid as CSV: i, j, x, y, z, tx, ty, tz, phi, theta, substeps.

    One row for the shared seed (i=0, j=0), then m rows per step j >= 1:
    m*n + 1 rows in total.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "x", "y", "z", "tx", "ty", "tz", "phi", "theta", "substeps"])

        def row(i, j):
            p = trace.points[i, j]
            t = trace.tangents[i, j]
            w.writerow(
                [i, j, repr(float(p[0])), repr(float(p[1])), repr(float(p[2])),
                 repr(float(t[0])), repr(float(t[1])), repr(float(t[2])),
                 repr(float(trace.phi[j, i])), repr(float(trace.theta[j, i])),
                 int(trace.substeps[i, j])]
            )

        row(0, 0)
        for j in range(1, trace.n + 1):
            for i in range(trace.m):
                row(i, j)
