"""Closed interpolating curves drawn across several overlapping local maps.

Each curve segment is a quadratic Bezier expressed in its own chart; segments
are glued by chart transitions (forward eval through one map, inverse through
the neighbor's mesh). The free middle control points are solved by a fixed
number of Gauss-Seidel sweeps of the interpolation condition B_i(1/2) = p_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfDisc, OverlapViolation, TransitionLost
from .implicit import ImplicitSurface, ProjectionConfig, SmoothingConfig
from .logmap import LogQueryConfig, MapMesh, build_map_mesh, log
from .splinemap import LocalMap, fit
from .tracer import TraceParams, radial_trace

GAUSS_SEIDEL_SWEEPS = 10


@dataclass
class Chart:
    """A local map together with its meshed inverse."""

    map: LocalMap
    mesh: MapMesh

    @property
    def origin(self) -> np.ndarray:
        return self.map.frame.origin


def build_chart(
    surface: ImplicitSurface,
    seed_point,
    params: TraceParams,
    smoothing: SmoothingConfig = SmoothingConfig(),
    projection: ProjectionConfig = ProjectionConfig(),
    log_cfg: LogQueryConfig = LogQueryConfig(),
    ref_axis=(1.0, 0.0, 0.0),
) -> Chart:
    trace = radial_trace(surface, seed_point, params, smoothing, projection, ref_axis)
    local_map = fit(trace)
    return Chart(map=local_map, mesh=build_map_mesh(local_map, log_cfg))


def chart_transition(from_chart: Chart, to_chart: Chart, u):
    """Tangent coordinates of from_chart's point u in to_chart, or None when
    the point is out of the destination map's reach."""
    x = from_chart.map.eval(u)
    return log(to_chart.mesh, x)


@dataclass
class SurfaceCurve:
    """Closed curve through the chart origins: per-segment quadratic Bezier
    control points, each triple in its own chart's coordinates."""

    charts: list
    c0: np.ndarray  # (k, 2)
    c1: np.ndarray  # (k, 2)
    c2: np.ndarray  # (k, 2)
    residual: float = 0.0
    closed: bool = True

    @property
    def segment_count(self) -> int:
        return len(self.charts)


def solve_closed_curve(charts: list, iterations: int = GAUSS_SEIDEL_SWEEPS) -> SurfaceCurve:
    """Solve the closed interpolating curve through the chart origins.

    Runs exactly `iterations` Gauss-Seidel sweeps (no early exit). Adjacent
    charts must overlap (each origin inside the neighbor's reach), wrap-around
    pair included; the solve aborts when a control point leaves the overlap.
    """
    k = len(charts)
    if k < 3:
        raise ValueError("need at least 3 charts for a closed curve")
    for i in range(k):
        j = (i + 1) % k
        if log(charts[i].mesh, charts[j].origin) is None or log(charts[j].mesh, charts[i].origin) is None:
            raise OverlapViolation(f"charts {i} and {j} do not overlap")

    c1 = np.zeros((k, 2))
    for _ in range(iterations):
        for i in range(k):
            a = chart_transition(charts[(i - 1) % k], charts[i], c1[(i - 1) % k])
            b = chart_transition(charts[(i + 1) % k], charts[i], c1[(i + 1) % k])
            if a is None or b is None:
                raise TransitionLost(i)
            # B_i(1/2) = 0 with endpoints at midpoints of adjacent middles
            c1[i] = -(a + b) / 6.0

    c0 = np.empty((k, 2))
    c2 = np.empty((k, 2))
    for i in range(k):
        a = chart_transition(charts[(i - 1) % k], charts[i], c1[(i - 1) % k])
        b = chart_transition(charts[(i + 1) % k], charts[i], c1[(i + 1) % k])
        if a is None or b is None:
            raise TransitionLost(i)
        c0[i] = 0.5 * (a + c1[i])
        c2[i] = 0.5 * (c1[i] + b)
    residual = float(max(
        np.linalg.norm((c0[i] + 2.0 * c1[i] + c2[i]) / 4.0) for i in range(k)
    ))
    return SurfaceCurve(charts=list(charts), c0=c0, c1=c1, c2=c2, residual=residual)


def eval_curve(curve: SurfaceCurve, segment: int, t: float) -> np.ndarray:
    """Point on segment `segment` at parameter t in [0, 1]."""
    i = segment % curve.segment_count
    s = 1.0 - t
    b = s * s * curve.c0[i] + 2.0 * t * s * curve.c1[i] + t * t * curve.c2[i]
    return curve.charts[i].map.eval(b)  # OutOfDisc propagates


def sample_curve(curve: SurfaceCurve, per_segment: int = 50) -> np.ndarray:
    """Dense polyline along the whole closed curve."""
    out = []
    for i in range(curve.segment_count):
        for t in np.linspace(0.0, 1.0, per_segment, endpoint=False):
            out.append(eval_curve(curve, i, float(t)))
    return np.asarray(out)
