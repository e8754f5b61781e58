"""Continuous map from the tangent disc to the surface, fitted to a traced
grid: periodic cubic splines around each isoline, natural cubic splines along
diameters assembled on demand."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateGrid, OutOfDisc
from .implicit import ImplicitSurface, ProjectionConfig, SmoothingConfig, project
from .tracer import TangentFrame, TraceResult


class PeriodicSpline:
    """C2 periodic cubic through m 3D points at knot angles 2*pi*i/m."""

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        m = len(values)
        self.knots = 2.0 * np.pi * np.arange(m + 1) / m
        closed = np.vstack([values, values[:1]])
        self._spline = CubicSpline(self.knots, closed, bc_type="periodic", axis=0)
        self.control_values = values

    def eval(self, theta):
        theta = np.mod(theta, 2.0 * np.pi)
        return self._spline(theta)


@dataclass
class LocalMap:
    """The fitted forward map q: D_R -> surface.

    `isolines[j-1]` interpolates traced front j; evaluation assembles the two
    opposite angular samples of every isoline plus the origin into a natural
    cubic radial spline and reads it at the requested radius.
    """

    frame: TangentFrame
    n: int
    h: float
    isolines: list  # PeriodicSpline, one per step j = 1..n
    surface: ImplicitSurface = field(repr=False, default=None)
    _stacked: CubicSpline = field(repr=False, default=None)
    _diameter_cache: tuple = field(repr=False, default=None)

    @property
    def R(self) -> float:
        return self.n * self.h

    def eval(self, u, project_to_surface: bool = False) -> np.ndarray:
        """Surface point for tangent coordinates u, |u| <= R."""
        u = np.asarray(u, dtype=np.float64)
        r = float(np.hypot(u[0], u[1]))
        if r > self.R + 1e-12:
            raise OutOfDisc(f"|u| = {r:g} > map radius {self.R:g}")
        if r == 0.0:
            return self.frame.origin.copy()
        # canonicalize to the upper half plane so u and -u share one diameter
        flip = (u[1] < 0.0) or (u[1] == 0.0 and u[0] < 0.0)
        uc = -u if flip else u
        theta = float(np.arctan2(uc[1], uc[0]))
        spline = self._diameter(theta)
        x = spline(-r if flip else r)
        if project_to_surface:
            if self.surface is None:
                raise ValueError("map has no surface reference to project onto")
            x = project(self.surface, x, ProjectionConfig(), SmoothingConfig())
        return x

    def _diameter(self, theta: float) -> CubicSpline:
        """Natural cubic radial spline through the isoline samples at theta
        (positive radii) and theta + pi (negative radii), pinned at the origin."""
        if self._diameter_cache is not None and self._diameter_cache[0] == theta:
            return self._diameter_cache[1]
        fwd = self._stacked(np.mod(theta, 2.0 * np.pi))  # (n, 3)
        bwd = self._stacked(np.mod(theta + np.pi, 2.0 * np.pi))
        pts = np.empty((2 * self.n + 1, 3))
        pts[: self.n] = bwd[::-1]
        pts[self.n] = self.frame.origin
        pts[self.n + 1:] = fwd
        radii = self.h * np.arange(-self.n, self.n + 1)
        spline = CubicSpline(radii, pts, bc_type="natural", axis=0)
        self._diameter_cache = (theta, spline)
        return spline


def fit(trace: TraceResult) -> LocalMap:
    """Fit the spline surface to a traced grid.

    The usable radius is clamped to the shortest completed curve, so the
    splines always see a full rectangular grid.
    """
    m = trace.m
    n_eff = trace.n_complete
    if m < 3 or n_eff < 1:
        raise DegenerateGrid(f"grid of {m} curves x {n_eff} steps cannot be fit")
    rows = trace.points[:, 1 : n_eff + 1]  # (m, n_eff, 3)
    isolines = [PeriodicSpline(rows[:, j]) for j in range(n_eff)]
    closed = np.concatenate([rows, rows[:1]], axis=0)  # (m+1, n_eff, 3)
    knots = 2.0 * np.pi * np.arange(m + 1) / m
    stacked = CubicSpline(knots, closed, bc_type="periodic", axis=0)
    return LocalMap(
        frame=trace.frame,
        n=n_eff,
        h=trace.params.h,
        isolines=isolines,
        surface=trace.surface,
        _stacked=stacked,
    )
