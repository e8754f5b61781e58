"""Smooth signed-ish distance to a point cloud via LogSumExp, offset so the
zero set is a proper level set slightly outside the points."""

from __future__ import annotations

import numpy as np

from .errors import EmptyInput
from .implicit import ImplicitSurface


class PointCloudField(ImplicitSurface):
    """f(x) = -(1/beta) log sum_i exp(-beta |x - p_i|) - delta.

    Larger beta sharpens the smooth minimum toward the true nearest-point
    distance; delta shifts the isosurface outward so normals are defined.
    """

    def __init__(self, points, beta: float = 200.0, delta: float = 5e-3):
        super().__init__()
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if points.size == 0 or points.shape[1] != 3:
            raise EmptyInput("point cloud must be a non-empty (n, 3) array")
        if beta <= 0:
            raise ValueError("beta must be > 0")
        if delta <= 0:
            raise ValueError("delta must be > 0")
        self.points = points
        self.beta = float(beta)
        self.delta = float(delta)

    def _dists(self, x):
        return np.linalg.norm(self.points - x, axis=1)

    def _value(self, x):
        d = self._dists(x)
        dmin = d.min()
        s = np.exp(-self.beta * (d - dmin)).sum()
        return dmin - np.log(s) / self.beta - self.delta

    def _gradient(self, x):
        # softmax-weighted average of the per-point distance gradients
        d = self._dists(x)
        dmin = d.min()
        w = np.exp(-self.beta * (d - dmin))
        w /= w.sum()
        safe = np.maximum(d, 1e-300)
        dirs = (x - self.points) / safe[:, None]
        return w @ dirs


def build_point_cloud_field(points, beta: float = 200.0, delta: float = 5e-3) -> PointCloudField:
    return PointCloudField(points, beta, delta)


def load_xyz(path) -> np.ndarray:
    """Whitespace-separated x y z triples, one point per line."""
    pts = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if len(parts) >= 3:
                pts.append([float(parts[0]), float(parts[1]), float(parts[2])])
    if not pts:
        raise EmptyInput(f"no points in {path}")
    return np.asarray(pts, dtype=np.float64)


def load_ply(path) -> np.ndarray:
    """ASCII PLY with x/y/z vertex properties."""
    with open(path) as fh:
        line = fh.readline().strip()
        if line != "ply":
            raise EmptyInput(f"{path} is not a PLY file")
        n_vertices = 0
        props: list[str] = []
        in_vertex = False
        while True:
            line = fh.readline()
            if not line:
                raise EmptyInput(f"unexpected end of header in {path}")
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "format" and parts[1] != "ascii":
                raise EmptyInput("only ascii PLY is supported")
            if parts[0] == "element":
                in_vertex = parts[1] == "vertex"
                if in_vertex:
                    n_vertices = int(parts[2])
            elif parts[0] == "property" and in_vertex:
                props.append(parts[2])
            elif parts[0] == "end_header":
                break
        try:
            ix, iy, iz = props.index("x"), props.index("y"), props.index("z")
        except ValueError:
            raise EmptyInput("PLY vertex element lacks x/y/z properties")
        pts = np.empty((n_vertices, 3))
        for k in range(n_vertices):
            vals = fh.readline().split()
            pts[k] = float(vals[ix]), float(vals[iy]), float(vals[iz])
    if n_vertices == 0:
        raise EmptyInput(f"no vertices in {path}")
    return pts
