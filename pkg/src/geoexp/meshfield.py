"""Signed distance to a triangle mesh: unsigned closest-point distance signed
by the winding number (negative inside)."""

from __future__ import annotations

import numpy as np

from .bvh import AabbTree
from .errors import EmptyInput
from .implicit import ImplicitSurface


class MeshDistanceField(ImplicitSurface):
    """Exact signed distance to a closed triangle mesh.

    Closest-triangle and winding-number queries go through an AABB tree, so
    per-query cost is logarithmic in the triangle count.
    """

    def __init__(self, vertices, triangles):
        super().__init__()
        vertices = np.asarray(vertices, dtype=np.float64)
        triangles = np.asarray(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3 or len(vertices) == 0:
            raise EmptyInput("vertices must be a non-empty (n, 3) array")
        if triangles.ndim != 2 or triangles.shape[1] != 3 or len(triangles) == 0:
            raise EmptyInput("triangles must be a non-empty (m, 3) array")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise EmptyInput("triangle indices out of range")
        self.vertices = vertices
        self.triangles = triangles
        self.tree = AabbTree(vertices, triangles)

    def _value(self, x):
        dist, _, _, _ = self.tree.closest_point(x)
        if self.tree.winding_number(x) >= 0.5:
            return -dist
        return dist

    def _gradient(self, x):
        # exact a.e.: direction away from the closest surface point
        dist, cp, _, _ = self.tree.closest_point(x)
        d = x - cp
        n = np.linalg.norm(d)
        if n < 1e-14:
            return np.zeros(3)
        g = d / n
        if self.tree.winding_number(x) >= 0.5:
            return -g
        return g


def build_mesh_field(vertices, triangles) -> MeshDistanceField:
    return MeshDistanceField(vertices, triangles)


def load_obj(path) -> tuple[np.ndarray, np.ndarray]:
    """Vertices and triangle indices from an OBJ file (v/f records,
    1-based indices; extra face vertices are fan-triangulated)."""
    verts: list[list[float]] = []
    tris: list[list[int]] = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif parts[0] == "f":
                idx = [int(tok.split("/")[0]) - 1 for tok in parts[1:]]
                for k in range(1, len(idx) - 1):
                    tris.append([idx[0], idx[k], idx[k + 1]])
    if not verts or not tris:
        raise EmptyInput(f"no usable v/f records in {path}")
    return np.asarray(verts, dtype=np.float64), np.asarray(tris, dtype=np.int64)


def icosphere(subdivisions: int = 2, radius: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Icosahedron subdivided `subdivisions` times, vertices on the sphere."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    tris = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    for _ in range(subdivisions):
        verts, tris = subdivide_midpoint(verts, tris)
        verts /= np.linalg.norm(verts, axis=1)[:, None]
    return verts * radius, tris


def subdivide_midpoint(vertices: np.ndarray, triangles: np.ndarray):
    """4-to-1 flat midpoint subdivision (geometry unchanged)."""
    vertices = list(map(np.asarray, vertices))
    cache: dict[tuple[int, int], int] = {}

    def mid(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            cache[key] = len(vertices)
            vertices.append((vertices[i] + vertices[j]) / 2.0)
        return cache[key]

    out = []
    for a, b, c in triangles:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        out.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]])
    return np.asarray(vertices), np.asarray(out, dtype=np.int64)


def box_mesh(half_extents=(0.5, 0.5, 0.5), center=(0.0, 0.0, 0.0)):
    """Closed 12-triangle box with outward orientation."""
    h = np.asarray(half_extents, dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    corners = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
        dtype=np.float64,
    )
    verts = c + corners * h
    # indices: bit 2 = x, bit 1 = y, bit 0 = z
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    tris = []
    for a, b, cc, d in quads:
        tris.append([a, b, cc])
        tris.append([a, cc, d])
    return verts, np.asarray(tris, dtype=np.int64)
