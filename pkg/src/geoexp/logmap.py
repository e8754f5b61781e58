"""Inverse (log) map queries via a meshed image of the spline map.

The tangent disc is sampled (low-discrepancy interior + uniform boundary),
Delaunay triangulated, and pushed through the forward map; inverse queries
are closest-point lookups on the 3D triangles, carrying uv back by
barycentric interpolation. Overlapping map regions yield several local
minima, which is what the multi-valued query returns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay
from scipy.spatial import QhullError

from . import rng
from .bvh import AabbTree, _tri_closest
from .errors import EmptyCandidates, TriangulationFailure
from .implicit import ProjectionConfig, SmoothingConfig, project
from .splinemap import LocalMap

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


@dataclass(frozen=True)
class LogQueryConfig:
    """Sampling and query limits for the meshed inverse map.

    `boundary_samples=None` means 8m, resolved at build time.
    """

    max_radius: float = 1e-2
    interior_samples: int = 10000
    boundary_samples: int | None = None
    project_to_surface: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.max_radius <= 0:
            raise ValueError("max_radius must be > 0")
        if self.interior_samples < 100:
            raise ValueError("interior_samples must be >= 100")


@dataclass
class MapMesh:
    """Delaunay-meshed image of a local map with per-vertex uv coordinates."""

    uv: np.ndarray  # (V, 2)
    positions: np.ndarray  # (V, 3)
    triangles: np.ndarray  # (T, 3)
    R: float
    cfg: LogQueryConfig = field(default_factory=LogQueryConfig)
    boundary_count: int = 0
    tree: AabbTree = field(repr=False, default=None)
    uv_mean_edge: float = field(default=0.0)

    def __post_init__(self):
        if self.tree is None:
            self.tree = AabbTree(self.positions, self.triangles)
        if self.uv_mean_edge == 0.0:
            e = np.concatenate(
                [
                    self.uv[self.triangles[:, 1]] - self.uv[self.triangles[:, 0]],
                    self.uv[self.triangles[:, 2]] - self.uv[self.triangles[:, 1]],
                    self.uv[self.triangles[:, 0]] - self.uv[self.triangles[:, 2]],
                ]
            )
            self.uv_mean_edge = float(np.linalg.norm(e, axis=1).mean())


def disc_samples(count: int, radius: float, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy samples of the disc (sunflower spiral,
    rotated by a seed-derived offset)."""
    k = np.arange(count, dtype=np.float64)
    r = radius * np.sqrt((k + 0.5) / count)
    rot = 2.0 * np.pi * float(rng.uniforms(rng.derive_key(seed, 0xD15C), 1)[0])
    ang = k * GOLDEN_ANGLE + rot
    return np.column_stack([r * np.cos(ang), r * np.sin(ang)])


def build_map_mesh(local_map: LocalMap, cfg: LogQueryConfig = LogQueryConfig()) -> MapMesh:
    """Sample D_R, triangulate in the tangent plane, push through the map."""
    R = local_map.R
    m = len(local_map.isolines[0].control_values)
    n_boundary = cfg.boundary_samples if cfg.boundary_samples is not None else 8 * m
    interior = disc_samples(cfg.interior_samples, R, cfg.seed)
    ang = 2.0 * np.pi * np.arange(n_boundary) / n_boundary
    boundary = R * np.column_stack([np.cos(ang), np.sin(ang)])
    uv = np.vstack([interior, boundary])
    try:
        tri = Delaunay(uv)
    except QhullError as e:
        raise TriangulationFailure(str(e))
    triangles = np.asarray(tri.simplices, dtype=np.int64)
    # orient all uv triangles counterclockwise
    a, b, c = uv[triangles[:, 0]], uv[triangles[:, 1]], uv[triangles[:, 2]]
    signed = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    flip = signed < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    positions = np.empty((len(uv), 3))
    for k in range(len(uv)):
        positions[k] = local_map.eval(uv[k])
    if cfg.project_to_surface:
        if local_map.surface is None:
            raise ValueError("map has no surface reference to project onto")
        for k in range(len(uv)):
            positions[k] = project(
                local_map.surface, positions[k], ProjectionConfig(), SmoothingConfig()
            )
    return MapMesh(
        uv=uv,
        positions=positions,
        triangles=triangles,
        R=R,
        cfg=cfg,
        boundary_count=n_boundary,
    )


def log(mesh: MapMesh, x, cfg: LogQueryConfig | None = None):
    """Tangent coordinates of the mesh point closest to x, or None when
    nothing lies within the query radius."""
    cfg = cfg or mesh.cfg
    x = np.asarray(x, dtype=np.float64)
    dist, _, tri, bary = mesh.tree.closest_point(x, upper=cfg.max_radius)
    if tri < 0 or dist > cfg.max_radius:
        return None
    corners = mesh.uv[mesh.triangles[tri]]
    return bary @ corners


def multivalued_log(mesh: MapMesh, x, cfg: LogQueryConfig | None = None) -> list[np.ndarray]:
    """All local minima of the distance to the meshed map within the query
    radius: one uv per sheet, nearest first."""
    cfg = cfg or mesh.cfg
    x = np.asarray(x, dtype=np.float64)
    cand_tris = mesh.tree.triangles_within(x, cfg.max_radius)
    if len(cand_tris) == 0:
        return []
    rows = []
    for t in cand_tris:
        i0, i1, i2 = mesh.triangles[t]
        d2, _, _, _, u, v, w = _tri_closest(
            *mesh.positions[i0], *mesh.positions[i1], *mesh.positions[i2], *x
        )
        uv = u * mesh.uv[i0] + v * mesh.uv[i1] + w * mesh.uv[i2]
        rows.append((np.sqrt(d2), uv))
    rows.sort(key=lambda r: r[0])
    accepted: list[np.ndarray] = []
    gap = 4.0 * mesh.uv_mean_edge
    for _, uv in rows:
        if all(np.linalg.norm(uv - got) > gap for got in accepted):
            accepted.append(uv)
    return accepted


def select_preimage(candidates, rule: str) -> np.ndarray:
    """Pick one uv from a multi-valued query: smallest |uv| or smallest
    angle in [0, 2*pi); ties broken by the other key."""
    if len(candidates) == 0:
        raise EmptyCandidates("no preimage candidates to select from")
    cands = [np.asarray(c, dtype=np.float64) for c in candidates]
    radii = np.array([np.hypot(c[0], c[1]) for c in cands])
    phases = np.array([np.mod(np.arctan2(c[1], c[0]), 2.0 * np.pi) for c in cands])
    if rule == "shortest_radius":
        keys = np.lexsort((phases, radii))
    elif rule == "smallest_phase":
        keys = np.lexsort((radii, phases))
    else:
        raise ValueError(f"unknown selection rule {rule!r}")
    return cands[int(keys[0])]


@dataclass(frozen=True)
class FoldReport:
    degenerate_triangles: int
    crossing_pairs: int

    @property
    def fold_count(self) -> int:
        return self.degenerate_triangles + self.crossing_pairs


def _segment_hits_triangle(p0, p1, a, b, c, eps=1e-12):
    """Vectorized Moller-Trumbore: does segment p0->p1 cross triangle abc?
    All arguments (P, 3); returns (P,) bools."""
    d = p1 - p0
    e1 = b - a
    e2 = c - a
    h = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, h)
    ok = np.abs(det) > eps
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = p0 - a
    u = inv * np.einsum("ij,ij->i", s, h)
    q = np.cross(s, e1)
    v = inv * np.einsum("ij,ij->i", d, q)
    t = inv * np.einsum("ij,ij->i", e2, q)
    return ok & (u >= -eps) & (v >= -eps) & (u + v <= 1 + eps) & (t >= -eps) & (t <= 1 + eps)


def fold_report(mesh: MapMesh) -> FoldReport:
    """Count degenerate 3D triangles and non-adjacent triangle pairs whose 3D
    images intersect (their uv triangles are disjoint by construction)."""
    tris = mesh.triangles
    P = mesh.positions
    cross = np.cross(P[tris[:, 1]] - P[tris[:, 0]], P[tris[:, 2]] - P[tris[:, 0]])
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    scale = float(np.linalg.norm(P.max(axis=0) - P.min(axis=0))) or 1.0
    degenerate = int((areas < 1e-14 * scale * scale).sum())

    # candidate pairs from a uniform grid over triangle AABBs
    lo = np.minimum(np.minimum(P[tris[:, 0]], P[tris[:, 1]]), P[tris[:, 2]])
    hi = np.maximum(np.maximum(P[tris[:, 0]], P[tris[:, 1]]), P[tris[:, 2]])
    cell = max(float(np.median(hi - lo)) * 2.0, 1e-12)
    buckets: dict[tuple, list[int]] = {}
    ilo = np.floor(lo / cell).astype(np.int64)
    ihi = np.floor(hi / cell).astype(np.int64)
    for t in range(len(tris)):
        for gx in range(ilo[t, 0], ihi[t, 0] + 1):
            for gy in range(ilo[t, 1], ihi[t, 1] + 1):
                for gz in range(ilo[t, 2], ihi[t, 2] + 1):
                    buckets.setdefault((gx, gy, gz), []).append(t)
    pairs = set()
    for members in buckets.values():
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                pairs.add((members[i], members[j]))
    if not pairs:
        return FoldReport(degenerate, 0)
    pa = np.array(sorted(pairs), dtype=np.int64)
    # drop pairs sharing a vertex (uv-adjacent) and non-overlapping AABBs
    shared = np.zeros(len(pa), dtype=bool)
    for k in range(3):
        for l in range(3):
            shared |= tris[pa[:, 0], k] == tris[pa[:, 1], l]
    boxes = ~np.any((hi[pa[:, 0]] < lo[pa[:, 1]]) | (hi[pa[:, 1]] < lo[pa[:, 0]]), axis=1)
    pa = pa[boxes & ~shared]
    if len(pa) == 0:
        return FoldReport(degenerate, 0)
    A, B = pa[:, 0], pa[:, 1]
    hit = np.zeros(len(pa), dtype=bool)
    for e0, e1 in ((0, 1), (1, 2), (2, 0)):
        hit |= _segment_hits_triangle(
            P[tris[A, e0]], P[tris[A, e1]],
            P[tris[B, 0]], P[tris[B, 1]], P[tris[B, 2]],
        )
        hit |= _segment_hits_triangle(
            P[tris[B, e0]], P[tris[B, e1]],
            P[tris[A, 0]], P[tris[A, 1]], P[tris[A, 2]],
        )
    return FoldReport(degenerate, int(hit.sum()))


def export_obj(mesh: MapMesh, path) -> None:
    """OBJ with uv: v lines, vt lines rescaled from D_R to [0,1]^2, f lines
    with v/vt indices. The affine uv rescaling is recorded in the header."""
    R = float(mesh.R)
    with open(path, "w") as fh:
        fh.write("# geoexp map mesh\n")
        fh.write(f"# vt = (uv + {R!r}) / (2 * {R!r}); uv = vt * {2 * R!r} - {R!r}\n")
        for p in mesh.positions:
            fh.write(f"v {float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n")
        for uv in mesh.uv:
            s = (uv + R) / (2.0 * R)
            fh.write(f"vt {float(s[0])!r} {float(s[1])!r}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0]+1}/{t[0]+1} {t[1]+1}/{t[1]+1} {t[2]+1}/{t[2]+1}\n")


def load_obj_with_uv(path):
    """Positions, uvs (in vt units), and per-corner index triples from an OBJ
    with v/vt records. Returns (positions, uvs, pos_tris, uv_tris)."""
    vs, vts, f_pos, f_uv = [], [], [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                vs.append([float(x) for x in parts[1:4]])
            elif parts[0] == "vt":
                vts.append([float(x) for x in parts[1:3]])
            elif parts[0] == "f":
                pos_idx, uv_idx = [], []
                for tok in parts[1:]:
                    fields = tok.split("/")
                    pos_idx.append(int(fields[0]) - 1)
                    uv_idx.append(int(fields[1]) - 1 if len(fields) > 1 and fields[1] else int(fields[0]) - 1)
                for k in range(1, len(pos_idx) - 1):
                    f_pos.append([pos_idx[0], pos_idx[k], pos_idx[k + 1]])
                    f_uv.append([uv_idx[0], uv_idx[k], uv_idx[k + 1]])
    return (
        np.asarray(vs, dtype=np.float64),
        np.asarray(vts, dtype=np.float64),
        np.asarray(f_pos, dtype=np.int64),
        np.asarray(f_uv, dtype=np.int64),
    )
