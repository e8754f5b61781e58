"""Axis-aligned bounding-box tree over triangles.

Supports closest-point queries, winding-number queries (exact solid angles
near the query, first-order dipole approximation for far clusters), and
radius-limited triangle collection. Hot paths are numba kernels.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LEAF_SIZE = 8
WINDING_BETA = 2.3  # dipole far-field factor


@njit(cache=True)
def _tri_closest(ax, ay, az, bx, by, bz, cx, cy, cz, px, py, pz):
    """Closest point on triangle abc to p (Ericson's region test).

    Returns (d2, qx, qy, qz, u, v, w) with barycentric u,v,w wrt a,b,c.
    """
    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    apx, apy, apz = px - ax, py - ay, pz - az

    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        qx, qy, qz = ax, ay, az
        u, v, w = 1.0, 0.0, 0.0
    else:
        bpx, bpy, bpz = px - bx, py - by, pz - bz
        d3 = abx * bpx + aby * bpy + abz * bpz
        d4 = acx * bpx + acy * bpy + acz * bpz
        if d3 >= 0.0 and d4 <= d3:
            qx, qy, qz = bx, by, bz
            u, v, w = 0.0, 1.0, 0.0
        else:
            vc = d1 * d4 - d3 * d2
            if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
                t = d1 / (d1 - d3)
                qx, qy, qz = ax + t * abx, ay + t * aby, az + t * abz
                u, v, w = 1.0 - t, t, 0.0
            else:
                cpx, cpy, cpz = px - cx, py - cy, pz - cz
                d5 = abx * cpx + aby * cpy + abz * cpz
                d6 = acx * cpx + acy * cpy + acz * cpz
                if d6 >= 0.0 and d5 <= d6:
                    qx, qy, qz = cx, cy, cz
                    u, v, w = 0.0, 0.0, 1.0
                else:
                    vb = d5 * d2 - d1 * d6
                    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
                        t = d2 / (d2 - d6)
                        qx, qy, qz = ax + t * acx, ay + t * acy, az + t * acz
                        u, v, w = 1.0 - t, 0.0, t
                    else:
                        va = d3 * d6 - d5 * d4
                        if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
                            t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
                            qx = bx + t * (cx - bx)
                            qy = by + t * (cy - by)
                            qz = bz + t * (cz - bz)
                            u, v, w = 0.0, 1.0 - t, t
                        else:
                            denom = 1.0 / (va + vb + vc)
                            v = vb * denom
                            w = vc * denom
                            u = 1.0 - v - w
                            qx = ax + abx * v + acx * w
                            qy = ay + aby * v + acy * w
                            qz = az + abz * v + acz * w
    dx, dy, dz = px - qx, py - qy, pz - qz
    return dx * dx + dy * dy + dz * dz, qx, qy, qz, u, v, w


@njit(cache=True)
def _aabb_dist2(lo, hi, p):
    d2 = 0.0
    for k in range(3):
        d = 0.0
        if p[k] < lo[k]:
            d = lo[k] - p[k]
        elif p[k] > hi[k]:
            d = p[k] - hi[k]
        d2 += d * d
    return d2


@njit(cache=True)
def _tree_closest(nlo, nhi, left, right, start, count, perm, v0, v1, v2, p, upper2):
    """Closest point over all triangles within sqrt(upper2) of p.

    Returns (d2, qx, qy, qz, tri, u, v, w); tri == -1 if nothing within range.
    """
    best = upper2
    bqx = bqy = bqz = 0.0
    bu = bv = bw = 0.0
    btri = -1
    stack = np.empty(128, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        if _aabb_dist2(nlo[node], nhi[node], p) >= best:
            continue
        l = left[node]
        if l < 0:
            s = start[node]
            for i in range(s, s + count[node]):
                t = perm[i]
                d2, qx, qy, qz, u, v, w = _tri_closest(
                    v0[t, 0], v0[t, 1], v0[t, 2],
                    v1[t, 0], v1[t, 1], v1[t, 2],
                    v2[t, 0], v2[t, 1], v2[t, 2],
                    p[0], p[1], p[2],
                )
                if d2 < best:
                    best = d2
                    bqx, bqy, bqz = qx, qy, qz
                    bu, bv, bw = u, v, w
                    btri = t
        else:
            r = right[node]
            dl = _aabb_dist2(nlo[l], nhi[l], p)
            dr = _aabb_dist2(nlo[r], nhi[r], p)
            if dl <= dr:
                if dr < best:
                    stack[top] = r
                    top += 1
                if dl < best:
                    stack[top] = l
                    top += 1
            else:
                if dl < best:
                    stack[top] = l
                    top += 1
                if dr < best:
                    stack[top] = r
                    top += 1
    return best, bqx, bqy, bqz, btri, bu, bv, bw


@njit(cache=True)
def _tree_winding(nlo, nhi, left, right, start, count, perm, v0, v1, v2,
                  node_an, node_ctr, node_far2, p):
    """Winding number of the triangle soup at p.

    Far clusters contribute a single dipole; near clusters recurse down to
    exact per-triangle solid angles (van Oosterom-Strackee).
    """
    w = 0.0
    stack = np.empty(128, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    fourpi = 4.0 * np.pi
    while top > 0:
        top -= 1
        node = stack[top]
        dx = node_ctr[node, 0] - p[0]
        dy = node_ctr[node, 1] - p[1]
        dz = node_ctr[node, 2] - p[2]
        d2 = dx * dx + dy * dy + dz * dz
        if d2 > node_far2[node]:
            d3 = d2 * np.sqrt(d2)
            w += (node_an[node, 0] * dx + node_an[node, 1] * dy + node_an[node, 2] * dz) / (fourpi * d3)
            continue
        l = left[node]
        if l < 0:
            s = start[node]
            for i in range(s, s + count[node]):
                t = perm[i]
                ax, ay, az = v0[t, 0] - p[0], v0[t, 1] - p[1], v0[t, 2] - p[2]
                bx, by, bz = v1[t, 0] - p[0], v1[t, 1] - p[1], v1[t, 2] - p[2]
                cx, cy, cz = v2[t, 0] - p[0], v2[t, 1] - p[1], v2[t, 2] - p[2]
                la = np.sqrt(ax * ax + ay * ay + az * az)
                lb = np.sqrt(bx * bx + by * by + bz * bz)
                lc = np.sqrt(cx * cx + cy * cy + cz * cz)
                det = (ax * (by * cz - bz * cy)
                       - ay * (bx * cz - bz * cx)
                       + az * (bx * cy - by * cx))
                den = (la * lb * lc
                       + (ax * bx + ay * by + az * bz) * lc
                       + (bx * cx + by * cy + bz * cz) * la
                       + (cx * ax + cy * ay + cz * az) * lb)
                w += 2.0 * np.arctan2(det, den) / fourpi
        else:
            stack[top] = l
            top += 1
            stack[top] = right[node]
            top += 1
    return w


class AabbTree:
    """Median-split AABB tree over a triangle array (deterministic build)."""

    def __init__(self, vertices: np.ndarray, triangles: np.ndarray):
        vertices = np.asarray(vertices, dtype=np.float64)
        triangles = np.asarray(triangles, dtype=np.int64)
        self.v0 = np.ascontiguousarray(vertices[triangles[:, 0]])
        self.v1 = np.ascontiguousarray(vertices[triangles[:, 1]])
        self.v2 = np.ascontiguousarray(vertices[triangles[:, 2]])
        T = len(triangles)
        tmin = np.minimum(np.minimum(self.v0, self.v1), self.v2)
        tmax = np.maximum(np.maximum(self.v0, self.v1), self.v2)
        centers = (self.v0 + self.v1 + self.v2) / 3.0
        cross = np.cross(self.v1 - self.v0, self.v2 - self.v0)
        area_normals = 0.5 * cross
        areas = np.linalg.norm(area_normals, axis=1)

        perm = np.arange(T, dtype=np.int64)
        nlo, nhi, left, right, start, count = [], [], [], [], [], []
        an, ctr, far2 = [], [], []
        # stack of (permutation slice lo, hi, node index)
        stack = [(0, T)]
        order: list[tuple[int, int]] = []
        # first pass allocates nodes breadth-agnostically via explicit recursion
        def alloc(lo_i: int, hi_i: int) -> int:
            idx = len(nlo)
            sub = perm[lo_i:hi_i]
            nlo.append(tmin[sub].min(axis=0))
            nhi.append(tmax[sub].max(axis=0))
            a = area_normals[sub].sum(axis=0)
            tot = areas[sub].sum()
            if tot > 0:
                c = (centers[sub] * areas[sub, None]).sum(axis=0) / tot
            else:
                c = centers[sub].mean(axis=0)
            pts = np.vstack([self.v0[sub], self.v1[sub], self.v2[sub]])
            r2 = ((pts - c) ** 2).sum(axis=1).max()
            an.append(a)
            ctr.append(c)
            far2.append(WINDING_BETA * WINDING_BETA * r2)
            left.append(-1)
            right.append(-1)
            start.append(lo_i)
            count.append(hi_i - lo_i)
            if hi_i - lo_i > LEAF_SIZE:
                axis = int(np.argmax(nhi[idx] - nlo[idx]))
                key = centers[sub, axis]
                local = np.argsort(key, kind="stable")
                perm[lo_i:hi_i] = sub[local]
                mid = lo_i + (hi_i - lo_i) // 2
                li = alloc(lo_i, mid)
                ri = alloc(mid, hi_i)
                left[idx] = li
                right[idx] = ri
                count[idx] = 0
            return idx

        import sys

        old_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old_limit, 10000))
        try:
            alloc(0, T)
        finally:
            sys.setrecursionlimit(old_limit)

        self.perm = perm
        self.node_lo = np.asarray(nlo)
        self.node_hi = np.asarray(nhi)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.start = np.asarray(start, dtype=np.int64)
        self.count = np.asarray(count, dtype=np.int64)
        self.node_an = np.asarray(an)
        self.node_ctr = np.asarray(ctr)
        self.node_far2 = np.asarray(far2)

    def closest_point(self, p, upper: float = np.inf):
        """(distance, point, triangle index, barycentric) of the nearest
        triangle point within `upper`; triangle index -1 if none."""
        p = np.asarray(p, dtype=np.float64)
        upper2 = upper * upper if np.isfinite(upper) else np.inf
        d2, qx, qy, qz, tri, u, v, w = _tree_closest(
            self.node_lo, self.node_hi, self.left, self.right, self.start,
            self.count, self.perm, self.v0, self.v1, self.v2, p, upper2,
        )
        if tri < 0:
            return np.inf, None, -1, None
        return np.sqrt(d2), np.array([qx, qy, qz]), int(tri), np.array([u, v, w])

    def winding_number(self, p) -> float:
        p = np.asarray(p, dtype=np.float64)
        return float(_tree_winding(
            self.node_lo, self.node_hi, self.left, self.right, self.start,
            self.count, self.perm, self.v0, self.v1, self.v2,
            self.node_an, self.node_ctr, self.node_far2, p,
        ))

    def triangles_within(self, p, radius: float) -> np.ndarray:
        """Indices of all triangles whose closest point to p is <= radius."""
        p = np.asarray(p, dtype=np.float64)
        r2 = radius * radius
        out = []
        stack = [0]
        while stack:
            node = stack.pop()
            if _aabb_dist2(self.node_lo[node], self.node_hi[node], p) > r2:
                continue
            if self.left[node] < 0:
                s = self.start[node]
                for i in range(s, s + self.count[node]):
                    t = self.perm[i]
                    d2 = _tri_closest(
                        self.v0[t, 0], self.v0[t, 1], self.v0[t, 2],
                        self.v1[t, 0], self.v1[t, 1], self.v1[t, 2],
                        self.v2[t, 0], self.v2[t, 1], self.v2[t, 2],
                        p[0], p[1], p[2],
                    )[0]
                    if d2 <= r2:
                        out.append(t)
            else:
                stack.append(self.left[node])
                stack.append(self.right[node])
        return np.array(sorted(out), dtype=np.int64)
