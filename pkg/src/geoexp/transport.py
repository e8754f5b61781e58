"""Smallest-rotation parallel transport between tangent planes."""

from __future__ import annotations

import numpy as np

from .errors import AntipodalNormals


def transport_rotation(n_from, n_to) -> np.ndarray:
    """Smallest rotation taking the unit normal n_from to n_to (Rodrigues).

    Identity when the normals already agree; antipodal normals have no
    well-defined axis, which signals a step across a sharp fold.
    """
    n_from = np.asarray(n_from, dtype=np.float64)
    n_to = np.asarray(n_to, dtype=np.float64)
    c = float(np.clip(n_from @ n_to, -1.0, 1.0))
    axis = np.cross(n_from, n_to)
    s = np.linalg.norm(axis)
    if c <= -1.0 + 1e-9:
        raise AntipodalNormals("cannot transport across opposite normals")
    if s < 1e-12:
        return np.eye(3)
    axis = axis / s
    K = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)
