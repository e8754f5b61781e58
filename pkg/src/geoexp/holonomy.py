"""Wedge-holonomy measurement and smoothing.

The angle a tangent picks up when transported between adjacent radial curves
measures the Gaussian curvature enclosed by the wedge between them. Smoothing
those wedge holonomies with a regularized periodic-Laplacian solve keeps the
curves spreading as if the surface had constant curvature. The strip variant
(differences between consecutive fronts) is provided purely as a diagnostic:
its rotations grow with the step index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import SolveFailure
from .transport import transport_rotation


@dataclass(frozen=True)
class FrontAngles:
    """Signed angles from each tangent to its transported neighbor, one per
    adjacent pair around the front (flat value: -2*pi/m)."""

    phi: np.ndarray


@dataclass(frozen=True)
class SmoothingSolve:
    theta: np.ndarray
    kappa: float
    residual: float


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    out = np.mod(-np.asarray(a) + np.pi, 2.0 * np.pi)
    return -(out - np.pi)


def change_in_angles(front_points, tangents, normals) -> FrontAngles:
    """Measure phi_i = signed angle from t_{i+1} to the transported t_i,
    about the normal at point i+1 (indices mod m)."""
    tangents = np.asarray(tangents, dtype=np.float64)
    normals = np.asarray(normals, dtype=np.float64)
    m = len(tangents)
    phi = np.empty(m)
    for i in range(m):
        k = (i + 1) % m
        t_hat = transport_rotation(normals[i], normals[k]) @ tangents[i]
        cross = np.cross(tangents[k], t_hat)
        phi[i] = np.arctan2(cross @ normals[k], tangents[k] @ t_hat)
    return FrontAngles(phi=phi)


def angle_differences(phi) -> np.ndarray:
    """Phi_i = phi_{i-1} - phi_i, wrapped to (-pi, pi]."""
    phi = np.asarray(phi, dtype=np.float64)
    return wrap_angle(np.roll(phi, 1) - phi)


def wedge_holonomy(theta, phi, m: int | None = None) -> np.ndarray:
    """R(Delta_i) = theta_i + phi_i - theta_{i+1} + 2*pi/m."""
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if m is None:
        m = len(phi)
    return theta + phi - np.roll(theta, -1) + 2.0 * np.pi / m


def apply_periodic_laplacian(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return 2.0 * v - np.roll(v, 1) - np.roll(v, -1)


def solve_regularized_laplacian(rhs, kappa: float) -> np.ndarray:
    """Solve (L + (1/kappa) I) x = rhs for the 1D periodic Laplacian L,
    by cyclic-tridiagonal elimination with a rank-1 corner correction."""
    rhs = np.asarray(rhs, dtype=np.float64)
    m = len(rhs)
    if m < 3:
        raise ValueError("need at least 3 unknowns")
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    b = 2.0 + 1.0 / kappa
    # A = tridiag(-1, b, -1) with corners -1; A = A' + u v^T,
    # u = (gamma, 0...0, -1), v = (1, 0...0, -1/gamma), gamma = -b
    gamma = -b
    diag = np.full(m, b)
    diag[0] = b - gamma
    diag[-1] = b - 1.0 / gamma
    ab = np.zeros((3, m))
    ab[0, 1:] = -1.0
    ab[1, :] = diag
    ab[2, :-1] = -1.0
    u = np.zeros(m)
    u[0] = gamma
    u[-1] = -1.0
    y = solve_banded((1, 1), ab, rhs)
    z = solve_banded((1, 1), ab, u)
    vy = y[0] - y[-1] / gamma
    vz = z[0] - z[-1] / gamma
    return y - z * (vy / (1.0 + vz))


def _checked_solve(rhs: np.ndarray, kappa: float) -> SmoothingSolve:
    theta = solve_regularized_laplacian(rhs, kappa)
    residual = float(
        np.linalg.norm(apply_periodic_laplacian(theta) + theta / kappa - rhs)
    )
    if residual > 1e-10 * np.linalg.norm(rhs) + 1e-12:
        raise SolveFailure(f"cyclic tridiagonal residual {residual:g}")
    return SmoothingSolve(theta=theta, kappa=kappa, residual=residual)


def wedge_smoothing_solve(phi, kappa: float) -> SmoothingSolve:
    """Rotations minimizing the wedge-holonomy Dirichlet energy plus the
    1/kappa norm regularizer: (L + (1/kappa) I) Theta = Phi."""
    return _checked_solve(angle_differences(phi), kappa)


def strip_smoothing_solve(phi_current, phi_previous, theta_previous, kappa: float) -> SmoothingSolve:
    """Diagnostic variant smoothing the outermost strip holonomies instead.

    Same operator, right-hand side Phi_j - Phi_{j-1} - L Theta_{j-1}; the
    history term makes the rotations grow with the step index, which is why
    the wedge solve is the one used during tracing.
    """
    theta_previous = np.asarray(theta_previous, dtype=np.float64)
    rhs = (
        angle_differences(phi_current)
        - angle_differences(phi_previous)
        - apply_periodic_laplacian(theta_previous)
    )
    return _checked_solve(rhs, kappa)
