"""Implicit surface interface: field values, smoothed gradients, projection.

A surface is anything with a scalar field `eval` and a `raw_gradient`; the
zero level set is the geometry. Everything downstream (tracing, fitting,
inversion) talks to surfaces only through this interface plus the smoothed
gradient / projection operators defined here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import DegenerateGradient, InvalidPrimitive, NoConvergence

FD_STEP = 1e-6  # central-difference step, world rescaled to [-1,1]^3


@dataclass(frozen=True)
class SmoothingConfig:
    """Monte Carlo ball-average settings for the smoothed gradient.

    With `enabled=False` the raw gradient is used everywhere instead; this is
    the fast path for fields that are exact SDFs.
    """

    epsilon: float = 1e-4
    sample_count: int = 10
    seed: int = 0
    enabled: bool = True

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


@dataclass(frozen=True)
class ProjectionConfig:
    tolerance: float = 1e-10
    max_iterations: int = 100

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


class ImplicitSurface:
    """Scalar field whose zero level set is the surface of interest.

    Subclasses implement `_value` and (optionally) `_gradient`; the default
    gradient is a central finite difference. Evaluation is pure; the query
    counters are bookkeeping only (per-instance, not thread-safe).
    """

    def __init__(self):
        self.eval_count = 0
        self.gradient_count = 0

    def eval(self, x) -> float:
        self.eval_count += 1
        return float(self._value(np.asarray(x, dtype=np.float64)))

    def raw_gradient(self, x) -> np.ndarray:
        self.gradient_count += 1
        return np.asarray(self._gradient(np.asarray(x, dtype=np.float64)), dtype=np.float64)

    @property
    def total_queries(self) -> int:
        return self.eval_count + self.gradient_count

    def reset_counters(self) -> None:
        self.eval_count = 0
        self.gradient_count = 0

    def _value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def _gradient(self, x: np.ndarray) -> np.ndarray:
        g = np.empty(3)
        for d in range(3):
            e = np.zeros(3)
            e[d] = FD_STEP
            g[d] = (self._value(x + e) - self._value(x - e)) / (2.0 * FD_STEP)
        return g


def smoothed_gradient(surface: ImplicitSurface, x, cfg: SmoothingConfig) -> np.ndarray:
    """Ball-averaged gradient estimate at `x`.

    Mean of `raw_gradient` over `sample_count` points uniform in the ball of
    radius `epsilon` about `x`. Sample positions are keyed on
    (seed, quantized x), so two calls with identical inputs are bit-identical.
    """
    x = np.asarray(x, dtype=np.float64)
    if not cfg.enabled:
        return surface.raw_gradient(x)
    key = rng.point_key(cfg.seed, x)
    pts = rng.ball_samples(key, x, cfg.epsilon, cfg.sample_count)
    acc = np.zeros(3)
    for p in pts:
        acc += surface.raw_gradient(p)
    return acc / cfg.sample_count


def normal(surface: ImplicitSurface, x, cfg: SmoothingConfig) -> np.ndarray:
    """Unit normal (normalized smoothed gradient) at `x`."""
    g = smoothed_gradient(surface, x, cfg)
    n = np.linalg.norm(g)
    if n <= 1e-12:
        raise DegenerateGradient(f"gradient norm {n:g} at {x}")
    return g / n


def project(
    surface: ImplicitSurface,
    x,
    cfg: ProjectionConfig = ProjectionConfig(),
    smoothing: SmoothingConfig = SmoothingConfig(),
) -> np.ndarray:
    """Pull `x` onto the zero set by generalized-Newton iteration.

    Each step evaluates f and the (smoothed) gradient at the current iterate:
    x <- x - f(x) g / |g|^2. Exact SDFs converge in one step.
    """
    x = np.asarray(x, dtype=np.float64).copy()
    for _ in range(cfg.max_iterations):
        f = surface.eval(x)
        if abs(f) <= cfg.tolerance:
            return x
        g = smoothed_gradient(surface, x, smoothing)
        g2 = float(g @ g)
        if g2 <= 1e-24 or not np.isfinite(g2):
            raise NoConvergence(f"degenerate gradient during projection at {x}")
        x = x - f * g / g2
        if not np.all(np.isfinite(x)):
            raise NoConvergence("projection iterate diverged")
    if abs(surface.eval(x)) <= cfg.tolerance:
        return x
    raise NoConvergence(f"|f| > {cfg.tolerance:g} after {cfg.max_iterations} iterations")


# ---------------------------------------------------------------------------
# CSG fields


@dataclass
class CsgNode:
    """A node of a CSG tree: a primitive with parameters, or an operator
    (union / intersection / complement / offset) over child nodes."""

    kind: str
    params: dict = field(default_factory=dict)
    children: list = field(default_factory=list)

    PRIMITIVES = ("sphere", "torus", "plane", "saddle", "box")
    OPERATORS = ("union", "intersection", "complement", "offset")


def sphere(radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> CsgNode:
    return CsgNode("sphere", {"radius": float(radius), "center": np.asarray(center, float)})


def torus(major_radius: float = 1.0, minor_radius: float = 0.3, center=(0.0, 0.0, 0.0)) -> CsgNode:
    return CsgNode(
        "torus",
        {
            "major_radius": float(major_radius),
            "minor_radius": float(minor_radius),
            "center": np.asarray(center, float),
        },
    )


def plane(normal=(0.0, 0.0, 1.0), offset: float = 0.0) -> CsgNode:
    return CsgNode("plane", {"normal": np.asarray(normal, float), "offset": float(offset)})


def saddle(scale: float = 1.0) -> CsgNode:
    return CsgNode("saddle", {"scale": float(scale)})


def box(half_extents=(0.5, 0.5, 0.5), center=(0.0, 0.0, 0.0)) -> CsgNode:
    return CsgNode(
        "box",
        {"half_extents": np.asarray(half_extents, float), "center": np.asarray(center, float)},
    )


def union(*children: CsgNode) -> CsgNode:
    return CsgNode("union", {}, list(children))


def intersection(*children: CsgNode) -> CsgNode:
    return CsgNode("intersection", {}, list(children))


def complement(child: CsgNode) -> CsgNode:
    return CsgNode("complement", {}, [child])


def offset(child: CsgNode, amount: float) -> CsgNode:
    return CsgNode("offset", {"amount": float(amount)}, [child])


def _validate(node: CsgNode) -> None:
    k = node.kind
    if k == "sphere":
        if node.params["radius"] <= 0:
            raise InvalidPrimitive("sphere radius must be > 0")
    elif k == "torus":
        if node.params["major_radius"] <= 0 or node.params["minor_radius"] <= 0:
            raise InvalidPrimitive("torus radii must be > 0")
        if node.params["minor_radius"] >= node.params["major_radius"]:
            raise InvalidPrimitive("torus minor radius must be < major radius")
    elif k == "plane":
        if np.linalg.norm(node.params["normal"]) <= 0:
            raise InvalidPrimitive("plane normal must be nonzero")
    elif k == "saddle":
        pass
    elif k == "box":
        if np.any(node.params["half_extents"] <= 0):
            raise InvalidPrimitive("box half extents must be > 0")
    elif k in ("union", "intersection"):
        if len(node.children) < 1:
            raise InvalidPrimitive(f"{k} needs at least one child")
        for c in node.children:
            _validate(c)
    elif k == "complement":
        if len(node.children) != 1:
            raise InvalidPrimitive("complement takes exactly one child")
        _validate(node.children[0])
    elif k == "offset":
        if len(node.children) != 1:
            raise InvalidPrimitive("offset takes exactly one child")
        _validate(node.children[0])
    else:
        raise InvalidPrimitive(f"unknown CSG node kind {k!r}")


def _eval_node(node: CsgNode, x: np.ndarray) -> float:
    k = node.kind
    p = node.params
    if k == "sphere":
        return float(np.linalg.norm(x - p["center"]) - p["radius"])
    if k == "torus":
        d = x - p["center"]
        q = np.hypot(np.hypot(d[0], d[1]) - p["major_radius"], d[2])
        return float(q - p["minor_radius"])
    if k == "plane":
        n = p["normal"]
        return float((x @ n) / np.linalg.norm(n) - p["offset"])
    if k == "saddle":
        s = p["scale"]
        return float(x[2] - s * (x[0] * x[0] - x[1] * x[1]))
    if k == "box":
        q = np.abs(x - p["center"]) - p["half_extents"]
        outside = np.linalg.norm(np.maximum(q, 0.0))
        inside = min(q.max(), 0.0)
        return float(outside + inside)
    if k == "union":
        return min(_eval_node(c, x) for c in node.children)
    if k == "intersection":
        return max(_eval_node(c, x) for c in node.children)
    if k == "complement":
        return -_eval_node(node.children[0], x)
    if k == "offset":
        return _eval_node(node.children[0], x) - p["amount"]
    raise InvalidPrimitive(k)


def _grad_node(node: CsgNode, x: np.ndarray) -> np.ndarray:
    k = node.kind
    p = node.params
    if k == "sphere":
        d = x - p["center"]
        r = np.linalg.norm(d)
        if r < 1e-300:
            return np.zeros(3)
        return d / r
    if k == "torus":
        d = x - p["center"]
        rho = np.hypot(d[0], d[1])
        q = np.array([rho - p["major_radius"], d[2]])
        qn = np.hypot(q[0], q[1])
        if qn < 1e-300 or rho < 1e-300:
            return np.zeros(3)
        drho = np.array([d[0] / rho, d[1] / rho, 0.0])
        return (q[0] * drho + q[1] * np.array([0.0, 0.0, 1.0])) / qn
    if k == "plane":
        n = p["normal"]
        return n / np.linalg.norm(n)
    if k == "saddle":
        s = p["scale"]
        return np.array([-2.0 * s * x[0], 2.0 * s * x[1], 1.0])
    if k == "box":
        q = np.abs(x - p["center"]) - p["half_extents"]
        sgn = np.sign(x - p["center"])
        sgn[sgn == 0] = 1.0
        if np.any(q > 0):
            outer = np.maximum(q, 0.0)
            return sgn * outer / np.linalg.norm(outer)
        d = np.argmax(q)
        g = np.zeros(3)
        g[d] = sgn[d]
        return g
    if k == "union":
        vals = [_eval_node(c, x) for c in node.children]
        return _grad_node(node.children[int(np.argmin(vals))], x)
    if k == "intersection":
        vals = [_eval_node(c, x) for c in node.children]
        return _grad_node(node.children[int(np.argmax(vals))], x)
    if k == "complement":
        return -_grad_node(node.children[0], x)
    if k == "offset":
        return _grad_node(node.children[0], x)
    raise InvalidPrimitive(k)


class CsgField(ImplicitSurface):
    """Field built from a CSG tree; min/max combinators with subgradients of
    the active child."""

    def __init__(self, root: CsgNode):
        super().__init__()
        _validate(root)
        self.root = root

    def _value(self, x):
        return _eval_node(self.root, x)

    def _gradient(self, x):
        return _grad_node(self.root, x)


def build_csg_field(root: CsgNode) -> CsgField:
    return CsgField(root)
