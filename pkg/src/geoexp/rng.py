"""Counter-based deterministic random sampling.

All randomness in the package flows through keyed, stateless generators so
that results are bit-reproducible regardless of call order or parallel
scheduling. The generator is a SplitMix64-style hash of (key, counter).
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z &= 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * _MIX1) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * _MIX2) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def derive_key(*parts: int) -> int:
    """Fold integer parts into a single 64-bit stream key."""
    k = 0x8E51ECA6E7C264D1
    for p in parts:
        k = _mix((k + (int(p) & 0xFFFFFFFFFFFFFFFF) + _GOLDEN))
    return k


def label_key(base: int, label: str) -> int:
    """Derive a sub-stream key from a base seed and a text label."""
    parts = [base] + [b for b in label.encode()]
    return derive_key(*parts)


def uniforms(key: int, count: int, offset: int = 0) -> np.ndarray:
    """`count` doubles in the open interval (0, 1), at counter positions
    offset..offset+count-1 of the stream `key`."""
    ctr = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    z = (np.uint64(key) + ctr * np.uint64(_GOLDEN)) & _MASK
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)) & _MASK
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)) & _MASK
    z = z ^ (z >> np.uint64(31))
    # top 52 bits, centered: strictly inside (0, 1)
    return ((z >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0**-52


def ball_samples(key: int, center: np.ndarray, radius: float, count: int) -> np.ndarray:
    """`count` points uniform in the ball of `radius` about `center` (3D)."""
    u = uniforms(key, 5 * count).reshape(count, 5)
    r = np.sqrt(-2.0 * np.log(u[:, 0]))
    g = np.empty((count, 3))
    g[:, 0] = r * np.cos(2.0 * np.pi * u[:, 1])
    g[:, 1] = r * np.sin(2.0 * np.pi * u[:, 1])
    g[:, 2] = np.sqrt(-2.0 * np.log(u[:, 2])) * np.cos(2.0 * np.pi * u[:, 3])
    norms = np.linalg.norm(g, axis=1)
    norms[norms < 1e-300] = 1.0
    radii = radius * np.cbrt(u[:, 4])
    return center + g * (radii / norms)[:, None]


def point_key(seed: int, x: np.ndarray) -> int:
    """Key for the sample stream at point `x`: quantized so identical inputs
    share a stream and parallel evaluation order is irrelevant."""
    q = np.round(np.asarray(x, dtype=np.float64) * 1e12).astype(np.int64)
    return derive_key(seed, int(q[0]), int(q[1]), int(q[2]))
