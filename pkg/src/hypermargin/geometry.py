"""Minkowski algebra and the standard models of hyperbolic space.

Vectors live in the ambient R^(d+1); index 0 is the time-like coordinate.
Points of the hyperboloid satisfy x*x = 1 with x0 >= 1 (upper sheet),
classifiers are vectors w with w*w < 0.  The Poincare ball and the
half-plane are provided as alternative charts, with isometric maps
between all three.
"""

from __future__ import annotations

import numpy as np

# |x*x - 1| tolerance for hyperboloid membership (relative to x0^2 for
# far-out points, where the quadratic form loses absolute precision).
ONSHEET_TOL = 1e-9


def minkowski(u, v):
    """Minkowski product u0*v0 - sum_{i>=1} ui*vi, broadcast over leading axes."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape[-1] != v.shape[-1]:
        raise ValueError(f"dimension mismatch: {u.shape[-1]} != {v.shape[-1]}")
    return u[..., 0] * v[..., 0] - np.sum(u[..., 1:] * v[..., 1:], axis=-1)


def hat(v):
    """Flip the spatial signs: (v0, v1, ..., vd) -> (v0, -v1, ..., -vd).

    Turns the Minkowski product into a Euclidean one: u*v = <hat(u), v>.
    """
    v = np.asarray(v, dtype=float)
    out = v.copy()
    out[..., 1:] *= -1.0
    return out


def time_norm(w):
    """sqrt(-w*w) for a time-like w; raises on space-like input."""
    q = -minkowski(w, w)
    if np.any(q <= 0.0):
        raise ValueError("vector is not time-like (w*w >= 0)")
    return np.sqrt(q)


def check_point(x, tol=ONSHEET_TOL, allow_lower_sheet=False):
    """Validate hyperboloid membership; returns the array unchanged.

    The membership test |x*x - 1| <= tol * max(1, x0^2) is relative for
    large x0, where the two squared terms cancel catastrophically.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("point has non-finite entries")
    q = minkowski(x, x)
    scale = np.maximum(1.0, x[..., 0] ** 2)
    if np.any(np.abs(q - 1.0) > tol * scale):
        raise ValueError("point is off the hyperboloid")
    if allow_lower_sheet:
        if np.any(np.abs(x[..., 0]) < 1.0 - tol):
            raise ValueError("point has |x0| < 1")
    elif np.any(x[..., 0] < 1.0 - tol):
        raise ValueError("point is not on the upper sheet (x0 < 1)")
    return x


def check_hypothesis(w):
    """Validate that w defines a nonempty decision boundary (w*w < 0)."""
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("hypothesis has non-finite entries")
    if minkowski(w, w) >= 0.0:
        raise ValueError("invalid classifier: w*w >= 0")
    return w


def lift(v):
    """Inverse chart R^d -> hyperboloid: x = (sqrt(1+|v|^2), v)."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot lift non-finite coordinates")
    x0 = np.sqrt(1.0 + np.sum(v * v, axis=-1, keepdims=True))
    return np.concatenate([x0, v], axis=-1)


def lorentz_distance(x, y, tol=ONSHEET_TOL):
    """Geodesic distance acosh(x*y) on the hyperboloid.

    Products within tol below 1 are clamped (round-off of nearby points);
    anything further below signals off-manifold input and raises.
    """
    p = minkowski(x, y)
    if np.any(p < 1.0 - tol):
        raise ValueError("x*y < 1: inputs are not on a common sheet")
    return np.arccosh(np.maximum(p, 1.0))


def normalize_hypothesis(w, mode="full"):
    """Rescale a classifier.

    full:       w / sqrt(-w*w), so the result has w*w = -1 exactly.
    perceptron: w / min(1, sqrt(-w*w)), so the result has -w*w >= 1.
    """
    w = check_hypothesis(w)
    t = float(time_norm(w))
    if mode == "full":
        return w / t
    if mode == "perceptron":
        return w / min(1.0, t)
    raise ValueError(f"unknown normalization mode {mode!r}")


def cosh_angle(u, v):
    """-(u*v) / (sqrt(-u*u) sqrt(-v*v)) for two time-like vectors."""
    tu = time_norm(u)
    tv = time_norm(v)
    return -minkowski(u, v) / (tu * tv)


# ---------------------------------------------------------------------------
# Model maps.  lorentz <-> ball in any dimension, ball <-> half-plane in 2d.
# All maps are isometries; the half-plane chart keeps its height coordinate
# last, matching the metric below.
# ---------------------------------------------------------------------------


def lorentz_to_ball(x):
    x = check_point(x)
    return x[..., 1:] / (1.0 + x[..., [0]])


def ball_to_lorentz(b):
    b = _check_ball(b)
    s = np.sum(b * b, axis=-1, keepdims=True)
    x0 = (1.0 + s) / (1.0 - s)
    sp = 2.0 * b / (1.0 - s)
    return np.concatenate([x0, sp], axis=-1)


def _check_ball(b):
    b = np.asarray(b, dtype=float)
    if np.any(np.sum(b * b, axis=-1) >= 1.0):
        raise ValueError("point is outside the open unit ball")
    return b


def _invert_through_unit_circle(x):
    # Inversion through the circle of radius sqrt(2) centered at (-1, 0).
    c = np.zeros_like(x)
    c[..., 0] = -1.0
    diff = x - c
    return c + 2.0 * diff / np.sum(diff * diff, axis=-1, keepdims=True)


def ball_to_halfplane(b):
    """Disk -> upper half-plane, d = 2 only; height is the second coordinate."""
    b = _check_ball(b)
    if b.shape[-1] != 2:
        raise ValueError("the half-plane chart is two-dimensional")
    h = _invert_through_unit_circle(b)
    return np.stack([h[..., 1], h[..., 0]], axis=-1)


def halfplane_to_ball(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 2:
        raise ValueError("the half-plane chart is two-dimensional")
    if np.any(p[..., 1] <= 0.0):
        raise ValueError("half-plane point must have positive height")
    h = np.stack([p[..., 1], p[..., 0]], axis=-1)
    return _invert_through_unit_circle(h)


def ball_distance(b1, b2):
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    d2 = np.sum((b1 - b2) ** 2, axis=-1)
    s1 = 1.0 - np.sum(b1 * b1, axis=-1)
    s2 = 1.0 - np.sum(b2 * b2, axis=-1)
    return np.arccosh(np.maximum(1.0 + 2.0 * d2 / (s1 * s2), 1.0))


def halfplane_distance(p1, p2):
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    d2 = np.sum((p1 - p2) ** 2, axis=-1)
    return np.arccosh(np.maximum(1.0 + d2 / (2.0 * p1[..., 1] * p2[..., 1]), 1.0))


_MODEL_MAPS = {
    "lorentz->ball": lorentz_to_ball,
    "ball->lorentz": ball_to_lorentz,
    "ball->halfplane": ball_to_halfplane,
    "halfplane->ball": halfplane_to_ball,
}


def model_map(p, direction):
    """Dispatch between charts; direction is e.g. 'lorentz->ball'."""
    try:
        f = _MODEL_MAPS[direction]
    except KeyError:
        raise ValueError(f"unknown direction {direction!r}; one of {sorted(_MODEL_MAPS)}")
    return f(p)
