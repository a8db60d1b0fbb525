"""Margin losses on the hyperboloid and their ambient-space gradients.

Every loss has the form l(x, y; w) = f(y * (w*x)) for a non-increasing
score function f.  Gradients with respect to w come out as
f'(s) * y * (x0, -x1, ..., -xd).
"""

from __future__ import annotations

import numpy as np

from .geometry import hat, minkowski

_ASINH1 = float(np.arcsinh(1.0))


def _sigmoid(t):
    # numerically stable 1 / (1 + exp(-t))
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class MarginLoss:
    """Score function f and its derivative; s is the product y * (w*x)."""

    name = "margin"

    def value(self, s):
        raise NotImplementedError

    def slope(self, s):
        raise NotImplementedError


class HyperbolicHinge(MarginLoss):
    """f(s) = max(0, asinh(1) - asinh(s)); flat for s >= 1."""

    name = "hinge"

    def value(self, s):
        s = np.asarray(s, dtype=float)
        return np.maximum(0.0, _ASINH1 - np.arcsinh(s))

    def slope(self, s):
        # zero subgradient on the flat side, including the kink at s = 1
        s = np.asarray(s, dtype=float)
        return np.where(s < 1.0, -1.0 / np.sqrt(1.0 + s * s), 0.0)


class SmoothedSquare(MarginLoss):
    """f(s) = (asinh(1) - asinh(s))^2 / 2 for s <= 1, else 0."""

    name = "square"

    def value(self, s):
        s = np.asarray(s, dtype=float)
        gap = _ASINH1 - np.arcsinh(np.minimum(s, 1.0))
        return 0.5 * gap * gap

    def slope(self, s):
        s = np.asarray(s, dtype=float)
        gap = _ASINH1 - np.arcsinh(s)
        return np.where(s <= 1.0, -gap / np.sqrt(1.0 + s * s), 0.0)


class HyperbolicLogistic(MarginLoss):
    """f(s) = ln(1 + exp(-asinh(s / (2 R)))) with a fixed scale R > 0.

    Smooth, strictly decreasing, and bounded on |s| <= 2R, which is what
    the gradient-descent convergence analysis needs.
    """

    name = "logistic"

    def __init__(self, r_alpha):
        if not r_alpha > 0.0:
            raise ValueError("logistic loss needs r_alpha > 0")
        self.r_alpha = float(r_alpha)

    def value(self, s):
        u = np.arcsinh(np.asarray(s, dtype=float) / (2.0 * self.r_alpha))
        return np.logaddexp(0.0, -u)

    def slope(self, s):
        s = np.asarray(s, dtype=float)
        u = np.arcsinh(s / (2.0 * self.r_alpha))
        return -_sigmoid(-u) / np.sqrt(4.0 * self.r_alpha**2 + s * s)


def eval_loss(kind: MarginLoss, x, y, w):
    """Loss of a single labeled point under classifier w."""
    return float(kind.value(y * minkowski(w, x)))


def grad_loss(kind: MarginLoss, x, y, w):
    """Ambient gradient f'(y (w*x)) * y * hat(x); zero wherever f is flat."""
    s = y * minkowski(w, x)
    return float(kind.slope(s)) * y * hat(x)


def mean_loss(kind: MarginLoss, score_values):
    """Average f over an array of precomputed scores y * (w*x)."""
    return float(np.mean(kind.value(np.asarray(score_values, dtype=float))))


def mean_grad(kind: MarginLoss, points, labels, w):
    """Average gradient over rows of points; labels in {-1, +1}."""
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels, dtype=float)
    s = labels * (hat(points) @ np.asarray(w, dtype=float))
    coeff = kind.slope(s) * labels
    return (coeff[:, None] * hat(points)).mean(axis=0)


def estimate_r_alpha(points, alpha, r_w=10.0):
    """Scale bound R_alpha = cosh(alpha) * max ||x||_2 * R_w.

    The cosh(alpha) factor inflates the raw sample-norm bound so that
    budget-alpha perturbations stay inside it; R_w caps the classifier norm.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    rx = float(np.max(np.linalg.norm(points, axis=1)))
    return float(np.cosh(alpha)) * rx * float(r_w)


def logistic_ball_normalized(x, y, w):
    """Diagnostic variant dividing by sqrt(-w*w) instead of a fixed 2R.

    Scale-invariant in w; not used by any trainer, exposed for inspection
    only.
    """
    from .geometry import time_norm

    u = np.arcsinh(y * minkowski(w, x) / time_norm(w))
    return float(np.logaddexp(0.0, -u))


_BY_NAME = {"hinge": HyperbolicHinge, "square": SmoothedSquare, "logistic": HyperbolicLogistic}


def make_loss(name, r_alpha=None):
    """Construct a loss by name; logistic requires r_alpha."""
    if name not in _BY_NAME:
        raise ValueError(f"unknown loss {name!r}; one of {sorted(_BY_NAME)}")
    if name == "logistic":
        if r_alpha is None:
            raise ValueError("logistic loss requires r_alpha")
        return HyperbolicLogistic(r_alpha)
    return _BY_NAME[name]()
