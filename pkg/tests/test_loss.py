import math

import numpy as np
import pytest

from hypermargin.geometry import lift, minkowski
from hypermargin.loss import (HyperbolicHinge, HyperbolicLogistic, SmoothedSquare,
                              estimate_r_alpha, eval_loss, grad_loss,
                              logistic_ball_normalized, make_loss)

ASINH1 = math.asinh(1.0)


def _random_instance(rng, d=None):
    d = d or int(rng.integers(2, 6))
    x = lift(rng.standard_normal(d))
    w0 = rng.uniform(-1, 1)
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    w = np.concatenate([[w0], math.sqrt(1 + w0 * w0) * u]) * rng.uniform(0.7, 1.5)
    y = int(rng.choice([-1, 1]))
    return x, y, w


def test_value_examples():
    hinge = HyperbolicHinge()
    assert float(hinge.value(1.0)) == 0.0
    assert float(hinge.value(0.0)) == pytest.approx(ASINH1, abs=1e-12)
    logistic = HyperbolicLogistic(2.0)
    assert float(logistic.value(0.0)) == pytest.approx(math.log(2.0), abs=1e-12)
    square = SmoothedSquare()
    assert float(square.value(1.0)) == 0.0
    assert float(square.value(2.0)) == 0.0
    assert float(square.value(0.0)) == pytest.approx(0.5 * ASINH1**2, abs=1e-12)


def test_logistic_slope_at_zero():
    for r in (0.5, 1.0, 4.0):
        logistic = HyperbolicLogistic(r)
        assert float(logistic.slope(0.0)) == pytest.approx(-1.0 / (4.0 * r), abs=1e-12)
        x = np.array([1.0, 0.0, 0.0])
        w = np.array([0.0, 1.0, 0.0])  # w*x = 0
        g = grad_loss(logistic, x, 1, w)
        assert np.allclose(g, -1.0 / (4.0 * r) * np.array([1.0, 0.0, 0.0]))


def test_flat_side_gradients_vanish():
    hinge = HyperbolicHinge()
    square = SmoothedSquare()
    x = lift([2.0, 0.0])
    w = np.array([0.0, -5.0, 0.0])  # score y (w*x) = 10 >> 1
    for kind in (hinge, square):
        assert np.allclose(grad_loss(kind, x, 1, w), 0.0)


def test_non_increasing_and_negative_slope():
    rng = np.random.default_rng(5)
    s = np.sort(rng.uniform(-8, 8, size=400))
    for kind in (HyperbolicHinge(), SmoothedSquare(), HyperbolicLogistic(3.0)):
        vals = kind.value(s)
        assert np.all(np.diff(vals) <= 1e-12)
    logistic = HyperbolicLogistic(2.0)
    grid = np.linspace(-10 * 2.0, 10 * 2.0, 1001)
    assert np.all(logistic.slope(grid) < 0.0)


def test_logistic_bounded_band():
    r = 3.0
    logistic = HyperbolicLogistic(r)
    s = np.linspace(-2 * r, 2 * r, 501)
    vals = logistic.value(s)
    assert np.all(vals >= math.log(1 + 1 / math.e) - 1e-12)
    assert np.all(vals <= math.log(1 + math.e) + 1e-12)


def test_gradient_finite_differences():
    rng = np.random.default_rng(6)
    kinds = [HyperbolicHinge(), SmoothedSquare(), HyperbolicLogistic(2.5)]
    checked = 0
    while checked < 60:
        x, y, w = _random_instance(rng)
        kind = kinds[checked % 3]
        if abs(y * minkowski(w, x) - 1.0) < 1e-3:
            continue  # stay away from the hinge/square kink
        checked += 1
        g = grad_loss(kind, x, y, w)
        h = 1e-5
        fd = np.zeros_like(w)
        for j in range(len(w)):
            wp, wm = w.copy(), w.copy()
            wp[j] += h
            wm[j] -= h
            fd[j] = (eval_loss(kind, x, y, wp) - eval_loss(kind, x, y, wm)) / (2 * h)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(fd), 1e-8)


def test_r_alpha_estimate():
    pts = np.array([lift([3.0, 4.0]), lift([0.0, 0.0])])
    r0 = estimate_r_alpha(pts, 0.0, r_w=10.0)
    assert r0 == pytest.approx(10.0 * np.linalg.norm(lift([3.0, 4.0])), rel=1e-12)
    assert estimate_r_alpha(pts, 1.0, r_w=10.0) == pytest.approx(r0 * math.cosh(1.0), rel=1e-12)


def test_ball_normalized_diagnostic_scale_invariant():
    rng = np.random.default_rng(8)
    x, y, w = _random_instance(rng)
    a = logistic_ball_normalized(x, y, w)
    b = logistic_ball_normalized(x, y, 3.0 * w)
    assert a == pytest.approx(b, rel=1e-12)


def test_make_loss():
    assert isinstance(make_loss("hinge"), HyperbolicHinge)
    assert isinstance(make_loss("logistic", r_alpha=2.0), HyperbolicLogistic)
    with pytest.raises(ValueError):
        make_loss("logistic")
    with pytest.raises(ValueError):
        make_loss("l2")
