import math

import numpy as np
import pytest

from hypermargin.geometry import (ball_distance, ball_to_halfplane, ball_to_lorentz,
                                  check_hypothesis, check_point, cosh_angle,
                                  halfplane_distance, halfplane_to_ball, hat, lift,
                                  lorentz_distance, lorentz_to_ball, minkowski,
                                  model_map, normalize_hypothesis)


def test_minkowski_examples():
    assert minkowski([1, 0, 0], [1, 0, 0]) == 1.0
    assert minkowski([0, 1, 0], [0, 1, 0]) == -1.0
    r2 = math.sqrt(2)
    assert minkowski([r2, 1, 0], [r2, 0, 1]) == pytest.approx(2.0, abs=1e-12)


def test_minkowski_dimension_mismatch():
    with pytest.raises(ValueError):
        minkowski([1, 0, 0], [1, 0])


def test_minkowski_symmetric_bilinear():
    rng = np.random.default_rng(0)
    for _ in range(200):
        d = int(rng.integers(2, 8))
        u, v, w = rng.standard_normal((3, d + 1))
        a, b = rng.standard_normal(2)
        assert minkowski(u, v) == pytest.approx(minkowski(v, u), rel=1e-12)
        lhs = minkowski(a * u + b * v, w)
        rhs = a * minkowski(u, w) + b * minkowski(v, w)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_lift_examples_and_property():
    assert np.allclose(lift([0.0, 0.0]), [1, 0, 0])
    assert np.allclose(lift([1.0, 0.0]), [math.sqrt(2), 1, 0])
    assert np.allclose(lift([3.0, 4.0]), [math.sqrt(26), 3, 4])
    rng = np.random.default_rng(1)
    for _ in range(300):
        v = rng.standard_normal(int(rng.integers(2, 10))) * 2
        x = lift(v)
        assert abs(minkowski(x, x) - 1.0) < 1e-12
        assert np.allclose(x[1:], v)


def test_lorentz_distance():
    x = lift([1.0, 0.0])
    # self-distance collapses to acosh of a product within one ulp of 1
    assert lorentz_distance(x, x) < 1e-7
    y = lift([0.0, 1.0])
    assert lorentz_distance(x, y) == pytest.approx(math.acosh(2.0), abs=1e-12)
    # prescribed-distance perturbation along the hyperboloid
    alpha = 0.7
    delta = math.sinh(alpha)
    xt = np.array([math.sqrt(1 + delta**2), delta, 0.0])
    apex = np.array([1.0, 0.0, 0.0])
    assert lorentz_distance(apex, xt) == pytest.approx(alpha, abs=1e-12)
    with pytest.raises(ValueError):
        lorentz_distance(np.array([1.0, 0, 0]), np.array([0.5, 0, 0]))


def test_normalize_hypothesis():
    full = normalize_hypothesis(np.array([0.0, 2.0, 0.0]))
    assert np.allclose(full, [0, 1, 0])
    w = np.array([math.sqrt(2), 2.0, 0.0])  # -w*w = 2 >= 1
    assert np.array_equal(normalize_hypothesis(w, mode="perceptron"), w)
    small = normalize_hypothesis(np.array([0.0, 0.5, 0.0]), mode="perceptron")
    assert np.allclose(small, [0, 1, 0])
    with pytest.raises(ValueError):
        normalize_hypothesis(np.array([1.0, 0.5, 0.0]))
    rng = np.random.default_rng(2)
    for _ in range(100):
        d = int(rng.integers(2, 6))
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        w0 = rng.uniform(-2, 2)
        w = np.concatenate([[w0], math.sqrt(1 + w0 * w0) * u]) * rng.uniform(0.1, 5)
        wn = normalize_hypothesis(w)
        assert abs(minkowski(wn, wn) + 1.0) < 1e-12


def test_cosh_angle():
    w = np.array([0.0, 1.0, 0.0])
    assert cosh_angle(w, w) == pytest.approx(1.0, abs=1e-12)
    wb = np.array([math.sinh(1.0), math.cosh(1.0), 0.0])
    assert cosh_angle(w, wb) == pytest.approx(math.cosh(1.0), abs=1e-12)
    assert math.cosh(math.pi) == pytest.approx(11.591953275521519, abs=1e-9)
    with pytest.raises(ValueError):
        cosh_angle(np.array([1.0, 0.0, 0.0]), w)


def test_hat_involution():
    rng = np.random.default_rng(3)
    v = rng.standard_normal(5)
    assert np.allclose(hat(hat(v)), v)
    u = rng.standard_normal(5)
    assert minkowski(u, v) == pytest.approx(float(hat(u) @ v), rel=1e-12)


def test_model_map_examples():
    assert np.allclose(lorentz_to_ball(np.array([1.0, 0, 0])), [0, 0])
    b = lorentz_to_ball(np.array([math.sqrt(2), 1.0, 0.0]))
    assert b[0] == pytest.approx(1.0 / (1.0 + math.sqrt(2)), abs=1e-12)
    assert b[1] == 0.0
    assert np.allclose(ball_to_halfplane(np.zeros(2)), [0, 1])
    with pytest.raises(ValueError):
        ball_to_halfplane(np.zeros(3))
    with pytest.raises(ValueError):
        model_map(np.zeros(2), "ball->nowhere")


def test_model_maps_roundtrip_and_isometry():
    rng = np.random.default_rng(4)
    for _ in range(300):
        d = int(rng.integers(2, 11))
        x = lift(rng.standard_normal(d))
        y = lift(rng.standard_normal(d))
        bx, by = lorentz_to_ball(x), lorentz_to_ball(y)
        assert abs(lorentz_distance(x, y) - ball_distance(bx, by)) < 1e-9
        assert np.max(np.abs(ball_to_lorentz(bx) - x)) < 1e-9
    for _ in range(300):
        x = lift(rng.standard_normal(2))
        y = lift(rng.standard_normal(2))
        bx, by = lorentz_to_ball(x), lorentz_to_ball(y)
        hx, hy = ball_to_halfplane(bx), ball_to_halfplane(by)
        assert hx[1] > 0 and hy[1] > 0
        assert abs(ball_distance(bx, by) - halfplane_distance(hx, hy)) < 1e-9
        assert np.max(np.abs(halfplane_to_ball(hx) - bx)) < 1e-9


def test_check_point_sheets():
    x = lift([0.5, 0.5])
    check_point(x)
    with pytest.raises(ValueError):
        check_point(-x)
    check_point(-x, allow_lower_sheet=True)
    with pytest.raises(ValueError):
        check_point(np.array([1.5, 0.0, 0.0]))
    with pytest.raises(ValueError):
        check_hypothesis(np.array([1.0, 0.0, 0.0]))
