import math

import numpy as np
import pytest

from hypermargin.cert import (b_alpha, feasible_z0_interval, find_adversarial,
                              find_adversarial_batch, robust_scores, solve_cert_at)
from hypermargin.geometry import lift, lorentz_distance, minkowski
from hypermargin.margin import decide, signed_margin
from hypermargin.synth import sample_separable


def _random_instance(rng, d=None):
    d = d or int(rng.integers(2, 4))
    x = lift(rng.standard_normal(d))
    w0 = rng.uniform(-1, 1)
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    w = np.concatenate([[w0], math.sqrt(1 + w0 * w0) * u]) * rng.uniform(0.5, 2.0)
    y = int(rng.choice([-1, 1]))
    return x, y, w


def test_feasible_interval_examples():
    x = lift([1.0, 0.0])  # x0 = sqrt(2)
    iv = feasible_z0_interval(x, 0.0)
    assert iv.lo == iv.hi == pytest.approx(math.sqrt(2), abs=1e-12)
    iv = feasible_z0_interval(x, 0.5)
    center = math.sqrt(2) * math.cosh(0.5)
    delta = math.sinh(0.5)
    assert iv.lo == pytest.approx(center - delta, abs=1e-12)
    assert iv.hi == pytest.approx(center + delta, abs=1e-12)
    apex = np.array([1.0, 0.0, 0.0])
    iv = feasible_z0_interval(apex, 0.7)
    assert iv.lo == iv.hi == pytest.approx(math.cosh(0.7), abs=1e-12)


def test_b_alpha_formula_and_interval_characterization():
    x = lift([1.0, 0.0])
    # fixed guess from the documented worked example
    b = float(b_alpha(x, 0.5, 1.59460))
    expected = (math.cosh(0.5) - math.sqrt(2) * 1.59460) / math.sqrt(1.59460**2 - 1.0)
    assert b == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(-0.907739, abs=1e-5)
    iv = feasible_z0_interval(x, 0.5)
    inside = np.linspace(iv.lo + 1e-9, iv.hi - 1e-9, 50)
    assert np.all(np.abs(b_alpha(x, 0.5, inside)) <= 1.0 + 1e-7)
    assert abs(float(b_alpha(x, 0.5, iv.hi + 0.05))) > 1.0


def test_solve_cert_at_identities():
    rng = np.random.default_rng(9)
    for _ in range(100):
        x, y, w = _random_instance(rng)
        alpha = rng.uniform(0.1, 1.0)
        iv = feasible_z0_interval(x, alpha)
        z0 = rng.uniform(iv.lo + 1e-6, iv.hi - 1e-6)
        adv = solve_cert_at(w, x, y, alpha, z0)
        assert adv is not None
        z = adv.point
        assert abs(minkowski(z, z) - 1.0) < 1e-9
        # interior guesses put the solution on the budget sphere exactly
        assert minkowski(x, z) == pytest.approx(math.cosh(alpha), abs=1e-9)
        assert adv.budget_used <= alpha + 1e-9


def test_solve_cert_outside_interval_is_none():
    x = lift([1.0, 0.0])
    w = np.array([0.0, 1.0, 0.0])
    iv = feasible_z0_interval(x, 0.5)
    assert solve_cert_at(w, x, 1, 0.5, iv.hi + 0.2) is None
    with pytest.raises(ValueError):
        solve_cert_at(w, x, 1, 0.5, 0.5)


def test_find_adversarial_examples():
    w = np.array([0.0, -1.0, 0.0])
    # zero budget cannot flip anything
    x = lift([0.5, 0.0])
    assert find_adversarial(w, x, 1, 0.0) is None
    adv = find_adversarial(w, x, 1, 0.0, require_misclassify=False)
    assert np.array_equal(adv.point, x) and adv.budget_used == 0.0
    # point at distance 0.2 from the boundary, budget 0.5: flips
    ep = math.sinh(0.2)
    near = np.array([math.sqrt(1 + ep * ep), -ep, 0.0])
    assert decide(w, near) == 1
    adv = find_adversarial(w, near, 1, 0.5)
    assert adv is not None and adv.misclassifies
    assert lorentz_distance(near, adv.point) <= 0.5 + 1e-9
    # point at distance 2.0, budget 0.5: no flip exists
    ef = math.sinh(2.0)
    far = np.array([math.sqrt(1 + ef * ef), -ef, 0.0])
    assert find_adversarial(w, far, 1, 0.5) is None
    best = find_adversarial(w, far, 1, 0.5, require_misclassify=False)
    assert best is not None and not best.misclassifies
    # worst margin within the ball is the original margin minus the budget
    assert signed_margin(w, best.point, 1) == pytest.approx(1.5, abs=1e-6)


def test_objective_monotone_in_alpha():
    rng = np.random.default_rng(10)
    for _ in range(30):
        x, y, w = _random_instance(rng)
        objs = []
        for alpha in (0.1, 0.3, 0.6, 1.0):
            adv = find_adversarial(w, x, y, alpha, require_misclassify=False)
            objs.append(adv.objective)
        assert all(objs[i + 1] >= objs[i] - 1e-9 for i in range(len(objs) - 1))


def test_batch_matches_scalar():
    rng = np.random.default_rng(11)
    d = 3
    X = np.array([lift(rng.standard_normal(d)) for _ in range(40)])
    Y = rng.choice([-1, 1], size=40)
    w0 = rng.uniform(-1, 1)
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    w = np.concatenate([[w0], math.sqrt(1 + w0 * w0) * u])
    alpha = 0.45
    batch = find_adversarial_batch(w, X, Y, alpha, require_misclassify=False)
    for i in range(40):
        adv = find_adversarial(w, X[i], int(Y[i]), alpha, require_misclassify=False)
        assert batch.objectives[i] == pytest.approx(adv.objective, abs=1e-7)
        assert bool(batch.misclassifies[i]) == adv.misclassifies


def test_adversarial_margin_lower_bound():
    # Perturbations of a margin-gamma set keep planted margin >= gamma - alpha.
    # The perpendicular-crossing perturbation attains it, so no uniform level
    # above sinh(gamma - alpha) is possible; see the worst-case check below.
    gamma, alpha = 0.3, 0.2
    floor = math.sinh(gamma - alpha)
    rng = np.random.default_rng(12)
    for seed in range(5):
        S, w_bar = sample_separable(3, 30, gamma, seed=seed)
        w0 = rng.uniform(-1, 1)
        u = rng.standard_normal(3)
        u /= np.linalg.norm(u)
        w = np.concatenate([[w0], math.sqrt(1 + w0 * w0) * u])
        batch = find_adversarial_batch(w, S.points, S.labels, alpha,
                                       require_misclassify=False)
        planted = S.labels * minkowski(batch.points, w_bar)
        assert np.all(planted >= floor - 1e-9)
    # tightness: attacking with the planted classifier itself drives a
    # margin-m point to planted margin exactly m - alpha
    S, w_bar = sample_separable(3, 30, gamma, seed=1)
    i = int(np.argmin(S.labels * minkowski(S.points, w_bar)))
    m = signed_margin(w_bar, S.points[i], S.labels[i])
    adv = find_adversarial(w_bar, S.points[i], int(S.labels[i]), alpha,
                           require_misclassify=False)
    assert signed_margin(w_bar, adv.point, S.labels[i]) == pytest.approx(m - alpha, abs=1e-6)


def test_robust_scores_zero_budget():
    S, _ = sample_separable(3, 25, 0.3, seed=2)
    w = np.array([0.2, 1.1, 0.0, 0.3])
    assert np.array_equal(robust_scores(w, S, 0.0),
                          S.labels * minkowski(S.points, w))
    worst = robust_scores(w, S, 0.4)
    clean = S.labels * minkowski(S.points, w)
    assert np.all(worst <= clean + 1e-12)
