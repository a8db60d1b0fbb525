"""Perceptron variants: hyperbolic, adversarial, and Euclidean baselines.

All runs share one scan discipline: each epoch scans the samples in order,
updates on the first violating sample and restarts; a violation-free scan
means convergence.

The mistake test is the Minkowski decision y (w*x) <= 0.  The update adds
the spatially reflected sample, w <- w + y hat(x), which makes the update
direction agree with the test functional in the ambient Euclidean sense
(w*x = <hat(x), w>).  Adding the raw sample instead provably cycles on
separable sets: a correction of x shifts every opposite-label score by
x*x' = cosh(d(x, x')) >= 1, which always exceeds the unit self-gain.

The adversarial variant enforces a robust margin level beta: a sample
violates whenever its budget-beta worst-case perturbation is misclassified,
which happens exactly when its signed margin is at most beta.  Convergence
therefore certifies margin > beta on the training set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import hat, minkowski
from .loss import _sigmoid
from .margin import LabeledSet


@dataclass
class PerceptronResult:
    final_w: np.ndarray
    mistakes: int                 # updates on misclassified samples, y (w*x) <= 0
    epochs: int
    converged: bool
    mistake_log: list[tuple[int, int]] = field(default_factory=list)
    refinements: int = 0          # updates on correct but margin-deficient samples
    refinement_log: list[tuple[int, int]] = field(default_factory=list)
    w_history: list[np.ndarray] = field(default_factory=list)
    space_like_steps: int = 0     # iterates that left the classifier cone


def _default_w0(dim):
    w = np.zeros(dim + 1)
    w[1] = 1.0
    return w


def run_hyperbolic_perceptron(S: LabeledSet, w0=None, max_epochs=1000) -> PerceptronResult:
    """Mistake-driven training: on y (w*x) <= 0, v = w + y hat(x), then
    w = v / min(1, sqrt(-v*v)) whenever v is still a valid classifier."""
    return _run_lorentz(S, w0, max_epochs, beta=0.0)


def run_adversarial_perceptron(S: LabeledSet, alpha, w0=None, max_epochs=1000,
                               margin_target=None) -> PerceptronResult:
    """Perceptron over budget-constrained worst-case perturbations.

    A sample triggers an update when its worst perturbation within the
    enforced budget is misclassified, i.e. when its margin is at most
    beta = min(alpha, margin_target).  With alpha = 0 this reduces exactly
    to the plain run.  margin_target caps the enforced level; without a cap
    the run can only converge if the set is separable with margin > alpha.
    """
    if alpha < 0.0:
        raise ValueError("budget must be nonnegative")
    beta = alpha if margin_target is None else min(alpha, float(margin_target))
    return _run_lorentz(S, w0, max_epochs, beta=beta)


def _run_lorentz(S, w0, max_epochs, beta):
    w = _default_w0(S.dim) if w0 is None else np.array(w0, dtype=float)
    if minkowski(w, w) >= 0.0:
        raise ValueError("initialization must satisfy w*w < 0")
    Xh = hat(S.points)
    sinh_beta = np.sinh(beta)
    result = PerceptronResult(final_w=w, mistakes=0, epochs=0, converged=False,
                              w_history=[w.copy()])
    for epoch in range(max_epochs):
        result.epochs = epoch + 1
        q = -minkowski(w, w)
        ys = S.labels * (Xh @ w)
        if q > 0.0:
            # margin(x) <= beta  <=>  y (w*x) <= sinh(beta) sqrt(-w*w)
            bad = np.flatnonzero(ys <= sinh_beta * np.sqrt(q))
        else:
            # space-like transient: no margins exist, chase raw mistakes
            bad = np.flatnonzero(ys <= 0.0)
        if bad.size == 0:
            if q > 0.0:
                result.converged = True
            break
        idx = int(bad[0])
        y = int(S.labels[idx])
        v = w + y * Xh[idx]
        qv = -minkowski(v, v)
        if qv > 0.0:
            w = v / min(1.0, np.sqrt(qv))
        else:
            w = v
            result.space_like_steps += 1
        if ys[idx] <= 0.0:
            result.mistakes += 1
            result.mistake_log.append((epoch, idx))
        else:
            result.refinements += 1
            result.refinement_log.append((epoch, idx))
        result.w_history.append(w.copy())
    result.final_w = w
    return result


def run_euclidean_perceptron(points, labels, w0=None, max_epochs=1000) -> PerceptronResult:
    """Classic homogeneous perceptron: w += y x on mistakes, no normalization."""
    X = np.asarray(points, dtype=float)
    y = np.asarray(labels, dtype=float)
    w = np.zeros(X.shape[1]) if w0 is None else np.array(w0, dtype=float)
    result = PerceptronResult(final_w=w, mistakes=0, epochs=0, converged=False,
                              w_history=[w.copy()])
    for epoch in range(max_epochs):
        result.epochs = epoch + 1
        svals = y * (X @ w)
        bad = np.flatnonzero(svals <= 0.0)
        if bad.size == 0:
            result.converged = True
            break
        idx = int(bad[0])
        w = w + y[idx] * X[idx]
        result.mistakes += 1
        result.mistake_log.append((epoch, idx))
        result.w_history.append(w.copy())
    result.final_w = w
    return result


def run_euclidean_logistic(points, labels, iters=3000):
    """Logistic regression baseline (full-batch GD with intercept).

    Returns (weights, training_error); deterministic.
    """
    X = np.asarray(points, dtype=float)
    y = np.asarray(labels, dtype=float)
    Xb = np.hstack([X, np.ones((X.shape[0], 1))])
    n = Xb.shape[0]
    lip = 0.25 * float(np.linalg.eigvalsh(Xb.T @ Xb / n)[-1])
    lr = 1.0 / max(lip, 1e-12)
    w = np.zeros(Xb.shape[1])
    for _ in range(iters):
        m = y * (Xb @ w)
        grad = -(_sigmoid(-m) * y) @ Xb / n
        w = w - lr * grad
    err = float(np.mean(np.sign(Xb @ w) != np.sign(y)))
    return w, err
