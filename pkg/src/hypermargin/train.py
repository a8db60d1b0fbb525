"""Gradient-descent training with and without adversarial examples.

The adversarial trainer samples a batch per iteration, generates
misclassifying worst-case perturbations for it, and takes a gradient
step on those perturbations (falling back to the clean batch when no
perturbation flips a decision).  After every step the classifier is
rescaled to w*w = -1 so the decision boundary stays nonempty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cert
from .geometry import minkowski
from .loss import MarginLoss, estimate_r_alpha, mean_grad, mean_loss
from .margin import LabeledSet, dataset_margin, scores
from .perceptron import run_hyperbolic_perceptron


class NumericalError(RuntimeError):
    """The iteration left the valid classifier cone (w*w >= 0)."""


@dataclass
class TrainConfig:
    loss: MarginLoss
    alpha: float = 0.0
    eta: float | str = "auto"
    c: float = 0.5
    m: int | None = None
    iterations: int = 200
    seed: int = 0
    beta: float = 1.0
    r_w: float = 10.0
    gamma: float | None = None  # separation margin used by auto step size
    grid_size: int = 65
    bisection_tol: float = 1e-8
    w0: np.ndarray | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.m is not None and self.m < 1:
            raise ValueError("batch size must be >= 1")
        if not 0.0 < self.c < 1.0:
            raise ValueError("c must lie in (0, 1)")
        if self.alpha < 0.0:
            raise ValueError("budget must be nonnegative")
        if isinstance(self.eta, str) and self.eta != "auto":
            raise ValueError("eta must be a number or 'auto'")


@dataclass
class TraceRow:
    iteration: int
    clean_loss: float
    robust_loss: float
    margin: float
    eta: float
    adv_count: int


@dataclass
class TrainTrace:
    rows: list[TraceRow]
    final_w: np.ndarray
    pool_size: int

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])


def default_step_size(gamma, alpha, beta, sigma_max, r_alpha, c):
    """c * 2 sinh(gamma)^2 / (beta sigma_max^2 cosh(alpha)^2 r_alpha^2)."""
    for v, label in ((gamma, "gamma"), (beta, "beta"), (sigma_max, "sigma_max"),
                     (r_alpha, "r_alpha")):
        if not v > 0.0:
            raise ValueError(f"{label} must be positive")
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie in (0, 1)")
    if alpha < 0.0:
        raise ValueError("budget must be nonnegative")
    return c * 2.0 * np.sinh(gamma) ** 2 / (beta * sigma_max**2 * np.cosh(alpha) ** 2 * r_alpha**2)


def estimate_sigma_max(points, tol=1e-8, max_iters=100_000):
    """Square root of the top eigenvalue of (1/n) sum x x^T, by power iteration."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    n, k = X.shape
    M = X.T @ X / n
    # deterministic start, slightly tilted so no eigenvector is missed
    v = 1.0 + 1e-3 * np.arange(k)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iters):
        mv = M @ v
        norm = np.linalg.norm(mv)
        if norm == 0.0:
            return 0.0
        v = mv / norm
        new_lam = float(v @ M @ v)
        if abs(new_lam - lam) <= tol * max(1.0, abs(new_lam)):
            lam = new_lam
            break
        lam = new_lam
    return float(np.sqrt(max(lam, 0.0)))


def _resolve_eta(S: LabeledSet, cfg: TrainConfig, r_alpha):
    if not isinstance(cfg.eta, str):
        return float(cfg.eta)
    gamma = cfg.gamma
    if gamma is None:
        probe = run_hyperbolic_perceptron(S, max_epochs=500)
        gamma = dataset_margin(probe.final_w, S).margin
        if gamma <= 0.0:
            gamma = 0.1
    sigma = estimate_sigma_max(S.points) * float(np.cosh(cfg.alpha))
    return float(default_step_size(gamma, cfg.alpha, cfg.beta, sigma, r_alpha, cfg.c))


def _init_w(S, cfg):
    if cfg.w0 is None:
        w = np.zeros(S.dim + 1)
        w[1] = 1.0
    else:
        w = np.array(cfg.w0, dtype=float)
    q = -minkowski(w, w)
    if q <= 0.0:
        raise ValueError("initialization must satisfy w*w < 0")
    return w / np.sqrt(q)


def _renormalize(w):
    q = -minkowski(w, w)
    if q <= 0.0:
        raise NumericalError("update produced w*w >= 0; reduce the step size")
    return w / np.sqrt(q)


def _metrics(kind, S, w, alpha, grid_size):
    clean = mean_loss(kind, scores(w, S))
    robust = mean_loss(kind, cert.robust_scores(w, S, alpha, grid_size=grid_size))
    marg = dataset_margin(w, S).margin
    return clean, robust, marg


def run_adversarial_gd(S: LabeledSet, cfg: TrainConfig) -> TrainTrace:
    """Adversarial training; rows record post-update metrics per iteration.

    Each iteration draws m samples (iid with replacement; the whole set, in
    order, when m >= n), keeps only perturbations that flip the current
    decision, and steps along their mean gradient; an empty perturbation
    set falls back to the clean batch gradient.
    """
    kind = cfg.loss
    r_alpha = getattr(kind, "r_alpha", None) or estimate_r_alpha(S.points, cfg.alpha, cfg.r_w)
    eta = _resolve_eta(S, cfg, r_alpha)
    rng = np.random.default_rng(cfg.seed)
    w = _init_w(S, cfg)
    n = len(S)
    m = min(cfg.m if cfg.m is not None else 32, n)
    rows = []
    pool_size = 0
    for t in range(cfg.iterations):
        if m >= n:
            idx = np.arange(n)
        else:
            idx = rng.integers(0, n, size=m)
        bx = S.points[idx]
        by = S.labels[idx]
        batch = cert.find_adversarial_batch(w, bx, by, cfg.alpha, grid_size=cfg.grid_size,
                                            bisection_tol=cfg.bisection_tol,
                                            require_misclassify=True)
        sel = batch.found
        adv_count = int(np.count_nonzero(sel))
        pool_size += adv_count
        if adv_count > 0:
            g = mean_grad(kind, batch.points[sel], by[sel], w)
        else:
            g = mean_grad(kind, bx, by, w)
        w = _renormalize(w - eta * g)
        clean, robust, marg = _metrics(kind, S, w, cfg.alpha, cfg.grid_size)
        rows.append(TraceRow(t, clean, robust, marg, eta, adv_count))
    return TrainTrace(rows=rows, final_w=w, pool_size=pool_size)


def run_plain_gd(S: LabeledSet, cfg: TrainConfig) -> TrainTrace:
    """Full-batch clean gradient descent with the same normalization."""
    kind = cfg.loss
    r_alpha = getattr(kind, "r_alpha", None) or estimate_r_alpha(S.points, cfg.alpha, cfg.r_w)
    eta = _resolve_eta(S, cfg, r_alpha)
    w = _init_w(S, cfg)
    rows = []
    for t in range(cfg.iterations):
        g = mean_grad(kind, S.points, S.labels, w)
        w = _renormalize(w - eta * g)
        clean, robust, marg = _metrics(kind, S, w, cfg.alpha, cfg.grid_size)
        rows.append(TraceRow(t, clean, robust, marg, eta, 0))
    return TrainTrace(rows=rows, final_w=w, pool_size=0)
