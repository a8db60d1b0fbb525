"""Closed-form adversarial examples on the hyperboloid.

For a classifier w, a labeled point (x, y) and a budget alpha, the worst
admissible perturbation solves

    max  -y * (w*z)   over  z on the hyperboloid with  d(x, z) <= alpha.

Slicing by the time coordinate z0 reduces the ball constraint to a linear
one on the sphere ||z_sp|| = sqrt(z0^2 - 1):  <xv, zv> <= b(z0)  with
xv = -x_sp/||x_sp|| and b = (cosh(alpha) - x0 z0) / (||x_sp|| sqrt(z0^2-1)).
Each slice then has an explicit maximizer, and a one-dimensional search
over z0 finds the global one.  The search is a uniform grid followed by
golden-section refinement; the objective need not be monotone in z0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import lorentz_distance, minkowski
from .margin import LabeledSet, decide, scores

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
_APEX_TOL = 1e-9  # ||x_sp|| below this treats x as the apex (1, 0, ..., 0)
_B_TOL = 1e-9  # slack when testing |b| <= 1
_PAR_TOL = 1e-12  # w considered parallel to x when the residual is below this


@dataclass(frozen=True)
class Z0Interval:
    """Feasible range of the time coordinate: center x0 cosh(a), half-width
    sqrt((x0^2-1)(cosh(a)^2-1)), floored at 1."""

    lo: float
    hi: float

    @property
    def degenerate(self):
        return self.hi - self.lo <= 0.0


@dataclass
class AdvExample:
    point: np.ndarray
    source_index: int | None
    budget_used: float
    misclassifies: bool
    objective: float


def feasible_z0_interval(x, alpha) -> Z0Interval:
    if alpha < 0.0:
        raise ValueError("budget must be nonnegative")
    x0 = float(np.asarray(x, dtype=float)[0])
    center = x0 * np.cosh(alpha)
    delta = np.sqrt(max(x0 * x0 - 1.0, 0.0) * max(np.cosh(alpha) ** 2 - 1.0, 0.0))
    return Z0Interval(lo=float(max(1.0, center - delta)), hi=float(center + delta))


def b_alpha(x, alpha, z0):
    """Constraint level b(z0); |b| <= 1 exactly on the feasible interval."""
    x = np.asarray(x, dtype=float)
    x0 = x[0]
    nx = float(np.linalg.norm(x[1:]))
    r = np.sqrt(np.maximum(np.asarray(z0, dtype=float) ** 2 - 1.0, 0.0))
    return (np.cosh(alpha) - x0 * np.asarray(z0)) / (nx * r)


def _sample_params(x, u):
    """Per-sample geometry: (x0, nx, xv, a1, zeta, perp, u0).

    xv is the unit vector along -x_sp, a1 = <u_sp, xv>, zeta the norm of the
    component of u_sp orthogonal to xv.  At the apex (nx ~ 0) the direction
    is unconstrained, encoded as a1 = 0, zeta = ||u_sp||.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    x0 = float(x[0])
    xsp = x[1:]
    usp = u[1:]
    nx = float(np.linalg.norm(xsp))
    if nx < _APEX_TOL:
        nu = float(np.linalg.norm(usp))
        direction = usp / nu if nu > 0.0 else None
        return x0, 0.0, None, 0.0, nu, direction, float(u[0])
    xv = -xsp / nx
    a1 = float(usp @ xv)
    p = usp - a1 * xv
    zeta = float(np.linalg.norm(p))
    perp = p / zeta if zeta > _PAR_TOL else None
    return x0, nx, xv, a1, zeta, perp, float(u[0])


def _slice_value(x0, nx, a1, zeta, u0, cosh_a, z0):
    """Maximum of the objective over one z0 slice; -inf if infeasible.

    Vectorized in z0.  Covers the generic rim solution, the apex source
    (free direction), the apex slice z0 = 1, and u_sp parallel to x_sp.
    """
    z0 = np.asarray(z0, dtype=float)
    r = np.sqrt(np.maximum(z0 * z0 - 1.0, 0.0))
    if nx < _APEX_TOL:
        feas = z0 <= cosh_a + _B_TOL
        val = -u0 * z0 + r * zeta
        return np.where(feas, val, -np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = (cosh_a - x0 * z0) / (nx * r)
    bc = np.clip(b, -1.0, 1.0)
    root = np.sqrt(np.maximum(1.0 - bc * bc, 0.0))
    if zeta > _PAR_TOL:
        spatial = bc * a1 + root * zeta
    elif a1 < 0.0:
        # u_sp anti-parallel to xv: the slice max sits inside the cone
        spatial = np.abs(a1) * np.ones_like(bc)
    else:
        spatial = bc * a1
    val = -u0 * z0 + r * spatial
    feas = np.where(r > 0.0, np.abs(b) <= 1.0 + _B_TOL, x0 <= cosh_a + _B_TOL)
    apex_slice = -u0 * np.ones_like(z0)  # z0 = 1 forces z = (1, 0, ..., 0)
    val = np.where(r > 0.0, val, apex_slice)
    return np.where(feas, val, -np.inf)


def _arbitrary_perp(xv):
    k = int(np.argmin(np.abs(xv)))
    q = np.zeros_like(xv)
    q[k] = 1.0
    q = q - (q @ xv) * xv
    return q / np.linalg.norm(q)


def _build_point(x, u, alpha, z0):
    """Materialize the slice maximizer at a given z0 (assumed feasible)."""
    x = np.asarray(x, dtype=float)
    x0, nx, xv, a1, zeta, perp, _u0 = _sample_params(x, u)
    cosh_a = float(np.cosh(alpha))
    r = np.sqrt(max(z0 * z0 - 1.0, 0.0))
    d = x.shape[0] - 1
    if nx < _APEX_TOL:
        direction = perp if perp is not None else _unit(d, 0)
        zsp = r * direction
    elif r == 0.0:
        zsp = np.zeros(d)
    else:
        b = float(np.clip((cosh_a - x0 * z0) / (nx * r), -1.0, 1.0))
        root = np.sqrt(max(1.0 - b * b, 0.0))
        if zeta > _PAR_TOL:
            zsp = r * (b * xv + root * perp)
        elif a1 < 0.0:
            zsp = r * (-xv)
        else:
            zsp = r * (b * xv + root * _arbitrary_perp(xv))
    return np.concatenate([[z0], zsp])


def _unit(d, k):
    e = np.zeros(d)
    e[k] = 1.0
    return e


def solve_cert_at(w, x, y, alpha, z0, source_index=None):
    """Slice maximizer at a fixed guess of z0, or None when infeasible."""
    if z0 < 1.0:
        raise ValueError("z0 must be at least 1")
    x = np.asarray(x, dtype=float)
    u = y * np.asarray(w, dtype=float)
    x0, nx, _xv, a1, zeta, _perp, u0 = _sample_params(x, u)
    val = float(_slice_value(x0, nx, a1, zeta, u0, float(np.cosh(alpha)), z0))
    if not np.isfinite(val):
        return None
    point = _build_point(x, u, alpha, z0)
    return _finish(w, x, y, point, source_index)


def _finish(w, x, y, point, source_index):
    obj = float(-y * minkowski(w, point))
    mis = decide(w, point) != decide(w, x)
    budget = float(lorentz_distance(x, point, tol=1e-6))
    return AdvExample(point=point, source_index=source_index, budget_used=budget,
                      misclassifies=bool(mis), objective=obj)


def find_adversarial(w, x, y, alpha, grid_size=65, bisection_tol=1e-8,
                     require_misclassify=True, source_index=None):
    """Search z0 over its feasible interval for the loss-maximizing point.

    Returns the best perturbation found, or None if misclassification is
    required but the best candidate does not flip the decision.  With
    alpha = 0 the only candidate is x itself.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if alpha == 0.0:
        adv = _finish(w, x, y, x.copy(), source_index)
        adv.budget_used = 0.0
        return None if (require_misclassify and not adv.misclassifies) else adv
    u = y * w
    x0, nx, _xv, a1, zeta, _perp, u0 = _sample_params(x, u)
    cosh_a = float(np.cosh(alpha))
    iv = feasible_z0_interval(x, alpha)

    def f(z):
        return _slice_value(x0, nx, a1, zeta, u0, cosh_a, z)

    if iv.degenerate:
        best = iv.lo
    else:
        zs = np.linspace(iv.lo, iv.hi, grid_size)
        vals = f(zs)
        k = int(np.argmax(vals))
        if not np.isfinite(vals[k]):
            return None
        a = zs[max(k - 1, 0)]
        b = zs[min(k + 1, grid_size - 1)]
        best = _golden_max(f, a, b, bisection_tol)
        if float(f(np.array(best))) < float(vals[k]):
            best = float(zs[k])
    adv = solve_cert_at(w, x, y, alpha, float(best), source_index=source_index)
    if adv is None:
        return None
    if require_misclassify and not adv.misclassifies:
        return None
    return adv


def _golden_max(f, a, b, tol):
    while b - a > tol:
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        if float(f(np.array(c))) > float(f(np.array(d))):
            b = d
        else:
            a = c
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# Batched search, used by the trainers and the robust-loss traces.
# ---------------------------------------------------------------------------


@dataclass
class BatchAdv:
    points: np.ndarray       # (n, d+1)
    objectives: np.ndarray   # (n,) values of -y (w * point)
    misclassifies: np.ndarray
    found: np.ndarray        # feasible (and flipping, when required)


def find_adversarial_batch(w, points, labels, alpha, grid_size=65,
                           bisection_tol=1e-8, require_misclassify=True) -> BatchAdv:
    """Vectorized grid + golden-section search over all samples at once."""
    X = np.asarray(points, dtype=float)
    Y = np.asarray(labels, dtype=float)
    w = np.asarray(w, dtype=float)
    n = X.shape[0]
    if alpha == 0.0:
        obj = -(Y * minkowski(X, w))
        mis = np.zeros(n, dtype=bool)
        found = np.ones(n, dtype=bool) if not require_misclassify else mis.copy()
        return BatchAdv(points=X.copy(), objectives=obj, misclassifies=mis, found=found)

    cosh_a = float(np.cosh(alpha))
    x0 = X[:, 0]
    xsp = X[:, 1:]
    nx = np.linalg.norm(xsp, axis=1)
    apex = nx < _APEX_TOL
    safe_nx = np.where(apex, 1.0, nx)
    xv = -xsp / safe_nx[:, None]
    usp = Y[:, None] * w[None, 1:]
    u0 = Y * w[0]
    a1 = np.einsum("ij,ij->i", usp, xv)
    p = usp - a1[:, None] * xv
    zeta = np.linalg.norm(p, axis=1)
    a1 = np.where(apex, 0.0, a1)
    zeta = np.where(apex, np.linalg.norm(usp, axis=1), zeta)

    def fvec(z):  # z: (n,) -> slice values (n,)
        r = np.sqrt(np.maximum(z * z - 1.0, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            b = (cosh_a - x0 * z) / (safe_nx * r)
        bc = np.clip(b, -1.0, 1.0)
        root = np.sqrt(np.maximum(1.0 - bc * bc, 0.0))
        spatial = np.where(zeta > _PAR_TOL, bc * a1 + root * zeta,
                           np.where(a1 < 0.0, -a1, bc * a1))
        val = -u0 * z + r * spatial
        val = np.where(r > 0.0, val, -u0)
        feas = np.where(apex, z <= cosh_a + _B_TOL,
                        np.where(r > 0.0, np.abs(b) <= 1.0 + _B_TOL, x0 <= cosh_a + _B_TOL))
        return np.where(feas, val, -np.inf)

    center = x0 * cosh_a
    delta = np.sqrt(np.maximum(x0 * x0 - 1.0, 0.0) * max(cosh_a**2 - 1.0, 0.0))
    lo = np.maximum(1.0, center - delta)
    hi = center + delta

    grid = np.linspace(0.0, 1.0, grid_size)
    Z = lo[:, None] + (hi - lo)[:, None] * grid[None, :]
    V = np.stack([fvec(Z[:, j]) for j in range(grid_size)], axis=1)
    k = np.argmax(V, axis=1)
    rows = np.arange(n)
    grid_best_z = Z[rows, k]
    grid_best_v = V[rows, k]

    a = Z[rows, np.maximum(k - 1, 0)]
    b = Z[rows, np.minimum(k + 1, grid_size - 1)]
    span = float(np.max(b - a)) if n else 0.0
    iters = 0 if span <= bisection_tol else int(np.ceil(np.log(bisection_tol / span) / np.log(_GOLDEN)))
    for _ in range(max(iters, 0)):
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        move = fvec(c) > fvec(d)
        b = np.where(move, d, b)
        a = np.where(move, a, c)
    z_ref = 0.5 * (a + b)
    use_ref = fvec(z_ref) >= grid_best_v
    z_star = np.where(use_ref, z_ref, grid_best_z)

    # materialize the points (generic rim formula; corner samples scalar)
    r = np.sqrt(np.maximum(z_star * z_star - 1.0, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        braw = (cosh_a - x0 * z_star) / (safe_nx * r)
    bc = np.clip(np.where(np.isfinite(braw), braw, 0.0), -1.0, 1.0)
    root = np.sqrt(np.maximum(1.0 - bc * bc, 0.0))
    safe_zeta = np.where(zeta > _PAR_TOL, zeta, 1.0)
    perp = p / safe_zeta[:, None]
    zsp = r[:, None] * (bc[:, None] * xv + root[:, None] * perp)
    pts = np.concatenate([z_star[:, None], zsp], axis=1)

    corner = apex | (zeta <= _PAR_TOL) | (r <= 0.0)
    if np.any(corner):
        for i in np.flatnonzero(corner):
            pts[i] = _build_point(X[i], Y[i] * w, alpha, float(z_star[i]))

    objectives = -(Y * minkowski(pts, w))
    mis = np.sign(minkowski(pts, w)) != np.sign(minkowski(X, w))
    mis = (minkowski(pts, w) > 0) != (minkowski(X, w) > 0)
    feasible = np.isfinite(grid_best_v)
    found = feasible & mis if require_misclassify else feasible
    return BatchAdv(points=pts, objectives=objectives, misclassifies=mis, found=found)


def robust_scores(w, S: LabeledSet, alpha, grid_size=65):
    """Per-sample worst score min y (w*z) over the budget-alpha ball."""
    if alpha == 0.0:
        return scores(w, S)
    batch = find_adversarial_batch(w, S.points, S.labels, alpha,
                                   grid_size=grid_size, require_misclassify=False)
    return -batch.objectives
