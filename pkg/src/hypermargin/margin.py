"""Decision functions, boundary distances, and dataset margins."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ONSHEET_TOL, check_hypothesis, check_point, hat, minkowski, time_norm


@dataclass(frozen=True)
class LabeledSet:
    """Immutable labeled sample of hyperboloid points.

    points: (n, d+1) array, each row on the hyperboloid.
    labels: (n,) array with entries in {-1, +1}.
    allow_lower_sheet: accept x0 <= -1 rows (used by lower-bound witnesses).
    """

    points: np.ndarray
    labels: np.ndarray
    allow_lower_sheet: bool = False
    manifold_tol: float = field(default=ONSHEET_TOL, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        labs = np.array(self.labels)
        if pts.ndim != 2 or pts.shape[1] < 3:
            raise ValueError("points must be an (n, d+1) array with d >= 2")
        if labs.shape != (pts.shape[0],):
            raise ValueError("labels length must match the number of points")
        if not np.all(np.isin(labs, (-1, 1))):
            raise ValueError("labels must be -1 or +1")
        check_point(pts, tol=self.manifold_tol, allow_lower_sheet=self.allow_lower_sheet)
        pts.setflags(write=False)
        labs = labs.astype(int)
        labs.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labs)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1] - 1


@dataclass(frozen=True)
class MarginReport:
    margin: float
    argmin_index: int


def decide(w, x):
    """+1 if w*x > 0 else -1 (zero falls to -1). Vectorizes over rows of x."""
    s = minkowski(x, w)
    return np.where(s > 0.0, 1, -1) if np.ndim(s) else (1 if s > 0.0 else -1)


def scores(w, S: LabeledSet):
    """Per-sample label-signed products y * (w*x)."""
    return S.labels * (hat(S.points) @ np.asarray(w, dtype=float))


def boundary_distance(w, x):
    """Distance |asinh((w*x)/sqrt(-w*w))| from x to the decision boundary."""
    w = check_hypothesis(w)
    return np.abs(np.arcsinh(minkowski(x, w) / time_norm(w)))


def signed_margin(w, x, y):
    """asinh(y (w*x) / sqrt(-w*w)); positive iff (x, y) is classified with slack."""
    w = check_hypothesis(w)
    return np.arcsinh(y * minkowski(x, w) / time_norm(w))


def dataset_margin(w, S: LabeledSet) -> MarginReport:
    """Minimum signed margin over the set together with its argmin index."""
    if len(S) == 0:
        raise ValueError("dataset margin of an empty set")
    vals = np.arcsinh(scores(w, S) / float(time_norm(check_hypothesis(w))))
    i = int(np.argmin(vals))
    return MarginReport(margin=float(vals[i]), argmin_index=i)


def verify_separator(w_bar, S: LabeledSet, gamma, norm_tol=1e-9):
    """True iff y (w_bar*x) >= sinh(gamma) on every sample.

    Requires w_bar normalized to sqrt(-w*w) = 1 within norm_tol.
    """
    w_bar = check_hypothesis(w_bar)
    if abs(float(time_norm(w_bar)) - 1.0) > norm_tol:
        raise ValueError("verify_separator expects a unit-normalized classifier")
    if len(S) == 0:
        return True
    return bool(np.all(scores(w_bar, S) >= np.sinh(gamma)))
