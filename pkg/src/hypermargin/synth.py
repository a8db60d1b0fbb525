"""Synthetic data and constructive witnesses.

Covers margin-separable sampling on the hyperboloid, tree metrics with a
low-distortion embedding into the hyperbolic plane, a Euclidean stress
embedding baseline, distortion measurement, the lower-bound witness for
plain gradient descent, and the spherical-code pathology for ERM-style
updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ball_to_lorentz, lift, lorentz_distance, minkowski
from .margin import LabeledSet, decide


# ---------------------------------------------------------------------------
# Margin-separable sampling
# ---------------------------------------------------------------------------


def _minkowski_project_out(v, basis):
    """Remove the Minkowski components of v along the (orthogonal) basis."""
    out = np.array(v, dtype=float)
    for b, sq in basis:  # sq = b*b, either +1 or -1
        out = out - (minkowski(out, b) / sq) * b
    return out


def _frame(w_bar):
    """Complete the unit time-like w_bar to a Minkowski-orthogonal frame.

    Returns (p, N): p is the unique point-like direction of the orthogonal
    complement built from e0 (p*p = 1, p0 >= 1), N stacks d-1 space-like
    directions n_i with n_i * n_i = -1.
    """
    k = w_bar.shape[0]
    basis = [(w_bar, -1.0)]
    e0 = np.zeros(k)
    e0[0] = 1.0
    p = _minkowski_project_out(e0, basis)
    p = p / np.sqrt(minkowski(p, p))
    if p[0] < 0:
        p = -p
    basis.append((p, 1.0))
    rest = []
    for i in range(1, k):
        e = np.zeros(k)
        e[i] = 1.0
        cand = _minkowski_project_out(e, basis)
        q = minkowski(cand, cand)
        if q > -1e-12:
            continue
        cand = cand / np.sqrt(-q)
        basis.append((cand, -1.0))
        rest.append(cand)
        if len(rest) == k - 2:
            break
    return p, np.array(rest)


def sample_separable(d, n, gamma, x0_cap=3.0, seed=0, spread=1.0, max_tries_factor=500,
                     band_factor=1.0, sv_count=1, sv_lateral=0.0):
    """Sample a labeled set separated by a planted unit classifier.

    Rejection-samples lifted Gaussian points, keeping those with
    |w_bar * x| >= sinh(band_factor * gamma) and x0 <= x0_cap, labeled by
    the planted classifier.  Constructed support vectors (sv_count per
    class) sit within a factor 1.05 of the margin, so the dataset margin
    lands in [gamma, asinh(1.05 sinh(gamma))].

    The defaults match that contract exactly.  band_factor > 1 carves a
    wider empty band around the boundary and sv_lateral displaces the two
    support clusters sideways in opposite directions; together they raise
    the best achievable margin above gamma while the planted margin stays
    pinned, which the adversarial-training experiments need when the
    perturbation budget exceeds gamma.
    """
    if d < 2 or n < 2:
        raise ValueError("need d >= 2 and n >= 2")
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    if not x0_cap > np.cosh(gamma):
        raise ValueError("x0_cap must exceed cosh(gamma)")
    if band_factor < 1.0 or sv_count < 1:
        raise ValueError("band_factor must be >= 1 and sv_count >= 1")
    if n <= 2 * sv_count:
        raise ValueError("n must exceed the number of support vectors")
    rng = np.random.default_rng(seed)

    w0 = rng.uniform(-0.5, 0.5)
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    w_bar = np.concatenate([[w0], np.sqrt(1.0 + w0 * w0) * u])  # -w*w = 1 exactly
    if w_bar[1] < 0:
        # orient the plant so the canonical init (0, 1, 0, ...) starts on the
        # admissible side; mistake-driven updates can cycle from an
        # anti-aligned start
        w_bar = -w_bar

    target = np.sinh(gamma)
    band = np.sinh(band_factor * gamma)
    pts = []
    labs = []
    budget = max_tries_factor * n
    n_cloud = n - 2 * sv_count
    while len(pts) < n_cloud and budget > 0:
        budget -= 1
        x = lift(rng.standard_normal(d) * spread)
        if x[0] > x0_cap:
            continue
        s = float(minkowski(w_bar, x))
        if abs(s) < band:
            continue
        pts.append(x)
        labs.append(1 if s > 0 else -1)
    if len(pts) < n_cloud:
        raise RuntimeError("rejection budget exhausted; loosen gamma or x0_cap")

    p, N = _frame(w_bar)
    for y in (1, -1):
        for _ in range(sv_count):
            for _try in range(1000):
                slack = rng.uniform(1.0 + 1e-9, 1.05)
                c = -y * slack * target
                b = 0.2 * spread * rng.standard_normal(len(N)) if len(N) else np.zeros(0)
                if sv_lateral and len(N):
                    b[0] = y * sv_lateral * (1.0 + 0.1 * rng.standard_normal())
                a = np.sqrt(1.0 + c * c + float(b @ b))
                x = a * p + c * w_bar
                if len(N):
                    x = x + b @ N
                if 1.0 <= x[0] <= x0_cap:
                    break
            else:
                raise RuntimeError("could not place a support vector under x0_cap")
            pts.append(x)
            labs.append(y)

    order = rng.permutation(n)
    S = LabeledSet(points=np.array(pts)[order], labels=np.array(labs)[order],
                   manifold_tol=1e-6)
    return S, w_bar


def gd_lower_bound_witness(d):
    """Two antipodal apex points; the -e0 one lives on the lower sheet."""
    e = np.zeros(d + 1)
    e[0] = 1.0
    return LabeledSet(points=np.array([e, -e]), labels=np.array([1, -1]),
                      allow_lower_sheet=True)


# ---------------------------------------------------------------------------
# Tree metrics
# ---------------------------------------------------------------------------


class TreeMetric:
    """Rooted tree with positive edge weights and path-length distances."""

    def __init__(self, edges):
        """edges: iterable of (parent, child) or (parent, child, weight)."""
        self.parent = {}
        self.weight = {}
        self.children = {}
        nodes = []
        seen = set()
        for edge in edges:
            if len(edge) == 2:
                par, child = edge
                wt = 1.0
            else:
                par, child, wt = edge
                wt = float(wt)
            if wt <= 0:
                raise ValueError("edge weights must be positive")
            if child in self.parent:
                raise ValueError(f"node {child!r} has two parents")
            self.parent[child] = par
            self.weight[child] = wt
            self.children.setdefault(par, []).append(child)
            for nd in (par, child):
                if nd not in seen:
                    seen.add(nd)
                    nodes.append(nd)
        self.nodes = nodes
        roots = [nd for nd in nodes if nd not in self.parent]
        if len(nodes) == 1:
            self.root = nodes[0]
        elif len(roots) != 1:
            raise ValueError(f"tree must have exactly one root, found {len(roots)}")
        else:
            self.root = roots[0]
        self._check_acyclic()

    @classmethod
    def single_node(cls, name="root"):
        t = cls.__new__(cls)
        t.parent, t.weight, t.children = {}, {}, {}
        t.nodes = [name]
        t.root = name
        return t

    @classmethod
    def from_edge_list(cls, text):
        """Parse lines of 'parent child [weight]'; '#' starts a comment."""
        edges = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ValueError(f"bad tree line: {line!r}")
            edges.append(tuple(parts))
        if not edges:
            raise ValueError("empty tree file")
        return cls(edges)

    def _check_acyclic(self):
        for nd in self.nodes:
            seen = set()
            cur = nd
            while cur in self.parent:
                if cur in seen:
                    raise ValueError("parent links contain a cycle")
                seen.add(cur)
                cur = self.parent[cur]

    def __len__(self):
        return len(self.nodes)

    def leaves(self):
        return [nd for nd in self.nodes if not self.children.get(nd)]

    def depth_weight(self, nd):
        total = 0.0
        while nd in self.parent:
            total += self.weight[nd]
            nd = self.parent[nd]
        return total

    def _ancestors(self, nd):
        out = [nd]
        while nd in self.parent:
            nd = self.parent[nd]
            out.append(nd)
        return out

    def distance(self, a, b):
        if a == b:
            return 0.0
        anc_a = {nd: i for i, nd in enumerate(self._ancestors(a))}
        for nd in self._ancestors(b):
            if nd in anc_a:
                lca = nd
                break
        return (self.depth_weight(a) + self.depth_weight(b)
                - 2.0 * self.depth_weight(lca))

    def distance_matrix(self, order=None):
        order = order if order is not None else self.nodes
        n = len(order)
        D = np.zeros((n, n))
        depths = {nd: self.depth_weight(nd) for nd in self.nodes}
        anc = {nd: self._ancestors(nd) for nd in order}
        anc_rank = {nd: {a: i for i, a in enumerate(anc[nd])} for nd in order}
        for i in range(n):
            for j in range(i + 1, n):
                ra = anc_rank[order[i]]
                lca = next(a for a in anc[order[j]] if a in ra)
                dij = depths[order[i]] + depths[order[j]] - 2.0 * depths[lca]
                D[i, j] = D[j, i] = dij
        return D


# ---------------------------------------------------------------------------
# Tree -> hyperbolic plane embedding (disk construction)
# ---------------------------------------------------------------------------


def _disk_translate(a, z):
    # Moebius transform of the disk sending a to the origin
    return (z - a) / (1.0 - np.conj(a) * z)


def _disk_untranslate(a, z):
    return (z + a) / (1.0 + np.conj(a) * z)


def sarkar_embed_disk(tree: TreeMetric, tau=3.0):
    """Recursive disk construction: node -> complex Poincare-disk point.

    The root sits at the origin with its children spread over the full
    circle; every other node places its children on an arc of width pi
    facing away from its parent, at hyperbolic distance tau * edge weight.
    The away-facing arcs keep each root subtree inside its own sector.
    """
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    pos = {tree.root: 0j}

    def radius(length):
        return np.tanh(length / 2.0)

    stack = [(tree.root, None)]
    while stack:
        node, parent = stack.pop()
        kids = tree.children.get(node, [])
        if not kids:
            continue
        z = pos[node]
        k = len(kids)
        if parent is None:
            angles = [2.0 * np.pi * j / k for j in range(k)]
        else:
            phi = np.angle(_disk_translate(z, pos[parent]))
            away = phi + np.pi
            angles = [away + np.pi * ((j + 1.0) / (k + 1.0) - 0.5) for j in range(k)]
        for kid, theta in zip(kids, angles):
            r = radius(tau * tree.weight[kid])
            pos[kid] = _disk_untranslate(z, r * np.exp(1j * theta))
            stack.append((kid, node))
    return pos


def sarkar_embed(tree: TreeMetric, tau=3.0):
    """Tree -> Lorentz plane points (d = 2), via the disk construction."""
    disk = sarkar_embed_disk(tree, tau)
    out = {}
    for nd, z in disk.items():
        out[nd] = ball_to_lorentz(np.array([z.real, z.imag]))
    return out


def disk_pairwise_distances(points):
    """Hyperbolic distance matrix of complex disk points.

    Uses d = 2 atanh(|x - y| / |1 - conj(x) y|), which stays accurate close
    to the boundary where the Lorentz chart loses precision.
    """
    z = np.asarray(points, dtype=complex)
    num = np.abs(z[:, None] - z[None, :])
    den = np.abs(1.0 - np.conj(z)[:, None] * z[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / den, 0.0)
    np.fill_diagonal(ratio, 0.0)
    return 2.0 * np.arctanh(np.minimum(ratio, 1.0 - 1e-16))


# ---------------------------------------------------------------------------
# Euclidean stress embedding
# ---------------------------------------------------------------------------


def _classical_mds(D, dim):
    n = D.shape[0]
    J = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * J @ (D * D) @ J
    vals, vecs = np.linalg.eigh(B)
    vals = vals[::-1][:dim]
    vecs = vecs[:, ::-1][:, :dim]
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def stress(coords, D):
    """Sum of squared residuals (||ui - uj|| - dij)^2 over unordered pairs."""
    diff = coords[:, None, :] - coords[None, :, :]
    E = np.sqrt(np.sum(diff * diff, axis=-1))
    iu = np.triu_indices(D.shape[0], k=1)
    return float(np.sum((E[iu] - D[iu]) ** 2))


def euclidean_stress_embed(D, dim, iters=500, seed=0):
    """Gradient descent on squared stress from a classical-MDS start.

    D is the (n, n) target distance matrix; returns (n, dim) coordinates.
    Deterministic for a fixed seed (the seed only jitters the start to
    break symmetric saddles).
    """
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    rng = np.random.default_rng(seed)
    coords = np.zeros((n, dim))
    mds = _classical_mds(D, dim)
    coords[:, : mds.shape[1]] = mds
    coords = coords + 1e-4 * rng.standard_normal(coords.shape)

    lr = 0.05 / max(n, 1)
    current = stress(coords, D)
    for _ in range(iters):
        diff = coords[:, None, :] - coords[None, :, :]
        E = np.sqrt(np.sum(diff * diff, axis=-1))
        np.fill_diagonal(E, 1.0)
        coef = 2.0 * (E - D) / E
        np.fill_diagonal(coef, 0.0)
        grad = np.sum(coef[:, :, None] * diff, axis=1)
        for _ in range(40):
            cand = coords - lr * grad
            cand_stress = stress(cand, D)
            if cand_stress <= current:
                break
            lr *= 0.5
        else:
            break
        coords, current = cand, cand_stress
        lr *= 1.1
    return coords


def stress_embed_tree(tree: TreeMetric, dim, iters=500, seed=0):
    """Convenience wrapper returning a node -> coordinates mapping."""
    D = tree.distance_matrix()
    coords = euclidean_stress_embed(D, dim, iters=iters, seed=seed)
    return {nd: coords[i] for i, nd in enumerate(tree.nodes)}


# ---------------------------------------------------------------------------
# Distortion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistortionReport:
    c_m: float
    worst_pair: tuple[int, int]
    infinite: bool = False


def measure_distortion(true_d, embedded_d) -> DistortionReport:
    """Multiplicative distortion after the best uniform rescaling.

    Rescales the embedding so it is contractive (embedded <= true on all
    pairs), then reports the worst ratio true/embedded.  Equivalently
    max(ratio) / min(ratio); coincident embedded points at positive true
    distance flag an infinite report.
    """
    T = np.asarray(true_d, dtype=float)
    E = np.asarray(embedded_d, dtype=float)
    if T.shape != E.shape:
        raise ValueError("distance matrices must have matching shapes")
    iu = np.triu_indices(T.shape[0], k=1)
    t = T[iu]
    e = E[iu]
    mask = t > 0
    if not np.any(mask):
        return DistortionReport(c_m=1.0, worst_pair=(0, 0))
    if np.any(e[mask] <= 0):
        j = int(np.flatnonzero(mask & (e <= 0))[0])
        return DistortionReport(c_m=np.inf, worst_pair=(int(iu[0][j]), int(iu[1][j])),
                                infinite=True)
    ratio = t[mask] / e[mask]
    c_m = float(np.max(ratio) / np.min(ratio))
    j = int(np.flatnonzero(mask)[int(np.argmax(ratio))])
    return DistortionReport(c_m=max(c_m, 1.0), worst_pair=(int(iu[0][j]), int(iu[1][j])))


# ---------------------------------------------------------------------------
# Spherical codes and the ERM pathology
# ---------------------------------------------------------------------------


def shannon_lower_bound(d, theta):
    """sqrt(2 pi d) cos(theta) / sin(theta)^(d-1), valid for 0 < theta < pi/2."""
    if not 0.0 < theta < np.pi / 2:
        raise ValueError("theta must lie in (0, pi/2)")
    return float(np.sqrt(2.0 * np.pi * d) * np.cos(theta) / np.sin(theta) ** (d - 1))


def greedy_spherical_code(d, theta, seed=0, stall_limit=10_000):
    """Greedy random packing of unit vectors with pairwise angle >= theta."""
    rng = np.random.default_rng(seed)
    cos_t = np.cos(theta)
    code = []
    rejections = 0
    while rejections < stall_limit:
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        if code and np.max(np.array(code) @ v) > cos_t:
            rejections += 1
            continue
        code.append(v)
        rejections = 0
    return np.array(code)


@dataclass
class PathologyWitness:
    S: LabeledSet
    code: np.ndarray          # (T, d) unit vectors
    classifiers: np.ndarray   # (T, d+1), each w*w = -1
    adv_plus: np.ndarray      # (T, d+1) perturbations of the +1 sample
    adv_minus: np.ndarray     # (T, d+1) perturbations of the -1 sample
    eps: float
    alpha: float
    delta: float
    rho: float
    theta: float
    checks: dict = field(default_factory=dict)

    def __len__(self):
        return self.code.shape[0]


def build_erm_pathology(d, eps, alpha, rho=0.99, seed=0, stall_limit=10_000):
    """Admissible classifier sequence showing ERM-style updates can stall.

    Two antipodal apex samples, classifiers w_t = (sinh(eps),
    cosh(eps) v_t) over a greedy spherical code {v_t}, and per-round
    perturbations at exactly the budget.  Every defining identity is
    validated before returning; any failure raises.
    """
    if not 0.0 < eps < alpha:
        raise ValueError("need 0 < eps < alpha")
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    eps_p = np.sinh(eps)
    delta = np.sqrt(np.cosh(alpha) ** 2 - 1.0)  # = sinh(alpha)
    cos_theta = rho * eps_p * np.cosh(alpha) / (delta * np.sqrt(1.0 + eps_p**2))
    theta = float(np.arccos(cos_theta))

    code = greedy_spherical_code(d, theta, seed=seed, stall_limit=stall_limit)
    T = code.shape[0]
    if T < 2:
        raise RuntimeError("spherical-code packing stalled before 2 vectors")

    S = gd_lower_bound_witness(d)
    x1, x2 = S.points

    classifiers = np.hstack([np.full((T, 1), eps_p), np.sqrt(1.0 + eps_p**2) * code])
    adv_plus = np.hstack([np.full((T, 1), np.cosh(alpha)), delta * code])
    adv_minus = -adv_plus

    checks = {}
    # each w_t is a unit classifier and margins the clean pair at exactly eps
    checks["unit_classifiers"] = bool(np.allclose(
        [minkowski(w, w) for w in classifiers], -1.0, atol=1e-9))
    margins = np.arcsinh(np.array([minkowski(w, x1) for w in classifiers]))
    checks["margin_eps"] = bool(np.allclose(margins, eps, atol=1e-9))
    # perturbations live on the manifold at distance exactly alpha
    dist_plus = np.array([lorentz_distance(x1, z) for z in adv_plus])
    dist_minus = np.array([lorentz_distance(x2, z) for z in adv_minus])
    checks["budget_tight"] = bool(np.allclose(dist_plus, alpha, atol=1e-9)
                                  and np.allclose(dist_minus, alpha, atol=1e-9))
    # round t flips its own perturbations ...
    own = [minkowski(classifiers[t], adv_plus[t]) for t in range(T)]
    checks["current_round_flips"] = bool(all(v < 0 for v in own)) and bool(all(
        minkowski(classifiers[t], adv_minus[t]) > 0 for t in range(T)))
    # ... while separating every earlier round correctly
    sep = True
    for t in range(T):
        for i in range(t):
            if decide(classifiers[t], adv_plus[i]) != 1:
                sep = False
            if decide(classifiers[t], adv_minus[i]) != -1:
                sep = False
    checks["separates_history"] = sep
    if not all(checks.values()):
        failed = [k for k, v in checks.items() if not v]
        raise RuntimeError(f"pathology witness failed validation: {failed}")
    return PathologyWitness(S=S, code=code, classifiers=classifiers,
                            adv_plus=adv_plus, adv_minus=adv_minus, eps=eps,
                            alpha=alpha, delta=float(delta), rho=rho,
                            theta=theta, checks=checks)
