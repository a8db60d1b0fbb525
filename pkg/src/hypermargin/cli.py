"""Experiment runner.

Subcommands: gen, perceptron, cert, train, pathology, embed, compare-dim.
Parameters arrive as key=value tokens (or lines of a --config file);
unknown keys are rejected before anything is written.  Exit codes:
0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import cert as cert_mod
from .geometry import ball_to_lorentz, check_point, minkowski
from .loss import estimate_r_alpha, make_loss
from .margin import LabeledSet, dataset_margin
from .perceptron import (run_adversarial_perceptron, run_euclidean_logistic,
                         run_euclidean_perceptron, run_hyperbolic_perceptron)
from .synth import (TreeMetric, disk_pairwise_distances, euclidean_stress_embed,
                    build_erm_pathology, measure_distortion, sample_separable,
                    sarkar_embed_disk, shannon_lower_bound)
from .train import NumericalError, TrainConfig, run_adversarial_gd, run_plain_gd


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# key=value parsing
# ---------------------------------------------------------------------------


def _parse_kv(tokens):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ConfigError(f"expected key=value, got {tok!r}")
        key, val = tok.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"empty key in {tok!r}")
        if key in out:
            raise ConfigError(f"duplicate key {key!r}")
        out[key] = val.strip()
    return out


def _read_config_file(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.append(line.replace(" ", ""))
    return _parse_kv(tokens)


def _coerce(schema, params):
    cfg = {}
    for key, raw in params.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r}; allowed: {sorted(schema)}")
        kind, _default = schema[key]
        try:
            cfg[key] = kind(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}")
    for key, (_kind, default) in schema.items():
        if key not in cfg:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            cfg[key] = default
    return cfg


def _floats(raw):
    return [float(tok) for tok in str(raw).split(",") if tok != ""]


def _ints(raw):
    return [int(tok) for tok in str(raw).split(",") if tok != ""]


def _choice(*options):
    def conv(raw):
        if raw not in options:
            raise ValueError(f"must be one of {options}")
        return raw
    return conv


def _eta(raw):
    return "auto" if raw == "auto" else float(raw)


_SENTINEL = object()  # "optional with no default" marker


def _optional(kind):
    return lambda raw: kind(raw)


# ---------------------------------------------------------------------------
# dataset files: line 1 "d n", then "label x0 x1 ... xd" per sample
# ---------------------------------------------------------------------------


def save_dataset(path, S: LabeledSet):
    lines = [f"{S.dim} {len(S)}"]
    for y, x in zip(S.labels, S.points):
        lines.append(" ".join([str(int(y))] + [repr(float(c)) for c in x]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path) -> LabeledSet:
    try:
        lines = Path(path).read_text().strip().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read dataset: {exc}")
    if not lines:
        raise ConfigError("empty dataset file")
    head = lines[0].split()
    if len(head) != 2:
        raise ConfigError("dataset header must be 'd n'")
    d, n = int(head[0]), int(head[1])
    if len(lines) != n + 1:
        raise ConfigError(f"expected {n} sample lines, found {len(lines) - 1}")
    pts = np.empty((n, d + 1))
    labs = np.empty(n, dtype=int)
    for i, line in enumerate(lines[1:]):
        parts = line.split()
        if len(parts) != d + 2:
            raise ConfigError(f"sample line {i + 1} has {len(parts)} fields, wanted {d + 2}")
        labs[i] = int(parts[0])
        if labs[i] not in (-1, 1):
            raise ConfigError(f"label must be -1 or 1, got {labs[i]}")
        pts[i] = [float(p) for p in parts[1:]]
    try:
        check_point(pts, tol=1e-6)
    except ValueError as exc:
        raise ConfigError(f"dataset rejected: {exc}")
    return LabeledSet(points=pts, labels=labs, manifold_tol=1e-6)


def _fmt(x):
    return repr(float(x))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_gen(params, seed, out):
    schema = {
        "d": (int, 2), "n": (int, 100), "gamma": (float, 0.3),
        "x0_cap": (float, 3.0), "spread": (float, 1.0), "name": (str, "dataset.txt"),
        "band_factor": (float, 1.0), "sv_count": (int, 1), "sv_lateral": (float, 0.0),
    }
    cfg = _coerce(schema, params)
    try:
        S, w_bar = sample_separable(cfg["d"], cfg["n"], cfg["gamma"], x0_cap=cfg["x0_cap"],
                                    seed=seed, spread=cfg["spread"],
                                    band_factor=cfg["band_factor"],
                                    sv_count=cfg["sv_count"], sv_lateral=cfg["sv_lateral"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    out.mkdir(parents=True, exist_ok=True)
    path = out / cfg["name"]
    save_dataset(path, S)
    rep = dataset_margin(w_bar, S)
    print(f"gen d={cfg['d']} n={cfg['n']} gamma={cfg['gamma']} "
          f"planted_margin={rep.margin:.6f} file={path}")
    return 0


def _cmd_perceptron(params, seed, out):
    schema = {
        "variant": (_choice("hyperbolic", "adversarial", "euclidean"), "hyperbolic"),
        "data": (str, None), "alpha": (float, 0.5), "max_epochs": (int, 1000),
        "margin_target": (str, "auto"),
    }
    cfg = _coerce(schema, params)
    S = load_dataset(cfg["data"])
    if cfg["variant"] == "hyperbolic":
        res = run_hyperbolic_perceptron(S, max_epochs=cfg["max_epochs"])
    elif cfg["variant"] == "adversarial":
        target = _resolve_margin_target(cfg["margin_target"], cfg["alpha"], S,
                                        cfg["max_epochs"])
        res = run_adversarial_perceptron(S, cfg["alpha"], max_epochs=cfg["max_epochs"],
                                         margin_target=target)
    else:
        res = run_euclidean_perceptron(S.points[:, 1:], S.labels,
                                       max_epochs=cfg["max_epochs"])
    if cfg["variant"] == "euclidean":
        margin = float("nan")
    else:
        margin = dataset_margin(res.final_w, S).margin
    out.mkdir(parents=True, exist_ok=True)
    summary = (f"variant={cfg['variant']} mistakes={res.mistakes} "
               f"refinements={res.refinements} epochs={res.epochs} "
               f"converged={res.converged} final_margin={_fmt(margin)}")
    (out / "perceptron_result.txt").write_text(
        summary + "\nfinal_w " + " ".join(_fmt(c) for c in res.final_w) + "\n")
    log_lines = ["epoch,index"] + [f"{e},{i}" for e, i in res.mistake_log]
    (out / "mistakes.csv").write_text("\n".join(log_lines) + "\n")
    print(summary)
    return 0


def _resolve_margin_target(raw, alpha, S, max_epochs):
    """'auto' enforces the robust level supported by an estimated margin;
    'none' enforces the raw budget; a number is used as given."""
    if raw == "none":
        return None
    if raw == "auto":
        probe = run_hyperbolic_perceptron(S, max_epochs=max_epochs)
        gamma_hat = dataset_margin(probe.final_w, S).margin if probe.converged else 0.0
        if gamma_hat <= 0.0:
            return None
        return float(np.arcsinh(np.sinh(gamma_hat) / np.cosh(alpha)))
    try:
        return float(raw)
    except ValueError:
        raise ConfigError("margin_target must be 'auto', 'none', or a number")


def _cmd_cert(params, seed, out):
    schema = {
        "w": (_floats, None), "x": (_floats, None), "y": (int, 1),
        "alpha": (float, 0.5), "grid": (int, 65), "tol": (float, 1e-8),
    }
    cfg = _coerce(schema, params)
    w = np.array(cfg["w"])
    x = np.array(cfg["x"])
    if w.shape != x.shape:
        raise ConfigError("w and x must have equal length")
    if cfg["y"] not in (-1, 1):
        raise ConfigError("y must be -1 or 1")
    if minkowski(w, w) >= 0:
        raise ConfigError("w is not a valid classifier (w*w >= 0)")
    try:
        check_point(x, tol=1e-6)
    except ValueError as exc:
        raise ConfigError(str(exc))
    adv = cert_mod.find_adversarial(w, x, cfg["y"], cfg["alpha"], grid_size=cfg["grid"],
                                    bisection_tol=cfg["tol"], require_misclassify=False)
    if adv is None:
        print("cert: no candidate")
        return 0
    line = (f"objective={_fmt(adv.objective)} misclassifies={adv.misclassifies} "
            f"budget_used={_fmt(adv.budget_used)}")
    print("x_tilde " + " ".join(_fmt(c) for c in adv.point))
    print(line)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "cert_solution.txt").write_text(
            "x_tilde " + " ".join(_fmt(c) for c in adv.point) + "\n" + line + "\n")
    return 0


def _trace_lines(trace):
    lines = ["iter,clean_loss,robust_loss,margin,eta,adv_count"]
    for r in trace.rows:
        lines.append(f"{r.iteration},{_fmt(r.clean_loss)},{_fmt(r.robust_loss)},"
                     f"{_fmt(r.margin)},{_fmt(r.eta)},{r.adv_count}")
    return lines


def _cmd_train(params, seed, out):
    schema = {
        "variant": (_choice("adversarial-gd", "plain-gd"), "adversarial-gd"),
        "data": (str, None), "loss": (_choice("hinge", "square", "logistic"), "hinge"),
        "alphas": (_floats, [0.0, 0.25, 0.5, 0.75, 1.0]),
        "eta": (_eta, 0.01), "T": (int, 200), "m": (int, 0), "c": (float, 0.5),
        "beta": (float, 1.0), "r_w": (float, 10.0), "gamma": (float, 0.0),
    }
    cfg = _coerce(schema, params)
    S = load_dataset(cfg["data"])
    out.mkdir(parents=True, exist_ok=True)
    for alpha in cfg["alphas"]:
        if alpha < 0:
            raise ConfigError("alphas must be nonnegative")
        r_alpha = estimate_r_alpha(S.points, alpha, cfg["r_w"])
        kind = make_loss(cfg["loss"], r_alpha=r_alpha)
        tc = TrainConfig(loss=kind, alpha=alpha, eta=cfg["eta"], c=cfg["c"],
                         m=cfg["m"] or None, iterations=cfg["T"], seed=seed,
                         beta=cfg["beta"], r_w=cfg["r_w"],
                         gamma=cfg["gamma"] or None)
        runner = run_adversarial_gd if cfg["variant"] == "adversarial-gd" else run_plain_gd
        trace = runner(S, tc)
        name = f"trace_alpha{alpha:g}.csv"
        (out / name).write_text("\n".join(_trace_lines(trace)) + "\n")
        last = trace.rows[-1]
        print(f"train variant={cfg['variant']} loss={cfg['loss']} alpha={alpha:g} "
              f"T={cfg['T']} final_margin={last.margin:.6f} "
              f"final_robust_loss={last.robust_loss:.6f} file={out / name}")
    return 0


def _cmd_pathology(params, seed, out):
    schema = {"d": (int, 8), "eps": (float, 0.05), "alpha": (float, 0.5),
              "rho": (float, 0.99)}
    cfg = _coerce(schema, params)
    try:
        wit = build_erm_pathology(cfg["d"], cfg["eps"], cfg["alpha"], rho=cfg["rho"],
                                  seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc))
    bound = shannon_lower_bound(cfg["d"], wit.theta)
    lines = [f"code_size={len(wit)}", f"theta={_fmt(wit.theta)}",
             f"shannon_lower_bound={_fmt(bound)}", f"delta={_fmt(wit.delta)}"]
    lines += [f"check_{k}={v}" for k, v in sorted(wit.checks.items())]
    out.mkdir(parents=True, exist_ok=True)
    (out / "witness_summary.txt").write_text("\n".join(lines) + "\n")
    print(f"pathology d={cfg['d']} eps={cfg['eps']} alpha={cfg['alpha']} "
          f"code_size={len(wit)} shannon_floor={int(np.floor(bound))} "
          f"checks_passed={all(wit.checks.values())}")
    return 0


def _load_tree(path) -> TreeMetric:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read tree file: {exc}")
    try:
        return TreeMetric.from_edge_list(text)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _cmd_embed(params, seed, out):
    schema = {
        "variant": (_choice("sarkar", "stress"), "sarkar"),
        "tree": (str, None), "tau": (float, 3.0), "dim": (int, 2),
        "iters": (int, 500),
    }
    cfg = _coerce(schema, params)
    tree = _load_tree(cfg["tree"])
    D = tree.distance_matrix()
    out.mkdir(parents=True, exist_ok=True)
    if cfg["variant"] == "sarkar":
        disk = sarkar_embed_disk(tree, tau=cfg["tau"])
        zs = np.array([disk[nd] for nd in tree.nodes])
        emb = disk_pairwise_distances(zs)
        lorentz = ball_to_lorentz(np.stack([zs.real, zs.imag], axis=-1))
        lines = [nd + " " + " ".join(_fmt(c) for c in lorentz[i])
                 for i, nd in enumerate(tree.nodes)]
        path = out / "sarkar_coords.txt"
    else:
        coords = euclidean_stress_embed(D, cfg["dim"], iters=cfg["iters"], seed=seed)
        emb = np.sqrt(np.sum((coords[:, None, :] - coords[None, :, :]) ** 2, axis=-1))
        lines = [nd + " " + " ".join(_fmt(c) for c in coords[i])
                 for i, nd in enumerate(tree.nodes)]
        path = out / f"stress_coords_d{cfg['dim']}.txt"
    rep = measure_distortion(D, emb)
    path.write_text("\n".join(lines) + "\n")
    print(f"embed variant={cfg['variant']} nodes={len(tree)} "
          f"distortion={rep.c_m:.6f} file={path}")
    return 0


def _leaf_labels(tree: TreeMetric):
    kids = tree.children.get(tree.root, [])
    if len(kids) != 2:
        raise ConfigError("compare-dim expects a root with exactly two subtrees")
    side = {}
    for sign, kid in zip((1, -1), kids):
        stack = [kid]
        while stack:
            nd = stack.pop()
            side[nd] = sign
            stack.extend(tree.children.get(nd, []))
    leaves = [nd for nd in tree.leaves() if nd in side]
    return leaves, np.array([side[nd] for nd in leaves])


def _cmd_compare_dim(params, seed, out):
    schema = {
        "tree": (str, None), "dims": (_ints, [2, 4, 8]), "tau": (float, 3.0),
        "iters": (int, 500), "max_epochs": (int, 20000), "logit_iters": (int, 3000),
    }
    cfg = _coerce(schema, params)
    tree = _load_tree(cfg["tree"])
    leaves, labels = _leaf_labels(tree)
    leaf_idx = [tree.nodes.index(nd) for nd in leaves]

    disk = sarkar_embed_disk(tree, tau=cfg["tau"])
    pts = np.array([[disk[nd].real, disk[nd].imag] for nd in leaves])
    S = LabeledSet(points=ball_to_lorentz(pts), labels=labels, manifold_tol=1e-6)
    res = run_hyperbolic_perceptron(S, max_epochs=cfg["max_epochs"])
    hyp_err = float(np.mean((minkowski(S.points, res.final_w) > 0) != (S.labels > 0)))

    rows = [("hyperbolic", 2, hyp_err)]
    D = tree.distance_matrix()
    for dim in cfg["dims"]:
        coords = euclidean_stress_embed(D, dim, iters=cfg["iters"], seed=seed)
        _, err = run_euclidean_logistic(coords[leaf_idx], labels, iters=cfg["logit_iters"])
        rows.append(("euclidean", dim, err))
    out.mkdir(parents=True, exist_ok=True)
    lines = ["space,dim,train_error"] + [f"{s},{d},{_fmt(e)}" for s, d, e in rows]
    (out / "compare_dim.csv").write_text("\n".join(lines) + "\n")
    for s, d, e in rows:
        print(f"compare-dim space={s} dim={d} train_error={e:.4f}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "perceptron": _cmd_perceptron,
    "cert": _cmd_cert,
    "train": _cmd_train,
    "pathology": _cmd_pathology,
    "embed": _cmd_embed,
    "compare-dim": _cmd_compare_dim,
}

_NEEDS_OUT = {"gen", "perceptron", "train", "pathology", "embed", "compare-dim"}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hypermargin", add_help=True,
                                     description=__doc__)
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("params", nargs="*", help="key=value parameters")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument("--config", type=Path, default=None)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        params = {}
        if args.config is not None:
            params.update(_read_config_file(args.config))
        params.update(_parse_kv(args.params))
        if args.command in _NEEDS_OUT and args.out is None:
            raise ConfigError(f"{args.command} requires --out")
        return _COMMANDS[args.command](params, args.seed, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
