"""Command-line driver for end-to-end experiments.

Subcommands: ``generate`` (synthetic datasets), ``fit`` (persist a model
summary), ``predict`` (per-point median/interval CSV), ``cv`` (leave-one-out
report), ``compare`` (RMSE/MAE table over a model list), ``benchmark``
(quantile-bound timing table, or the sparse-grid-vs-QMC sweep), and
``inspect`` (print the node table).

Configuration is a flat key-value text file with dotted section keys;
command-line flags override file values.  Exit codes: 0 success, 2 config
error, 3 numerical failure, 4 I/O error.  Partially written outputs are
removed on failure.
"""

import argparse
import csv
import os
import sys
import time
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Tuple

import numpy as np

from . import baselines, btg, datasets, loocv
from . import quadrature as quad
from .errors import BtgpError, LengthMismatch
from .tmixture import PosteriorMixture, TMixtureComponent, quantile
from .transforms import SinhArcSinh, family

DEFAULT_MODELS = ("GP", "WGP-A", "WGP-SA", "WGP-BC", "CWGP-L-SA", "CWGP-A-BC",
                  "BTG-I", "BTG-A", "BTG-SA", "BTG-BC", "BTG-L-SA", "BTG-A-BC")


class ConfigError(Exception):
    """Bad configuration file, flag, or model name."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs beyond the data files."""

    model: str = "BTG-I"
    seed: int = 0
    quadrature: str = "qmc"
    nodes: int = 64
    level: int = 3
    eps: float = 0.1
    keep_mass: float = 0.9
    lengthscale_min: float = 0.05
    lengthscale_max: float = 5.0
    noise_min: float = 1e-6
    noise_max: float = 0.1
    levels: Tuple[float, ...] = (0.025, 0.5, 0.975)
    ftol: Optional[float] = None
    xtol: Optional[float] = None
    mle_starts: int = 8

    _KEYS = {
        "model": "model", "seed": "seed",
        "quadrature.kind": "quadrature", "quadrature.nodes": "nodes",
        "quadrature.level": "level",
        "sparsify.eps": "eps", "sparsify.keep_mass": "keep_mass",
        "kernel.lengthscale.min": "lengthscale_min",
        "kernel.lengthscale.max": "lengthscale_max",
        "kernel.noise.min": "noise_min", "kernel.noise.max": "noise_max",
        "quantile.levels": "levels", "quantile.ftol": "ftol",
        "quantile.xtol": "xtol", "mle.starts": "mle_starts",
    }

    def to_text(self):
        lines = []
        for key, attr in self._KEYS.items():
            value = getattr(self, attr)
            if attr == "levels":
                text = ",".join(repr(v) for v in value)
            elif value is None:
                text = "none"
            else:
                text = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in cls._KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[cls._KEYS[key]] = val
        kwargs = {}
        for f in fields(cls):
            if f.name not in values:
                continue
            raw = values[f.name]
            try:
                kwargs[f.name] = cls._parse_field(f.name, raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {f.name}: {raw!r}") from exc
        return cls(**kwargs)

    @staticmethod
    def _parse_field(name, raw):
        if name in ("model", "quadrature"):
            return raw
        if name in ("seed", "nodes", "level", "mle_starts"):
            return int(raw)
        if name == "levels":
            return tuple(float(v) for v in raw.split(","))
        if name in ("ftol", "xtol"):
            return None if raw.lower() == "none" else float(raw)
        return float(raw)


def load_config(path):
    try:
        with open(path) as fh:
            return ExperimentConfig.from_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def apply_overrides(cfg, args):
    updates = {}
    for attr, flag in (("model", "model"), ("seed", "seed"),
                       ("quadrature", "quadrature"), ("level", "level"),
                       ("nodes", "nodes"), ("eps", "eps")):
        value = getattr(args, flag, None)
        if value is not None:
            updates[attr] = value
    return replace(cfg, **updates) if updates else cfg


@dataclass(frozen=True)
class MetricsReport:
    """Regression metrics plus per-phase wall-clock timings."""

    model: str
    rmse: float
    mae: float
    timings: dict = field(default_factory=dict)


def metrics(predictions, truths, model="", timings=None):
    predictions = np.asarray(predictions, dtype=float).reshape(-1)
    truths = np.asarray(truths, dtype=float).reshape(-1)
    if len(predictions) != len(truths):
        raise LengthMismatch(
            f"{len(predictions)} predictions vs {len(truths)} truths")
    err = predictions - truths
    return MetricsReport(model=model,
                         rmse=float(np.sqrt(np.mean(err ** 2))),
                         mae=float(np.mean(np.abs(err))),
                         timings=timings or {})


def parse_model_name(name):
    """Split a model name into (kind, transform family name)."""
    name = name.strip()
    if name.upper() == "GP":
        return "mle", "I"
    for prefix, kind in (("WGP-", "mle"), ("CWGP-", "mle"), ("BTG-", "btg")):
        if name.upper().startswith(prefix):
            fam = name[len(prefix):]
            try:
                family(fam)
            except BtgpError as exc:
                raise ConfigError(f"unknown transform family in {name!r}") from exc
            return kind, fam.upper()
    raise ConfigError(f"unknown model name {name!r}")


def fit_config_from(cfg):
    return btg.FitConfig(
        quadrature=cfg.quadrature, nodes=cfg.nodes, level=cfg.level,
        seed=cfg.seed, sparsify_eps=cfg.eps, keep_mass=cfg.keep_mass,
        lengthscale_box=(cfg.lengthscale_min, cfg.lengthscale_max),
        noise_box=(cfg.noise_min, cfg.noise_max))


def mle_config_from(cfg):
    return baselines.MleConfig(
        starts=cfg.mle_starts, seed=cfg.seed,
        lengthscale_box=(cfg.lengthscale_min, cfg.lengthscale_max),
        noise_box=(cfg.noise_min, cfg.noise_max))


def fit_model(cfg, train):
    """Fit the configured model; returns (kind, fitted object)."""
    kind, fam = parse_model_name(cfg.model)
    if kind == "btg":
        return kind, btg.fit(train, fam, fit_config_from(cfg))
    return kind, baselines.mle_fit(train, fam, mle_config_from(cfg))


def predict_table(kind, model, x_test, cfg):
    """(n, 3) array of median, lo, hi in original units."""
    if kind == "btg":
        levels = sorted(cfg.levels)
        out = btg.predict_batch(model, x_test, levels=tuple(levels),
                                xtol=cfg.xtol, ftol=cfg.ftol)
        cols = {p: out[:, i] for i, p in enumerate(levels)}
        med = cols.get(0.5, out[:, len(levels) // 2])
        return np.column_stack([med, cols[levels[0]], cols[levels[-1]]])
    out = baselines.mle_predict_batch(model, x_test, clip=True)
    return out  # already median, lo, hi


# ---------------------------------------------------------------------------
# benchmark harnesses


def synthetic_mixture(n_components, seed, spread=2.0):
    """A reproducible positive-weight mixture of warped Student-t's."""
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(n_components))
    comps = []
    for i in range(n_components):
        transform = SinhArcSinh(a=float(rng.uniform(-0.3, 0.3)),
                                b=float(rng.uniform(0.7, 1.5)))
        comps.append(TMixtureComponent(
            dof=int(rng.integers(5, 40)),
            loc=float(rng.normal(0.0, spread)),
            scale=float(rng.uniform(0.3, 1.5)),
            transform=transform))
    return PosteriorMixture(components=tuple(comps), weights=w)


def benchmark_quantile_bounds(n_components=50, n_mixtures=20, seed=0,
                              repetitions=5, ftol=1e-3):
    """Time median and credible-interval solving under each bound method.

    Monotonic clock, warm-up run excluded, medians over repetitions.
    Returns rows of {method, total, median, ci, evals}.
    """
    mixtures = [synthetic_mixture(n_components, seed + i)
                for i in range(n_mixtures)]
    rows = []
    for method in (None, "convex-hull", "singular-weight"):
        med_times, ci_times, evals = [], [], 0
        for rep in range(repetitions + 1):
            t0 = time.perf_counter()
            for mix in mixtures:
                r = quantile(mix, 0.5, ftol=ftol, method=method,
                             return_info=True)
                if rep == 1:
                    evals += r.n_evals
            t1 = time.perf_counter()
            for mix in mixtures:
                for p in (0.025, 0.975):
                    r = quantile(mix, p, ftol=ftol, method=method,
                                 return_info=True)
                    if rep == 1:
                        evals += r.n_evals
            t2 = time.perf_counter()
            if rep == 0:
                continue  # warm-up
            med_times.append(t1 - t0)
            ci_times.append(t2 - t1)
        med = float(np.median(med_times))
        ci = float(np.median(ci_times))
        rows.append({"method": method or "none", "total": med + ci,
                     "median": med, "ci": ci, "cdf_evals": evals})
    return rows


def prefix_submodel(model, k):
    """Restrict a fitted model to its k largest-magnitude mixture weights."""
    kept = model.sparsified.kept_indices[:k]
    w = model.tilde_weights[kept]
    total = float(w.sum())
    if total <= 0:
        return None
    dropped = np.delete(model.tilde_weights, kept)
    spars = quad.SparsifiedRule(
        kept_indices=kept, c=total,
        eps=max(0.0, 1.0 - total) if model.sparsified.eps is not None else None,
        eps_minus=float(dropped[dropped < 0].sum()),
        eps_plus=float(dropped[dropped > 0].sum()))
    return replace(model, sparsified=spars,
                   kept_caches=model.kept_caches[:k], weights=w / total)


def quad_compare_harness(seed=0, train_size=30, test_size=100,
                         family_name="L-SA", sparse_level=2, qmc_nodes=64,
                         repetitions=3, levels=(0.025, 0.5, 0.975),
                         ftol=1e-5):
    """Sweep kept-node counts for sparse-grid and QMC rules on a desk-scale
    camel instance; returns rows of (rule, n_kept, mass, mse, seconds).

    The quantile tolerance is pinned across the sweep so timing differences
    reflect node count rather than the per-submodel adaptive tolerance.
    """
    (x_tr, y_tr), (x_te, y_te) = datasets.sixhumpcamel(
        seed, train_size=train_size, test_size=test_size)
    train = btg.TrainingSet.create(x_tr, y_tr)
    rows = []
    for kind in ("sparse", "qmc"):
        config = btg.FitConfig(quadrature=kind, nodes=qmc_nodes,
                               level=sparse_level, seed=seed,
                               sparsify_eps=0.0, keep_mass=1.0)
        model = btg.fit(train, family_name, config)
        total_mass = float(np.abs(model.tilde_weights).sum())
        n_all = len(model.sparsified.kept_indices)
        ks = sorted({min(k, n_all) for k in (1, 2, 4, 8, 16, 32, 64, n_all)})
        subs = [(k, prefix_submodel(model, k)) for k in ks]
        subs = [(k, s) for k, s in subs if s is not None]
        med_idx = levels.index(0.5) if 0.5 in levels else len(levels) // 2
        best = {k: float("inf") for k, _ in subs}
        preds = {}
        for k, sub in subs:  # warm-up pass, also records predictions
            preds[k] = btg.predict_batch(sub, x_te, levels=levels, ftol=ftol)
        # interleave repetitions across node counts so a transient load
        # spike cannot poison every sample of one sweep point
        for _ in range(repetitions):
            for k, sub in subs:
                t0 = time.perf_counter()
                btg.predict_batch(sub, x_te, levels=levels, ftol=ftol)
                best[k] = min(best[k], time.perf_counter() - t0)
        for k, sub in subs:
            kept_mass = float(
                np.abs(model.tilde_weights[model.sparsified.kept_indices[:k]]).sum())
            mse = float(np.mean((preds[k][:, med_idx] - y_te) ** 2))
            rows.append({"rule": kind, "n_kept": k,
                         "mass": kept_mass / total_mass, "mse": mse,
                         "seconds": best[k]})
    return rows


# ---------------------------------------------------------------------------
# commands


def _write_csv(path, rows, header, outputs):
    outputs.append(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def cmd_generate(args, cfg, outputs):
    name = args.dataset
    kwargs = {}
    if args.train_size is not None:
        kwargs["train_size"] = args.train_size
    if args.test_size is not None:
        kwargs["test_size"] = args.test_size
    if name == "intsine" and args.noise_sd is not None:
        kwargs["noise_sd"] = args.noise_sd
    (x_tr, y_tr), (x_te, y_te) = datasets.generate(name, cfg.seed, **kwargs)
    os.makedirs(args.out, exist_ok=True)
    train_path = os.path.join(args.out, f"{name}-train.csv")
    test_path = os.path.join(args.out, f"{name}-test.csv")
    outputs.extend([train_path, test_path])
    datasets.write_xy_csv(train_path, x_tr, y_tr)
    datasets.write_xy_csv(test_path, x_te, y_te)
    print(f"wrote {train_path} ({len(y_tr)} rows) and {test_path} ({len(y_te)} rows)")
    return 0


def _load_train(args):
    if not args.data:
        raise ConfigError("--data is required for this command")
    x, y = datasets.read_xy_csv(args.data)
    return btg.TrainingSet.create(x, y)


def _maybe_export_rule(args, model, outputs):
    if getattr(args, "export_rule", None) and hasattr(model, "rule"):
        outputs.append(args.export_rule)
        quad.rule_to_csv(model.rule, args.export_rule)


def cmd_fit(args, cfg, outputs):
    train = _load_train(args)
    kind, model = fit_model(cfg, train)
    _maybe_export_rule(args, model, outputs)
    if kind == "btg":
        rows = [(r["node"], r["kept"], r["quadrature_weight"],
                 r["log_evidence"], r["mixture_weight"])
                for r in btg.model_summary_rows(model)]
        header = ["node", "kept", "quadrature_weight", "log_evidence",
                  "mixture_weight"]
        kept = model.sparsified.n_kept
        print(f"fit {cfg.model}: kept {kept}/{model.rule.n_nodes} nodes")
    else:
        rows = [("lengthscale", *model.params.lengthscales),
                ("noise_variance", model.params.noise_variance),
                ("signal_variance", model.tau_inv),
                ("beta", *model.beta),
                ("transform_params", *model.transform.params),
                ("nll", model.nll)]
        header = ["parameter", "values"]
        print(f"fit {cfg.model}: nll = {model.nll:.6f}")
    if args.out:
        _write_csv(args.out, rows, header, outputs)
    return 0


def cmd_predict(args, cfg, outputs):
    train = _load_train(args)
    if not args.test:
        raise ConfigError("--test is required for predict")
    x_te, _ = datasets.read_xy_csv(args.test)
    kind, model = fit_model(cfg, train)
    _maybe_export_rule(args, model, outputs)
    table = predict_table(kind, model, x_te, cfg)
    d = x_te.shape[1]
    header = [f"x{i + 1}" for i in range(d)] + ["median", "lo", "hi"]
    rows = [[f"{v:.17g}" for v in np.concatenate([x_te[i], table[i]])]
            for i in range(len(table))]
    _write_csv(args.out or "predictions.csv", rows, header, outputs)
    print(f"wrote {len(rows)} predictions to {args.out or 'predictions.csv'}")
    return 0


def cmd_cv(args, cfg, outputs):
    train = _load_train(args)
    kind, model = fit_model(cfg, train)
    if kind != "btg":
        raise ConfigError("cv requires a BTG model")
    report = loocv.loocv_score(model)
    header = ["index", "truth", "median", "lo", "hi", "log_density"]
    rows = [[i, f"{train.y[i]:.17g}", f"{report.medians[i]:.17g}",
             f"{report.intervals[i, 0]:.17g}", f"{report.intervals[i, 1]:.17g}",
             f"{report.log_densities[i]:.17g}"]
            for i in range(train.n)]
    if args.out:
        _write_csv(args.out, rows, header, outputs)
    print(f"loocv {cfg.model}: rmse={report.rmse:.6f} mae={report.mae:.6f} "
          f"mean_log_density={report.mean_log_density:.4f} "
          f"fallbacks={report.fallbacks}")
    return 0


def cmd_compare(args, cfg, outputs):
    train = _load_train(args)
    if not args.test:
        raise ConfigError("--test is required for compare")
    x_te, y_te = datasets.read_xy_csv(args.test)
    names = [m.strip() for m in (args.models or ",".join(DEFAULT_MODELS)).split(",")
             if m.strip()]
    rows = []
    for name in names:
        run_cfg = replace(cfg, model=name)
        t0 = time.perf_counter()
        kind, model = fit_model(run_cfg, train)
        t1 = time.perf_counter()
        table = predict_table(kind, model, x_te, run_cfg)
        t2 = time.perf_counter()
        rep = metrics(table[:, 0], y_te, model=name,
                      timings={"fit": t1 - t0, "predict": t2 - t1})
        rows.append([name, f"{rep.rmse:.6f}", f"{rep.mae:.6f}",
                     f"{rep.timings['fit']:.3f}", f"{rep.timings['predict']:.3f}"])
        print(f"{name:>12}  rmse={rep.rmse:.4f}  mae={rep.mae:.4f}")
    if args.out:
        _write_csv(args.out, rows, ["model", "rmse", "mae", "fit_s", "predict_s"],
                   outputs)
    return 0


def cmd_benchmark(args, cfg, outputs):
    if args.bench == "quantile-bounds":
        rows = benchmark_quantile_bounds(seed=cfg.seed)
        header = ["method", "total_s", "median_s", "ci_s", "cdf_evals"]
        out_rows = [[r["method"], f"{r['total']:.4f}", f"{r['median']:.4f}",
                     f"{r['ci']:.4f}", r["cdf_evals"]] for r in rows]
        for r in rows:
            print(f"{r['method']:>15}  total={r['total']:.4f}s  "
                  f"median={r['median']:.4f}s  ci={r['ci']:.4f}s  "
                  f"evals={r['cdf_evals']}")
    elif args.bench == "quad-compare":
        rows = quad_compare_harness(seed=cfg.seed, sparse_level=cfg.level,
                                    qmc_nodes=cfg.nodes)
        header = ["rule", "n_kept", "mass", "mse", "seconds"]
        out_rows = [[r["rule"], r["n_kept"], f"{r['mass']:.6f}",
                     f"{r['mse']:.6f}", f"{r['seconds']:.5f}"] for r in rows]
        for r in rows:
            print(f"{r['rule']:>7} k={r['n_kept']:>4} mass={r['mass']:.3f} "
                  f"mse={r['mse']:.4f} t={r['seconds']:.4f}s")
    else:
        raise ConfigError(f"unknown benchmark kind {args.bench!r}")
    if args.out:
        _write_csv(args.out, out_rows, header, outputs)
    return 0


def cmd_inspect(args, cfg, outputs):
    train = _load_train(args)
    kind, model = fit_model(cfg, train)
    if kind != "btg":
        raise ConfigError("inspect requires a BTG model")
    rows = btg.model_summary_rows(model)
    print(f"{'node':>5} {'kept':>4} {'quad_w':>12} {'log_evidence':>14} {'weight':>12}")
    for r in rows:
        print(f"{r['node']:>5} {r['kept']:>4} {r['quadrature_weight']:>12.4e} "
              f"{r['log_evidence']:>14.4f} {r['mixture_weight']:>12.4e}")
    if args.out:
        _write_csv(args.out,
                   [[r["node"], r["kept"], r["quadrature_weight"],
                     r["log_evidence"], r["mixture_weight"]] for r in rows],
                   ["node", "kept", "quadrature_weight", "log_evidence",
                    "mixture_weight"], outputs)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="btgp",
        description="Transformed Gaussian process regression experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--data", help="training CSV (x1..xd, y)")
        p.add_argument("--out", help="output path")
        p.add_argument("--seed", type=int)
        p.add_argument("--model", help="GP | WGP-* | CWGP-* | BTG-*")
        p.add_argument("--quadrature", choices=["sparse", "qmc", "mc"])
        p.add_argument("--level", type=int, help="sparse-grid level")
        p.add_argument("--nodes", type=int, help="qmc/mc node count")
        p.add_argument("--eps", type=float, help="sparsification budget")
        p.add_argument("--export-rule", help="dump quadrature nodes to CSV")

    p = sub.add_parser("generate", help="write synthetic train/test CSVs")
    common(p)
    p.add_argument("--dataset", required=True, choices=["intsine", "camel"])
    p.add_argument("--train-size", type=int)
    p.add_argument("--test-size", type=int)
    p.add_argument("--noise-sd", type=float)

    for name, fn_help in (("fit", "fit a model and persist its summary"),
                          ("predict", "per-point median and interval CSV"),
                          ("cv", "leave-one-out report"),
                          ("compare", "RMSE/MAE table over a model list"),
                          ("benchmark", "timing tables"),
                          ("inspect", "print the node table")):
        p = sub.add_parser(name, help=fn_help)
        common(p)
        if name in ("predict", "compare"):
            p.add_argument("--test", help="test CSV (x1..xd, y)")
        if name == "compare":
            p.add_argument("--models", help="comma-separated model names")
        if name == "benchmark":
            p.add_argument("--bench", default="quantile-bounds",
                           choices=["quantile-bounds", "quad-compare"])
    return parser


_COMMANDS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "cv": cmd_cv,
    "compare": cmd_compare,
    "benchmark": cmd_benchmark,
    "inspect": cmd_inspect,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    outputs = []
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        cfg = apply_overrides(cfg, args)
        return _COMMANDS[args.command](args, cfg, outputs)
    except ConfigError as exc:
        _cleanup(outputs)
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BtgpError as exc:
        _cleanup(outputs)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        _cleanup(outputs)
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


def _cleanup(outputs):
    for path in outputs:
        try:
            if os.path.exists(path):
                os.remove(path)
        except OSError:
            pass


if __name__ == "__main__":
    sys.exit(main())
