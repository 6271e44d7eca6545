"""Command-line interface: fit, predict, sample, train, benchmark, uq.

Runs are reproducible: every stochastic operation receives a seed from the
flags or config file, numeric output files use fixed formatting, and each
CSV carries a comment line with the hash of the effective configuration.

Config files are flat ``key = value`` text (``#`` comments allowed), with
dotted keys such as ``kernel.family`` or ``cokriging.variance_denominator``;
command-line flags override file values.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import adaptive, benchmarks, cokriging, kriging, mfdnn, uq
from .dataset import DistributionSpec, MultiFidelityDataset, ingest_csv
from .kernels import FAMILIES


def _parse_value(text: str):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return [_parse_value(t) for t in inner.split(",")] if inner else []
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text.strip("\"'")


def parse_config_file(path) -> dict:
    """Flat key = value config; dotted keys namespace the modules."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            out[key.strip()] = _parse_value(val)
    return out


@dataclass
class RunConfig:
    """Effective (file + flags) configuration of one CLI run."""

    values: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)

    @property
    def hash(self) -> str:
        canon = json.dumps(self.values, sort_keys=True, default=str)
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _build_run_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    for key, val in sorted(vars(args).items()):
        if key in ("func", "config") or val is None:
            continue
        values[key] = val
    return RunConfig(values=values)


def _fmt(v) -> str:
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _write_csv(path, header, rows, cfg: RunConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config {cfg.hash}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _outdir(args) -> Path:
    out = getattr(args, "out", None) or os.environ.get("MFUQ_OUT", "mfuq_out")
    out = Path(out)
    if out.suffix == ".json":
        out.parent.mkdir(parents=True, exist_ok=True)
        return out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _model_path(out: Path) -> Path:
    return out if out.suffix == ".json" else out / "model.json"


def _load_two_fidelity(args) -> MultiFidelityDataset:
    x_cols = args.x_cols.split(",") if args.x_cols else None

    def load(path, fidelity, y_col):
        if x_cols is None or y_col is None:
            with open(path, encoding="utf-8") as fh:
                headers = fh.readline().strip().split(",")
            yc = y_col or headers[-1]
            xc = x_cols or [h for h in headers if h != yc]
        else:
            yc, xc = y_col, x_cols
        return ingest_csv(path, fidelity, {"x": xc, "y": yc})

    cheap = load(args.cheap, "cheap", args.cheap_y)
    expensive = load(args.expensive, "expensive", args.expensive_y)
    return MultiFidelityDataset.from_points(cheap, expensive)


def _prediction_grid(model, resolution: int) -> np.ndarray:
    if isinstance(model, cokriging.CoKrigingModel):
        lo, hi = model.lo, model.hi
    else:
        lo, hi = model.lo, model.hi
    axes = [np.linspace(lo[j], hi[j], resolution) for j in range(len(lo))]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _emit_grid(model, out: Path, cfg: RunConfig, resolution: int) -> Path:
    X = _prediction_grid(model, resolution)
    if isinstance(model, cokriging.CoKrigingModel):
        mean = cokriging.predict(model, X)
        s2 = cokriging.variance(model, X)
    else:
        mean = kriging.predict(model, X)
        s2 = kriging.variance(model, X)
    path = (out.parent if out.suffix == ".json" else out) / "grid.csv"
    header = [f"x{j}" for j in range(X.shape[1])] + ["mean", "s2"]
    rows = [list(x) + [m, s] for x, m, s in zip(X, mean, s2)]
    _write_csv(path, header, rows, cfg)
    return path


def _load_model(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    kind = doc.get("kind")
    if kind == "cokriging":
        return cokriging.CoKrigingModel.from_dict(doc)
    if kind == "kriging":
        return kriging.KrigingModel.from_dict(doc)
    if kind == "mfdnn":
        return mfdnn.MfdnnModel.from_dict(doc)
    raise ValueError(f"unrecognized model kind {kind!r} in {path}")


def _surrogate_fn(model):
    if isinstance(model, cokriging.CoKrigingModel):
        return lambda X: cokriging.predict(model, X)
    if isinstance(model, kriging.KrigingModel):
        return lambda X: kriging.predict(model, X)
    return lambda X: mfdnn.predict_hf(model, X)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_fit(args) -> int:
    cfg = _build_run_config(args)
    ds = _load_two_fidelity(args)
    model = cokriging.fit(
        ds, family=cfg.get("kernel.family", args.family), seed=args.seed,
        variance_denominator=cfg.get("cokriging.variance_denominator", "as_printed"),
    )
    out = _outdir(args)
    model.save(_model_path(out))
    grid = _emit_grid(model, out, cfg, args.grid)
    print(f"model: {_model_path(out)}")
    print(f"grid:  {grid}")
    print(f"rho={model.rho:.6g} sigma_c2={model.sigma_c2:.6g} sigma_d2={model.sigma_d2:.6g}")
    return 0


def cmd_predict(args) -> int:
    cfg = _build_run_config(args)
    model = _load_model(args.model)
    out = _outdir(args)
    if args.at:
        X = np.array([[float(v) for v in pt.split(",")] for pt in args.at.split(";")])
        if isinstance(model, mfdnn.MfdnnModel):
            mean = np.atleast_1d(mfdnn.predict_hf(model, X))
            rows = [list(x) + [m] for x, m in zip(X, mean)]
            _write_csv(out / "grid.csv", [f"x{j}" for j in range(X.shape[1])] + ["mean"], rows, cfg)
        else:
            fn_mean = _surrogate_fn(model)
            var_fn = cokriging.variance if isinstance(model, cokriging.CoKrigingModel) else kriging.variance
            rows = [list(x) + [m, s] for x, m, s in
                    zip(X, np.atleast_1d(fn_mean(X)), np.atleast_1d(var_fn(model, X)))]
            _write_csv(out / "grid.csv", [f"x{j}" for j in range(X.shape[1])] + ["mean", "s2"], rows, cfg)
    else:
        if isinstance(model, mfdnn.MfdnnModel):
            raise ValueError("grid prediction for mfdnn models requires --at points")
        _emit_grid(model, out, cfg, args.grid)
    print(f"wrote {out / 'grid.csv'}")
    return 0


def cmd_sample(args) -> int:
    cfg = _build_run_config(args)
    out = _outdir(args)
    if args.benchmark:
        case = benchmarks.get_case(args.benchmark)
        hf_locs = benchmarks.COKRIGING_HF_LIN1D if case.name == "lin1d" else None
        ds = benchmarks.make_training_set(case, seed=args.seed, hf_locations=hf_locs)
        oracle = lambda x: float(benchmarks.eval_hf(case, np.atleast_2d(x))[0])
        lo, hi = case.lower, case.upper
    elif args.cheap and args.expensive:
        ds = _load_two_fidelity(args)
        oracle = None
        lo = ds.x_cheap.min(axis=0)
        hi = ds.x_cheap.max(axis=0)
    else:
        raise ValueError("sample requires --benchmark or both --cheap and --expensive")
    dist = DistributionSpec(kind="uniform", lower=lo, upper=hi)
    spec = adaptive.CriterionSpec(id=args.criterion, distribution=dist,
                                  grid_resolution=args.grid)
    family = cfg.get("kernel.family", args.family)
    if spec.id in ("C5a", "C5b"):
        models = {fam: cokriging.fit(ds, family=fam, seed=args.seed)
                  for fam in adaptive.C5_FAMILIES}
    else:
        models = cokriging.fit(ds, family=family, seed=args.seed)
    if args.suggest_only or oracle is None:
        if oracle is None and not args.suggest_only:
            print("CSV-backed data has no oracle; emitting ranked suggestions instead",
                  file=sys.stderr)
        ranked = adaptive.suggest(spec, models, k=args.iterations, seed=args.seed)
        rows = [[i] + list(x) + [v] for i, (x, v) in enumerate(ranked)]
        header = ["rank"] + [f"x{j}" for j in range(ds.dim)] + ["criterion"]
        _write_csv(out / "trace.csv", header, rows, cfg)
        print(f"wrote {out / 'trace.csv'} (suggestions)")
        return 0
    results, _ = adaptive.run_infill(spec, models, oracle, args.iterations, seed=args.seed)
    rows = [[r.iteration] + list(r.chosen_point) + [float(np.max(r.criterion_values))]
            for r in results]
    header = ["iteration"] + [f"x{j}" for j in range(ds.dim)] + ["criterion_max"]
    _write_csv(out / "trace.csv", header, rows, cfg)
    print(f"wrote {out / 'trace.csv'} ({len(results)} infill steps)")
    return 0


def cmd_train(args) -> int:
    cfg = _build_run_config(args)
    out = _outdir(args)
    if args.benchmark:
        case = benchmarks.get_case(args.benchmark)
        ds = benchmarks.make_training_set(case, args.lf_count, args.hf_count, seed=args.seed)
        preset = mfdnn.PRESETS[args.preset or case.name]
    elif args.lf_csv and args.hf_csv:
        args.cheap, args.expensive = args.lf_csv, args.hf_csv
        args.cheap_y = args.expensive_y = getattr(args, "cheap_y", None)
        ds = _load_two_fidelity(args)
        preset = mfdnn.PRESETS[args.preset or "lin1d"]
        case = None
    else:
        raise ValueError("train requires --benchmark or both --lf-csv and --hf-csv")
    epochs = args.epochs or preset["epochs"]
    config = mfdnn.TrainConfig(epochs=epochs, learning_rate=preset["learning_rate"],
                               lambda_reg=cfg.get("train.lambda_reg", 1e-4), seed=args.seed,
                               lbfgs_refine=bool(cfg.get("train.lbfgs_refine", False)))
    if args.grid_search:
        search = mfdnn.grid_search((ds.x_cheap, ds.y_cheap), (ds.x_expensive, ds.y_expensive),
                                   seed=args.seed, epochs=min(epochs, 200))
        best = search["best"]
        lf_hidden = corr_hidden = (best["width"],) * best["layers"]
        config.learning_rate = best["learning_rate"]
    else:
        lf_hidden, corr_hidden = preset["lf_hidden"], preset["corr_hidden"]
    model = mfdnn.train_mfdnn(ds.x_cheap, ds.y_cheap, ds.x_expensive, ds.y_expensive,
                              lf_hidden=lf_hidden, corr_hidden=corr_hidden, config=config,
                              dtype=np.dtype(preset.get("dtype", "float64")))
    model.save(_model_path(out))
    summary = {"config_hash": cfg.hash, "epochs": epochs,
               "lf_hidden": list(lf_hidden), "corr_hidden": list(corr_hidden)}
    if case is not None:
        metrics = benchmarks.evaluate_surrogate(case, lambda X: mfdnn.predict_hf(model, X),
                                                n_test=1000 if case.dim == 1 else 10_000,
                                                seed=args.seed + 1)
        summary.update(metrics)
        print(f"{case.name}: mse={metrics['mse']:.6g} r2={metrics['r2']:.6g}")
    with open((out.parent if out.suffix == ".json" else out) / "summary.json", "w",
              encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
    print(f"model: {_model_path(out)}")
    return 0


def cmd_benchmark(args) -> int:
    cfg = _build_run_config(args)
    out = _outdir(args)
    case = benchmarks.get_case(args.case)
    rows = []
    scatter = None
    if args.model == "cokriging":
        hf_locs = benchmarks.COKRIGING_HF_LIN1D if case.name == "lin1d" else None
        ds = benchmarks.make_training_set(case, seed=args.seed, hf_locations=hf_locs)
        model = cokriging.fit(ds, family=cfg.get("kernel.family", "gaussian"), seed=args.seed)
        predictor = lambda X: cokriging.predict(model, X)
    elif args.model == "kriging":
        case_ds = benchmarks.make_training_set(case, seed=args.seed)
        model = kriging.fit((case_ds.x_expensive, case_ds.y_expensive),
                            cfg.get("kernel.family", "gaussian"), args.seed)
        predictor = lambda X: kriging.predict(model, X)
    elif args.model == "mfdnn":
        preset = mfdnn.PRESETS[case.name]
        ds = benchmarks.make_training_set(case, args.lf_count, args.hf_count, seed=args.seed)
        config = mfdnn.TrainConfig(epochs=args.epochs or preset["epochs"],
                                   learning_rate=preset["learning_rate"], seed=args.seed)
        model = mfdnn.train_mfdnn(ds.x_cheap, ds.y_cheap, ds.x_expensive, ds.y_expensive,
                                  lf_hidden=preset["lf_hidden"], corr_hidden=preset["corr_hidden"],
                                  config=config, dtype=np.dtype(preset.get("dtype", "float64")))
        predictor = lambda X: mfdnn.predict_hf(model, X)
    else:
        raise ValueError(f"unknown model {args.model!r}")
    n_test = 1000 if case.dim == 1 else 10_000
    metrics = benchmarks.evaluate_surrogate(case, predictor, n_test=n_test, seed=args.seed + 1)
    rows.append([args.model, case.name, metrics["mse"], metrics["r2"]])
    _write_csv(out / "results.csv", ["model", "case", "mse", "r2"], rows, cfg)
    if case.dim > 1:
        X = benchmarks.test_points(case, n_test, seed=args.seed + 1)
        truth = benchmarks.eval_hf(case, X)
        pred = np.asarray(predictor(X)).ravel()
        _write_csv(out / "scatter.csv", ["prediction", "truth"],
                   list(zip(pred, truth)), cfg)
    print(f"{'model':<12}{'case':<10}{'MSE':>14}{'R2':>10}")
    for r in rows:
        print(f"{r[0]:<12}{r[1]:<10}{r[2]:>14.6e}{r[3]:>10.4f}")
    return 0


def cmd_uq(args) -> int:
    cfg = _build_run_config(args)
    out = _outdir(args)
    if args.model:
        model = _load_model(args.model)
        surrogate = _surrogate_fn(model)
        dim = (model.dim if not isinstance(model, mfdnn.MfdnnModel)
               else model.lf_net.weights[0].shape[0])
        lo = np.asarray(model.lo if not isinstance(model, mfdnn.MfdnnModel)
                        else model.lf_net.x_lo, dtype=float)
        hi = np.asarray(model.hi if not isinstance(model, mfdnn.MfdnnModel)
                        else model.lf_net.x_hi, dtype=float)
    elif args.benchmark:
        case = benchmarks.get_case(args.benchmark)
        surrogate = lambda X: benchmarks.eval_hf(case, X)
        dim, lo, hi = case.dim, case.lower, case.upper
    else:
        raise ValueError("uq requires --model or --benchmark")
    lo = cfg.get("uq.lower", lo)
    hi = cfg.get("uq.upper", hi)
    lo = np.broadcast_to(np.atleast_1d(np.asarray(lo, dtype=float)), (dim,))
    hi = np.broadcast_to(np.atleast_1d(np.asarray(hi, dtype=float)), (dim,))
    if args.dist == "uniform":
        spec = DistributionSpec(kind="uniform", lower=lo, upper=hi)
    else:
        mean = np.broadcast_to(np.atleast_1d(np.asarray(
            cfg.get("uq.mean", 0.5 * (lo + hi)), dtype=float)), (dim,))
        sd = np.broadcast_to(np.atleast_1d(np.asarray(
            cfg.get("uq.stddev", (hi - lo) / 6.0), dtype=float)), (dim,))
        spec = DistributionSpec(kind="gaussian-truncated", lower=lo, upper=hi,
                                mean=mean, stddev=sd)
    summary = uq.propagate(surrogate, spec, n=args.n, bins=args.bins, seed=args.seed)
    rows = [[le, re, d] for le, re, d in
            zip(summary.bin_edges[:-1], summary.bin_edges[1:], summary.densities)]
    _write_csv(out / "hist.csv", ["edge_left", "edge_right", "density"], rows, cfg)
    doc = summary.to_dict()
    doc["config_hash"] = cfg.hash
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    print(f"mean={summary.mean:.6g} variance={summary.variance:.6g} "
          f"skewness={summary.skewness:.6g}")
    print(f"wrote {out / 'hist.csv'} and {out / 'summary.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfuq", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output directory (default $MFUQ_OUT or ./mfuq_out)")
        sp.add_argument("--config", default=None, help="flat key=value config file")

    sp = sub.add_parser("fit", help="fit co-kriging to cheap+expensive CSVs")
    sp.add_argument("--cheap", required=True)
    sp.add_argument("--expensive", required=True)
    sp.add_argument("--x-cols", default=None, help="comma-separated input columns")
    sp.add_argument("--cheap-y", default=None)
    sp.add_argument("--expensive-y", default=None)
    sp.add_argument("--family", default="gaussian", choices=FAMILIES)
    sp.add_argument("--grid", type=int, default=101, help="prediction grid per dimension")
    common(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("predict", help="evaluate a saved model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--at", default=None, help="points 'x1,x2;x1,x2'")
    sp.add_argument("--grid", type=int, default=101)
    common(sp)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("sample", help="adaptive infill (or ranked suggestions)")
    sp.add_argument("--benchmark", default=None, choices=sorted(benchmarks.CASES))
    sp.add_argument("--cheap", default=None)
    sp.add_argument("--expensive", default=None)
    sp.add_argument("--x-cols", default=None)
    sp.add_argument("--cheap-y", default=None)
    sp.add_argument("--expensive-y", default=None)
    sp.add_argument("--criterion", default="1",
                    choices=["1", "2", "3", "4", "5a", "5b"])
    sp.add_argument("--iterations", type=int, default=5)
    sp.add_argument("--grid", type=int, default=101)
    sp.add_argument("--family", default="gaussian", choices=FAMILIES)
    sp.add_argument("--suggest-only", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("train", help="train the two-stage neural surrogate")
    sp.add_argument("--benchmark", default=None, choices=sorted(benchmarks.CASES))
    sp.add_argument("--lf-csv", default=None)
    sp.add_argument("--hf-csv", default=None)
    sp.add_argument("--preset", default=None, choices=sorted(mfdnn.PRESETS))
    sp.add_argument("--grid-search", action="store_true")
    sp.add_argument("--epochs", type=int, default=None)
    sp.add_argument("--lf-count", type=int, default=None)
    sp.add_argument("--hf-count", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("benchmark", help="reproduce the analytic benchmark tables")
    sp.add_argument("--case", required=True, choices=sorted(benchmarks.CASES))
    sp.add_argument("--model", required=True, choices=["cokriging", "kriging", "mfdnn"])
    sp.add_argument("--epochs", type=int, default=None)
    sp.add_argument("--lf-count", type=int, default=None)
    sp.add_argument("--hf-count", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("uq", help="Monte Carlo uncertainty propagation")
    sp.add_argument("--model", default=None)
    sp.add_argument("--benchmark", default=None, choices=sorted(benchmarks.CASES))
    sp.add_argument("--dist", default="uniform", choices=["uniform", "gaussian"])
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--bins", type=int, default=50)
    common(sp)
    sp.set_defaults(func=cmd_uq)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
