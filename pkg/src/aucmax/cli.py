"""Benchmark command line: synthetic data generation, signal feature
extraction, training (saddle solvers or baselines), evaluation of stored
models, and a three-way model comparison.

Every command accepts ``--config <json>``; explicit flags override config
file entries, which override built-in defaults.  The resolved configuration
is echoed into each output manifest, and identical flags plus seeds always
reproduce byte-identical outputs.  Exit codes: 0 success, 1 runtime or data
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import (
    LinearModel,
    decision_scores,
    fit_linear_svm,
    fit_logistic,
    model_from_dict,
    model_to_dict,
    predict,
)
from .data import (
    SplitSpec,
    Standardizer,
    SynthSpec,
    fit_apply_standardizer,
    generate_synthetic,
    load_labeled_csv,
    split,
    write_feature_csv,
)
from .features import (
    WindowSpec,
    build_feature_sets,
    default_channel_indices,
    layout_manifest,
    read_trial_labels,
    set_level,
)
from .metrics import classification_report, report_csv_row, report_to_dict, roc_auc
from .objective import AucProblem, LabeledDataset
from .signals import DEFAULT_BANDS, read_signal_binary, read_signal_csv
from .solvers import METHODS, SolverConfig, solve, write_trace_csv

ENV_SEED = "AUCMAX_SEED"
EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2

SOLVER_CHOICES = METHODS + ("logistic", "svm")
DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
SECOND_ORDER_DIM_WARNING = 1500     # quasi-Newton / Newton are impractical beyond this

SYNTH_DEFAULTS = {"n": 1000, "dim": 10, "pos_frac": 1.0 / 3.0, "sep": 1.0, "out": "."}
EXTRACT_DEFAULTS = {
    "set": 1,
    "window": 2.0,
    "stride": 0.5,
    "order": 4,
    "channels": "auto",
    "corr_lags": None,
    "out": ".",
}
TRAIN_DEFAULTS = {
    "solver": "alt-gda",
    "step_size": None,
    "grad_tolerance": 1e-3,
    "max_iterations": 50_000,
    "lambda": 1e-4,
    "broyden_tau": "sr1",
    "direction_rule": "greedy-basis",
    "updates_per_iteration": 1,
    "C": 1.0,
    "baseline_tol": None,
    "baseline_max_iter": 10_000,
    "train_fraction": 0.8,
    "threshold": None,
    "trace_auc": True,
    "out": ".",
}
COMPARE_DEFAULTS = {
    "solver": "alt-gda",
    "step_size": None,
    "grad_tolerance": 1e-3,
    "max_iterations": 50_000,
    "lambda": 1e-4,
    "broyden_tau": "sr1",
    "direction_rule": "greedy-basis",
    "updates_per_iteration": 1,
    "c_grid": list(DEFAULT_C_GRID),
    "baseline_tol": None,
    "baseline_max_iter": 10_000,
    "train_fraction": 0.8,
    "threshold": None,
    "out": ".",
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:       # argparse already printed usage (code 2) or help (0)
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aucmax",
        description="AUC-maximizing linear classification benchmark harness",
    )
    parser.add_argument("--version", action="version", version=f"aucmax {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its entries")
        p.add_argument("--seed", type=int, help=f"RNG seed (fallback: ${ENV_SEED}, then 0)")
        p.add_argument("--out", help="output directory (created if missing)")

    p = sub.add_parser("synth", help="generate a synthetic imbalanced feature CSV")
    common(p)
    p.add_argument("--n", type=int, help="number of samples")
    p.add_argument("--dim", type=int, help="number of features")
    p.add_argument("--pos-frac", dest="pos_frac", type=float, help="positive-class fraction")
    p.add_argument("--sep", type=float, help="class mean separation")
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("extract", help="extract feature sets from trial signal files")
    common(p)
    p.add_argument("--signals", nargs="+", required=True,
                   help="signal files (.csv/.bin) or directories of them")
    p.add_argument("--labels", required=True, help="sidecar CSV mapping trial id to +1/-1")
    p.add_argument("--set", type=int, choices=(1, 2, 3, 4), help="cumulative feature set")
    p.add_argument("--window", type=float, help="window length in seconds")
    p.add_argument("--stride", type=float, help="stride in seconds")
    p.add_argument("--order", type=int, help="Butterworth filter order")
    p.add_argument("--channels", help="'auto' or comma-separated 0-based channel rows")
    p.add_argument("--corr-lags", dest="corr_lags", help="comma-separated sample lags")
    p.set_defaults(handler=_cmd_extract)

    def train_flags(p):
        p.add_argument("--features", required=True, help="feature CSV (label column first)")
        p.add_argument("--eta", dest="step_size", type=float, help="first-order step size")
        p.add_argument("--tol", dest="grad_tolerance", type=float, help="gradient norm tolerance")
        p.add_argument("--max-iter", dest="max_iterations", type=int, help="iteration cap")
        p.add_argument("--lambda", dest="lam", type=float, help="L2 regularization weight")
        p.add_argument("--tau", dest="broyden_tau", help="Broyden tau in [0,1] or sr1/dfp/bfgs")
        p.add_argument("--direction", dest="direction_rule",
                       choices=("greedy-basis", "random-gaussian"), help="quasi-Newton direction rule")
        p.add_argument("--k-updates", dest="updates_per_iteration", type=int,
                       help="curvature updates per quasi-Newton iteration")
        p.add_argument("--C", type=float, help="baseline trade-off parameter")
        p.add_argument("--baseline-tol", dest="baseline_tol", type=float, help="baseline tolerance")
        p.add_argument("--baseline-max-iter", dest="baseline_max_iter", type=int,
                       help="baseline iteration cap")
        p.add_argument("--train-frac", dest="train_fraction", type=float, help="train split fraction")
        p.add_argument("--threshold", type=float, help="classification threshold override")

    p = sub.add_parser("train", help="split, standardize, and train one model")
    common(p)
    train_flags(p)
    p.add_argument("--solver", choices=SOLVER_CHOICES, help="saddle solver or baseline")
    auc_trace = p.add_mutually_exclusive_group()
    auc_trace.add_argument("--trace-auc", dest="trace_auc", action="store_true", default=None,
                           help="record train/test AUC on every trace row (default)")
    auc_trace.add_argument("--no-trace-auc", dest="trace_auc", action="store_false", default=None)
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a stored model on a feature CSV")
    common(p)
    p.add_argument("--features", required=True, help="feature CSV (label column first)")
    p.add_argument("--model", required=True, help="model JSON produced by train/compare")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("compare", help="tuned logistic vs tuned SVM vs the AUC maximizer")
    common(p)
    train_flags(p)
    p.add_argument("--solver", choices=METHODS, help="saddle solver for the AUC maximizer")
    p.add_argument("--c-grid", dest="c_grid", help="comma-separated C grid for tuning")
    p.set_defaults(handler=_cmd_compare)
    return parser


# ---------------------------------------------------------------------------
# Shared plumbing

def _load_config(path) -> dict:
    if not path:
        return {}
    obj = json.loads(Path(path).read_text())
    if not isinstance(obj, dict):
        raise ValueError(f"{path}: config file must hold a JSON object")
    return obj


def _resolve(args, file_cfg: dict, defaults: dict) -> dict:
    effective = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        effective[key] = flag if flag is not None else file_cfg.get(key, default)
    return effective


def _resolve_seed(args, file_cfg: dict) -> int:
    if args.seed is not None:
        return int(args.seed)
    if "seed" in file_cfg:
        return int(file_cfg["seed"])
    env = os.environ.get(ENV_SEED)
    if env is not None:
        return int(env)
    return 0


def _out_dir(effective: dict) -> Path:
    out = Path(effective["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _parse_tau(raw):
    if raw is None or isinstance(raw, (int, float)):
        return raw
    if raw in ("sr1", "dfp", "bfgs"):
        return raw
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"--tau must be a number in [0,1] or sr1/dfp/bfgs, got {raw!r}") from None


def _parse_int_list(raw):
    return [int(tok) for tok in str(raw).split(",") if tok != ""]


def _parse_float_list(raw):
    return [float(tok) for tok in str(raw).split(",") if tok != ""]


# ---------------------------------------------------------------------------
# synth

def _cmd_synth(args) -> int:
    file_cfg = _load_config(args.config)
    eff = _resolve(args, file_cfg, SYNTH_DEFAULTS)
    eff["seed"] = _resolve_seed(args, file_cfg)
    spec = SynthSpec(
        n_samples=int(eff["n"]), n_features=int(eff["dim"]),
        positive_fraction=float(eff["pos_frac"]), class_separation=float(eff["sep"]),
        seed=eff["seed"],
    )
    dataset = generate_synthetic(spec)
    out = _out_dir(eff)
    names = [f"f{i:03d}" for i in range(spec.n_features)]
    write_feature_csv(out / "features.csv", dataset.features, dataset.labels, names)
    manifest = {
        "command": "synth",
        "config": eff,
        "dataset": {
            "n_samples": dataset.n_samples,
            "n_features": dataset.n_features,
            "positive_count": int(np.count_nonzero(dataset.labels == 1)),
        },
        "outputs": {"features": "features.csv"},
    }
    _write_json(out / "manifest.json", manifest)
    return EXIT_OK


# ---------------------------------------------------------------------------
# extract

def _signal_files(raw_paths) -> list[Path]:
    files: list[Path] = []
    for raw in raw_paths:
        path = Path(raw)
        if path.is_dir():
            files.extend(sorted(p for p in path.iterdir() if p.suffix in (".csv", ".bin")))
        else:
            files.append(path)
    if not files:
        raise ValueError("no signal files found")
    return files


def _read_trial(path: Path):
    if path.suffix == ".csv":
        return read_signal_csv(path)
    return read_signal_binary(path)


def _resolve_channels(raw, n_channels: int) -> list[int]:
    if raw is None or raw == "auto":
        if n_channels >= 32:
            return default_channel_indices()
        return list(range(n_channels))
    return _parse_int_list(raw)


def _cmd_extract(args) -> int:
    file_cfg = _load_config(args.config)
    eff = _resolve(args, file_cfg, EXTRACT_DEFAULTS)
    eff["seed"] = _resolve_seed(args, file_cfg)
    eff["signals"] = list(args.signals)
    eff["labels"] = args.labels

    labels = read_trial_labels(args.labels)
    files = _signal_files(args.signals)
    spec = WindowSpec(float(eff["window"]), float(eff["stride"]))
    set_id = set_level(eff["set"])

    all_rows, all_labels, layout = [], [], None
    names = None
    trials_meta = []
    for path in files:
        trial = _read_trial(path)
        trial_id = path.stem
        if trial_id not in labels:
            raise ValueError(f"missing label for trial {trial_id!r} in {args.labels}")
        channels = _resolve_channels(eff["channels"], trial.n_channels)
        corr_lags = (
            _parse_int_list(eff["corr_lags"]) if eff["corr_lags"] is not None
            else (0, int(round(trial.sampling_rate / 4.0)))
        )
        fm = build_feature_sets(
            trial, channels=channels, spec=spec, set_id=set_id,
            bands=DEFAULT_BANDS, filter_order=int(eff["order"]), corr_lags=corr_lags,
        )
        if names is None:
            names = fm.feature_names
            layout = layout_manifest(channels, spec, DEFAULT_BANDS, set_id, corr_lags,
                                     filter_order=int(eff["order"]))
        elif fm.feature_names != names:
            raise ValueError(f"{path}: trial produced an inconsistent feature layout")
        all_rows.append(fm.values)
        all_labels.extend([labels[trial_id]] * fm.n_rows)
        trials_meta.append({"trial": trial_id, "rows": fm.n_rows, "label": labels[trial_id]})

    values = np.vstack(all_rows)
    out = _out_dir(eff)
    write_feature_csv(out / "features.csv", values, np.asarray(all_labels), names)
    manifest = {
        "command": "extract",
        "config": eff,
        "layout": layout,
        "trials": trials_meta,
        "outputs": {"features": "features.csv"},
    }
    _write_json(out / "manifest.json", manifest)
    return EXIT_OK


# ---------------------------------------------------------------------------
# train / eval / compare helpers

def _split_standardize(dataset: LabeledDataset, train_fraction: float, seed: int):
    spec = SplitSpec(train_fraction=train_fraction, seed=seed, stratified=True)
    train, test = split(dataset, spec)
    return fit_apply_standardizer(train, test)


def _auc_scores(weights: np.ndarray, dataset: LabeledDataset) -> np.ndarray:
    return dataset.features @ weights


def _train_auc_model(train_std, test_std, eff, seed, trace_auc):
    config = SolverConfig(
        method=eff["solver"],
        step_size=eff["step_size"],
        max_iterations=int(eff["max_iterations"]),
        grad_tolerance=float(eff["grad_tolerance"]),
        broyden_tau=_parse_tau(eff["broyden_tau"]),
        direction_rule=eff["direction_rule"],
        updates_per_iteration=int(eff["updates_per_iteration"]),
        rng_seed=seed,
    )
    problem = AucProblem(train_std, lam=float(eff["lambda"]))
    if eff["solver"] in ("newton", "qn-broyden") and problem.dim_x + 1 > SECOND_ORDER_DIM_WARNING:
        print(
            f"warning: second-order solver on dimension {problem.dim_x + 1} "
            f"(> {SECOND_ORDER_DIM_WARNING}) is likely impractical",
            file=sys.stderr,
        )
    d = train_std.n_features
    auc_eval = None
    if trace_auc:
        def auc_eval(x, y):
            return (
                roc_auc(_auc_scores(x[:d], train_std), train_std.labels),
                roc_auc(_auc_scores(x[:d], test_std), test_std.labels),
            )
    result = solve(problem, config, auc_eval=auc_eval)
    state = result.final_state
    threshold = (
        float(eff["threshold"]) if eff["threshold"] is not None
        else (state.u + state.v) / 2.0
    )
    return result, state, threshold


def _auc_model_dict(state, threshold, lam, standardizer, extra_meta) -> dict:
    return {
        "kind": "auc-linear",
        "w": state.w.tolist(),
        "u": state.u,
        "v": state.v,
        "y": state.y,
        "threshold": threshold,
        "lambda": lam,
        "train_meta": {"standardizer": standardizer.to_dict(), **extra_meta},
    }


def _model_reports(scores_train, scores_test, preds_train, preds_test, train_std, test_std):
    return (
        classification_report(train_std.labels, preds_train, scores_train),
        classification_report(test_std.labels, preds_test, scores_test),
    )


def _fit_baseline(kind: str, train_std, C: float, tol, max_iter: int) -> LinearModel:
    if kind == "logistic":
        return fit_logistic(train_std, C=C, tol=tol if tol is not None else 1e-6,
                            max_iter=max_iter)
    return fit_linear_svm(train_std, C=C, tol=tol if tol is not None else 1e-6,
                          max_iter=max_iter)


def _cmd_train(args) -> int:
    file_cfg = _load_config(args.config)
    eff = _resolve(args, file_cfg, TRAIN_DEFAULTS)
    eff["lambda"] = args.lam if args.lam is not None else file_cfg.get("lambda", TRAIN_DEFAULTS["lambda"])
    eff["seed"] = _resolve_seed(args, file_cfg)
    eff["features"] = args.features
    eff["standardize"] = True
    seed = eff["seed"]

    dataset, _ = load_labeled_csv(args.features)
    train_std, test_std, standardizer = _split_standardize(
        dataset, float(eff["train_fraction"]), seed
    )
    out = _out_dir(eff)
    outputs = {"model": "model.json", "report": "report.json"}
    common_meta = {
        "seed": seed,
        "train_fraction": float(eff["train_fraction"]),
        "n_train": train_std.n_samples,
        "n_test": test_std.n_samples,
    }

    if eff["solver"] in ("logistic", "svm"):
        model = _fit_baseline(eff["solver"], train_std, float(eff["C"]),
                              eff["baseline_tol"], int(eff["baseline_max_iter"]))
        model.train_meta.update(common_meta)
        model.train_meta["standardizer"] = standardizer.to_dict()
        model_dict = model_to_dict(model)
        scores_train = decision_scores(model, train_std.features)
        scores_test = decision_scores(model, test_std.features)
        preds_train = predict(model, train_std.features)
        preds_test = predict(model, test_std.features)
        results_meta = {"converged": model.train_meta.get("converged"),
                        "iterations_used": model.train_meta.get("iterations")}
    else:
        result, state, threshold = _train_auc_model(
            train_std, test_std, eff, seed, bool(eff["trace_auc"])
        )
        model_dict = _auc_model_dict(
            state, threshold, float(eff["lambda"]), standardizer,
            {**common_meta, "solver": eff["solver"], "converged": result.converged,
             "iterations": result.iterations_used},
        )
        scores_train = _auc_scores(state.w, train_std)
        scores_test = _auc_scores(state.w, test_std)
        preds_train = np.where(scores_train > threshold, 1, -1)
        preds_test = np.where(scores_test > threshold, 1, -1)
        write_trace_csv(result.trace, out / "trace.csv")
        outputs["trace"] = "trace.csv"
        results_meta = {"converged": result.converged,
                        "iterations_used": result.iterations_used,
                        "threshold": threshold}

    report_train, report_test = _model_reports(
        scores_train, scores_test, preds_train, preds_test, train_std, test_std
    )
    _write_json(out / "model.json", model_dict)
    _write_json(out / "report.json",
                {"train": report_to_dict(report_train), "test": report_to_dict(report_test)})
    manifest = {
        "command": "train",
        "config": eff,
        "dataset": {
            "n_samples": dataset.n_samples,
            "n_features": dataset.n_features,
            "positive_fraction": float(np.count_nonzero(dataset.labels == 1) / dataset.n_samples),
        },
        "results": results_meta,
        "outputs": outputs,
    }
    _write_json(out / "manifest.json", manifest)
    return EXIT_OK


def _cmd_eval(args) -> int:
    file_cfg = _load_config(args.config)
    eff = {"out": args.out if args.out is not None else file_cfg.get("out", ".")}
    eff["seed"] = _resolve_seed(args, file_cfg)
    eff["features"] = args.features
    eff["model"] = args.model

    dataset, _ = load_labeled_csv(args.features)
    model_obj = json.loads(Path(args.model).read_text())
    standardizer = Standardizer.from_dict(model_obj["train_meta"]["standardizer"])
    features = standardizer.transform(dataset.features)

    if model_obj["kind"] == "auc-linear":
        weights = np.asarray(model_obj["w"], dtype=float)
        scores = features @ weights
        preds = np.where(scores > float(model_obj["threshold"]), 1, -1)
    else:
        model = model_from_dict(model_obj)
        scores = decision_scores(model, features)
        preds = predict(model, features)

    report = classification_report(dataset.labels, preds, scores)
    out = _out_dir(eff)
    _write_json(out / "report.json", report_to_dict(report))
    manifest = {
        "command": "eval",
        "config": eff,
        "model_kind": model_obj["kind"],
        "dataset": {"n_samples": dataset.n_samples, "n_features": dataset.n_features},
        "outputs": {"report": "report.json"},
    }
    _write_json(out / "manifest.json", manifest)
    return EXIT_OK


def _tune_baseline(kind: str, train_std, c_grid, seed: int, tol, max_iter: int):
    """Pick C by validation AUC on a 10% carve-out of the training split."""
    carve = SplitSpec(train_fraction=0.9, seed=seed + 1, stratified=True)
    fit_part, val_part = split(train_std, carve)
    best_c, best_auc = None, -np.inf
    grid_aucs = []
    for c in c_grid:
        model = _fit_baseline(kind, fit_part, float(c), tol, max_iter)
        auc = roc_auc(decision_scores(model, val_part.features), val_part.labels)
        grid_aucs.append({"C": float(c), "val_auc": float(auc)})
        if auc > best_auc:
            best_c, best_auc = float(c), float(auc)
    return best_c, grid_aucs


def _cmd_compare(args) -> int:
    file_cfg = _load_config(args.config)
    eff = _resolve(args, file_cfg, COMPARE_DEFAULTS)
    eff["lambda"] = args.lam if args.lam is not None else file_cfg.get("lambda", COMPARE_DEFAULTS["lambda"])
    eff["seed"] = _resolve_seed(args, file_cfg)
    eff["features"] = args.features
    eff["standardize"] = True
    if isinstance(eff["c_grid"], str):
        eff["c_grid"] = _parse_float_list(eff["c_grid"])
    seed = eff["seed"]

    dataset, _ = load_labeled_csv(args.features)
    train_std, test_std, standardizer = _split_standardize(
        dataset, float(eff["train_fraction"]), seed
    )
    out = _out_dir(eff)

    rows = []
    tuning = {}
    model_files = {}

    for kind, label in (("logistic", "logistic"), ("svm", "linear-svm")):
        best_c, grid_aucs = _tune_baseline(
            kind, train_std, eff["c_grid"], seed, eff["baseline_tol"],
            int(eff["baseline_max_iter"]),
        )
        model = _fit_baseline(kind, train_std, best_c, eff["baseline_tol"],
                              int(eff["baseline_max_iter"]))
        model.train_meta["standardizer"] = standardizer.to_dict()
        tuning[label] = {"C": best_c, "grid": grid_aucs}
        report_train, report_test = _model_reports(
            decision_scores(model, train_std.features),
            decision_scores(model, test_std.features),
            predict(model, train_std.features),
            predict(model, test_std.features),
            train_std, test_std,
        )
        rows.append((label, "train", report_train))
        rows.append((label, "test", report_test))
        filename = f"model_{kind}.json"
        _write_json(out / filename, model_to_dict(model))
        model_files[label] = filename

    result, state, threshold = _train_auc_model(train_std, test_std, eff, seed, trace_auc=False)
    scores_train = _auc_scores(state.w, train_std)
    scores_test = _auc_scores(state.w, test_std)
    report_train, report_test = _model_reports(
        scores_train, scores_test,
        np.where(scores_train > threshold, 1, -1),
        np.where(scores_test > threshold, 1, -1),
        train_std, test_std,
    )
    rows.append(("auc-max", "train", report_train))
    rows.append(("auc-max", "test", report_test))
    auc_model = _auc_model_dict(
        state, threshold, float(eff["lambda"]), standardizer,
        {"seed": seed, "solver": eff["solver"], "converged": result.converged,
         "iterations": result.iterations_used},
    )
    _write_json(out / "model_auc.json", auc_model)
    model_files["auc-max"] = "model_auc.json"

    csv_lines = ["model,split,accuracy,precision,recall,f1,auc,tp,fp,tn,fn"]
    json_rows = []
    for label, part, report in rows:
        csv_lines.append(f"{label},{part},{report_csv_row(report)}")
        json_rows.append({"model": label, "split": part, **report_to_dict(report)})
    (out / "comparison.csv").write_text("\n".join(csv_lines) + "\n")
    _write_json(out / "comparison.json",
                {"rows": json_rows, "tuning": tuning, "config": eff})
    manifest = {
        "command": "compare",
        "config": eff,
        "results": {
            "converged": result.converged,
            "iterations_used": result.iterations_used,
            "threshold": threshold,
            "tuned_C": {label: tuning[label]["C"] for label in tuning},
        },
        "outputs": {"comparison_csv": "comparison.csv", "comparison_json": "comparison.json",
                    "models": model_files},
    }
    _write_json(out / "manifest.json", manifest)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
