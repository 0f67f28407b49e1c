"""Command-line interface.

Subcommands:
  run     full experiment from a key=value config file
  bench   one method on one dataset with a fixed kernel, k-fold CV
  report  re-render a saved report.json as markdown or CSV tables

Exit codes: 0 success, 1 partial results (some evaluations failed),
2 configuration error.  PCSVM_WORKERS sets the fold worker pool size.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .harness import (
    METHODS,
    ConfigError,
    _evaluate,
    _train_method,
    emit_report,
    load_any_dataset,
    parse_config_file,
    report_from_json,
    run_experiment,
)
from .data import standardize, stratified_kfold
from .kernels import kernel_from_spec
from .svm import save_model

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


def _cmd_run(args) -> int:
    try:
        cfg = parse_config_file(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = run_experiment(cfg, progress=lambda line: print(line, file=sys.stderr))
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    for fmt in ("md", "csv"):
        emit_report(report, fmt, out)
    print(f"report written to {out}", file=sys.stderr)
    if report.partial:
        failed = sum(len(c.errors) for c in report.cells.values())
        print(f"{failed} evaluations failed; report is partial", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_bench(args) -> int:
    try:
        kernel = kernel_from_spec(args.kernel)
        if args.method not in METHODS:
            raise ConfigError(f"unknown method {args.method!r}; "
                              f"choose from {list(METHODS)}")
        ds = load_any_dataset(args.dataset)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    plan = stratified_kfold(ds, args.folds, args.seed)
    fold_results = []
    errors = []
    for fold in range(args.folds):
        train_idx, test_idx = plan.split(fold)
        train_std, scaler = standardize(ds.subset(train_idx))
        test_std = scaler.transform_dataset(ds.subset(test_idx))
        try:
            start = time.perf_counter()
            model = _train_method(args.method, train_std, kernel, args.c,
                                  args.seed + fold, args.smote_k)
            runtime = time.perf_counter() - start
            rec = _evaluate(model, test_std)
            rec["runtime"] = runtime
            fold_results.append(rec)
        except Exception as exc:
            errors.append(f"fold {fold}: {exc!r}")
    payload = {
        "dataset": ds.name,
        "method": args.method,
        "kernel": kernel.spec_string(),
        "c": args.c,
        "seed": args.seed,
        "folds": fold_results,
        "errors": errors,
    }
    if fold_results:
        payload["mean"] = {
            key: float(np.mean([r[key] for r in fold_results]))
            for key in ("f_measure", "g_mean", "auc", "runtime")
        }
    if args.save_model:
        try:
            full_std, _ = standardize(ds)
            model = _train_method(args.method, full_std, kernel, args.c,
                                  args.seed, args.smote_k)
            save_model(model, args.save_model)
            payload["model_file"] = str(args.save_model)
        except Exception as exc:
            errors.append(f"save-model: {exc!r}")
    print(json.dumps(payload, indent=1))
    return EXIT_PARTIAL if errors else EXIT_OK


def _cmd_report(args) -> int:
    src = Path(args.in_dir) / "report.json"
    if not src.exists():
        print(f"config error: {src} not found", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = report_from_json(src.read_text(encoding="utf-8"))
        written = emit_report(report, args.format, args.in_dir)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in written:
        print(path)
    return EXIT_PARTIAL if report.partial else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcsvm",
        description="Kernel SVM toolkit for imbalanced binary classification.",
        epilog="Exit codes: 0 ok, 1 partial results, 2 config error. "
               "PCSVM_WORKERS controls fold parallelism.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser(
        "run", help="run a configured experiment",
        epilog="config keys: datasets, methods, c_grid, poly_degrees, "
               "rbf_gammas, folds, repeats, inner_folds, smote_k, seed, "
               "cell_budget (seconds per dataset/method/kernel-family cell)")
    p_run.add_argument("--config", required=True, help="key=value config file")
    p_run.add_argument("--out", default="results", help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_bench = sub.add_parser(
        "bench", help="cross-validate one method with a fixed kernel")
    p_bench.add_argument("--dataset", required=True, help="KEEL .dat or CSV file")
    p_bench.add_argument("--method", required=True,
                         help=f"one of {', '.join(METHODS)}")
    p_bench.add_argument("--kernel", required=True,
                         help='kernel spec: "linear", '
                              '"poly:degree=3,gamma=1,coef0=1", "rbf:gamma=0.5"')
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--c", type=float, default=1.0, help="penalty C")
    p_bench.add_argument("--folds", type=int, default=5)
    p_bench.add_argument("--smote-k", type=int, default=5, dest="smote_k")
    p_bench.add_argument("--save-model", default=None,
                         help="also train on all rows and save the model here")
    p_bench.set_defaults(func=_cmd_bench)

    p_report = sub.add_parser("report", help="render tables from report.json")
    p_report.add_argument("--in", dest="in_dir", required=True,
                          help="directory containing report.json")
    p_report.add_argument("--format", choices=("md", "csv"), required=True)
    p_report.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
