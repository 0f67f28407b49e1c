"""Experiment runner: repeated stratified cross-validation over a registry
of training methods, with nested grid search and table emission.

Every (dataset, method, kernel family) cell is scored by F-measure,
G-mean, and AUC averaged over repeats x folds.  Test folds stay untouched:
scaling is fit on the training split, grid search runs nested inside it,
and resampling or penalty derivation only ever sees training rows.
Failures are recorded per cell and the run continues; a report with any
failed evaluation is explicitly partial.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .data import Dataset, load_dataset, standardize, stratified_kfold
from .kernels import Kernel
from .metrics import auc_score, confusion_counts, summarize_scores
from .pcs import train_pcs, train_pcs_smote
from .resampling import ResamplePlan, resample
from .svm import train_dec, train_svm

__all__ = [
    "METHODS",
    "CellResult",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "emit_report",
    "load_any_dataset",
    "parse_config_file",
    "report_from_json",
    "run_experiment",
]

METHODS = ("svm", "cs_svm", "pcs_svm", "svm_rus", "svm_ros", "svm_smote",
           "pcs_smote_svm")
_METRICS = ("f_measure", "g_mean", "auc")

_DEFAULT_C_GRID = tuple(2.0 ** e for e in range(-5, 10, 2))
_DEFAULT_RBF_GAMMAS = tuple(2.0 ** e for e in range(-7, 4, 2))


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to CLI exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[str, ...]
    methods: tuple[str, ...] = METHODS
    c_grid: tuple[float, ...] = _DEFAULT_C_GRID
    poly_degrees: tuple[int, ...] = (2, 3)
    rbf_gammas: tuple[float, ...] = _DEFAULT_RBF_GAMMAS
    folds: int = 5
    repeats: int = 20
    inner_folds: int = 3
    smote_k: int = 5
    seed: int = 0
    cell_budget: float | None = None

    def __post_init__(self):
        if not self.datasets:
            raise ConfigError("no datasets configured")
        if not self.methods:
            raise ConfigError("no methods configured")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ConfigError(f"unknown methods {sorted(unknown)}; "
                              f"choose from {list(METHODS)}")
        if not self.c_grid:
            raise ConfigError("empty C grid")
        if not self.poly_degrees and not self.rbf_gammas:
            raise ConfigError("both kernel grids empty; configure poly_degrees "
                              "or rbf_gammas")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.inner_folds < 2:
            raise ConfigError("inner_folds must be >= 2")
        if self.cell_budget is not None and not self.cell_budget > 0:
            raise ConfigError("cell_budget must be positive when set")

    @property
    def families(self) -> tuple[str, ...]:
        fams = []
        if self.poly_degrees:
            fams.append("poly")
        if self.rbf_gammas:
            fams.append("rbf")
        return tuple(fams)

    def kernel_candidates(self, family: str) -> tuple[Kernel, ...]:
        if family == "poly":
            return tuple(Kernel("poly", degree=d, gamma=1.0, coef0=1.0)
                         for d in self.poly_degrees)
        if family == "rbf":
            return tuple(Kernel("rbf", gamma=g) for g in self.rbf_gammas)
        raise ConfigError(f"unknown kernel family {family!r}")


@dataclass
class CellResult:
    """Fold-level outcomes for one (dataset, method, family) cell."""

    dataset: str
    method: str
    family: str
    f_measure: list = field(default_factory=list)
    g_mean: list = field(default_factory=list)
    auc: list = field(default_factory=list)
    runtime: list = field(default_factory=list)
    chosen: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def mean(self, metric: str) -> float:
        values = getattr(self, metric)
        return float(np.mean(values)) if values else float("nan")

    @property
    def n_evaluations(self) -> int:
        return len(self.f_measure)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    cells: dict

    @property
    def partial(self) -> bool:
        return any(cell.errors for cell in self.cells.values())

    def win_counts(self, family: str, metric: str) -> dict:
        """Per-method count of datasets where the method's mean is best
        within the family; ties award every tied method."""
        wins = {m: 0 for m in self.config.methods}
        for ds_name in self._dataset_names():
            means = {m: self.cells[(ds_name, m, family)].mean(metric)
                     for m in self.config.methods
                     if (ds_name, m, family) in self.cells}
            finite = {m: v for m, v in means.items() if np.isfinite(v)}
            if not finite:
                continue
            best = max(finite.values())
            for m, v in finite.items():
                if v == best:
                    wins[m] += 1
        return wins

    def _dataset_names(self) -> list:
        seen = []
        for name, _, _ in self.cells:
            if name not in seen:
                seen.append(name)
        return seen

    def to_json(self) -> str:
        payload = {
            "config": asdict(self.config),
            "cells": [asdict(cell) for cell in self.cells.values()],
        }
        return json.dumps(payload, indent=1)


def report_from_json(text: str) -> ExperimentReport:
    payload = json.loads(text)
    raw_cfg = payload["config"]
    for key in ("datasets", "methods", "c_grid", "poly_degrees", "rbf_gammas"):
        raw_cfg[key] = tuple(raw_cfg[key])
    config = ExperimentConfig(**raw_cfg)
    cells = {}
    for raw in payload["cells"]:
        cell = CellResult(**raw)
        cells[(cell.dataset, cell.method, cell.family)] = cell
    return ExperimentReport(config=config, cells=cells)


def load_any_dataset(path) -> Dataset:
    """KEEL when the file opens with an @ header, CSV otherwise."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                first = line.strip()
                break
        else:
            first = ""
    fmt = "keel" if first.startswith("@") else "csv"
    return load_dataset(path, fmt=fmt)


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(tuple(parts)).generate_state(1)[0])


def _train_method(method: str, train: Dataset, kernel: Kernel, c: float,
                  seed: int, smote_k: int):
    if method == "svm":
        return train_svm(train, c, kernel)
    if method == "cs_svm":
        return train_dec(train, c, kernel)
    if method == "pcs_svm":
        return train_pcs(train, kernel, base_c=c, seed=seed).model
    if method == "pcs_smote_svm":
        return train_pcs_smote(train, kernel, base_c=c, smote_k=smote_k,
                               seed=seed).model
    plans = {
        "svm_rus": ResamplePlan(method="rus", seed=seed, target="balanced"),
        "svm_ros": ResamplePlan(method="ros", seed=seed, target="balanced"),
        "svm_smote": ResamplePlan(method="smote", seed=seed, target="balanced",
                                  k_neighbors=smote_k),
    }
    balanced = resample(train, plans[method])
    return train_svm(balanced, c, kernel)


def _evaluate(model, test: Dataset) -> dict:
    dv = model.decision_function(test.features)
    pred = np.where(dv >= 0.0, 1, -1).astype(np.int64)
    scores = summarize_scores(confusion_counts(test.labels, pred))
    return {
        "f_measure": scores.f_measure,
        "g_mean": scores.g_mean,
        "auc": auc_score(test.labels, dv),
    }


def _grid_search(train: Dataset, method: str, candidates, cfg: ExperimentConfig,
                 seed: int):
    """Pick (kernel, c) by mean G-mean over an inner stratified CV;
    candidate order breaks ties, so results are deterministic."""
    if len(candidates) == 1:
        return candidates[0]
    plan = stratified_kfold(train, cfg.inner_folds, seed)
    splits = [plan.split(i) for i in range(cfg.inner_folds)]
    best_score = -1.0
    best = candidates[0]
    for kernel, c in candidates:
        scores = []
        for tr, va in splits:
            try:
                model = _train_method(method, train.subset(tr), kernel, c,
                                      seed, cfg.smote_k)
                scores.append(_evaluate(model, train.subset(va))["g_mean"])
            except Exception:
                scores.append(0.0)
        mean_score = float(np.mean(scores))
        if mean_score > best_score:
            best_score = mean_score
            best = (kernel, c)
    return best


def _run_fold(ds: Dataset, cfg: ExperimentConfig, repeat: int, fold: int,
              blown: set | None = None) -> list:
    """All cells for one (repeat, fold); returns evaluation records.

    blown collects cells whose wall-clock budget is already spent, so
    later fold evaluations of the same cell skip straight to a timeout
    record instead of burning more time.
    """
    plan = stratified_kfold(ds, cfg.folds, _derived_seed(cfg.seed, repeat))
    train_idx, test_idx = plan.split(fold)
    assert not set(train_idx.tolist()) & set(test_idx.tolist()), \
        "fold split leaked indices"
    train_std, scaler = standardize(ds.subset(train_idx))
    test_std = scaler.transform_dataset(ds.subset(test_idx))
    records = []
    for method in cfg.methods:
        for family in cfg.families:
            candidates = [(k, c) for k in cfg.kernel_candidates(family)
                          for c in cfg.c_grid]
            cell_seed = _derived_seed(cfg.seed, repeat, fold,
                                      METHODS.index(method))
            record = {"method": method, "family": family}
            if blown is not None and (method, family) in blown:
                record["error"] = (f"repeat {repeat} fold {fold}: timeout "
                                   f"(cell budget {cfg.cell_budget:g}s exhausted)")
                records.append(record)
                continue
            try:
                unit_start = time.perf_counter()
                kernel, c = _grid_search(train_std, method, candidates, cfg,
                                         cell_seed)
                start = time.perf_counter()
                model = _train_method(method, train_std, kernel, c, cell_seed,
                                      cfg.smote_k)
                runtime = time.perf_counter() - start
                unit_time = time.perf_counter() - unit_start
                if cfg.cell_budget is not None and unit_time > cfg.cell_budget:
                    if blown is not None:
                        blown.add((method, family))
                    record["error"] = (f"repeat {repeat} fold {fold}: timeout "
                                       f"({unit_time:.1f}s exceeded the "
                                       f"{cfg.cell_budget:g}s cell budget)")
                    records.append(record)
                    continue
                record.update(_evaluate(model, test_std))
                record["runtime"] = runtime
                record["chosen"] = f"{kernel.spec_string()} C={c:g}"
            except Exception as exc:
                record["error"] = f"repeat {repeat} fold {fold}: {exc!r}"
            records.append(record)
    return records


def run_experiment(cfg: ExperimentConfig, progress=None) -> ExperimentReport:
    """Run every configured cell; deterministic for a fixed config.

    progress, if given, is called with a line of text after each dataset.
    Worker count comes from PCSVM_WORKERS (default 1); results are merged
    in job order, so parallel runs reproduce sequential output.
    """
    workers = int(os.environ.get("PCSVM_WORKERS", "1") or "1")
    cells: dict = {}
    for path in cfg.datasets:
        ds = load_any_dataset(path)
        for method in cfg.methods:
            for family in cfg.families:
                cells[(ds.name, method, family)] = CellResult(
                    dataset=ds.name, method=method, family=family)
        jobs = [(repeat, fold) for repeat in range(cfg.repeats)
                for fold in range(cfg.folds)]
        blown: set = set()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(
                    lambda rf: _run_fold(ds, cfg, rf[0], rf[1], blown), jobs))
        else:
            results = [_run_fold(ds, cfg, repeat, fold, blown)
                       for repeat, fold in jobs]
        for fold_records in results:
            for rec in fold_records:
                cell = cells[(ds.name, rec["method"], rec["family"])]
                if "error" in rec:
                    cell.errors.append(rec["error"])
                    continue
                for metric in _METRICS:
                    getattr(cell, metric).append(rec[metric])
                cell.runtime.append(rec["runtime"])
                cell.chosen.append(rec["chosen"])
        if progress is not None:
            progress(f"{ds.name}: {cfg.repeats * cfg.folds} fold evaluations done")
    return ExperimentReport(config=cfg, cells=cells)


# ---------------------------------------------------------------------------
# table emission

_NUM_FMT = "{:.4f}"


def _format_value(v: float) -> str:
    return _NUM_FMT.format(v) if np.isfinite(v) else "failed"


def emit_report(report: ExperimentReport, fmt: str, out_dir) -> list:
    """One table per metric x kernel family, plus a runtime table per
    family.  Markdown marks the best method per dataset row in bold; CSV
    appends a best=<method> column.  Both carry identical number strings."""
    if fmt not in ("md", "csv"):
        raise ConfigError(f"unknown report format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    methods = list(report.config.methods)
    names = report._dataset_names()
    written = []
    for family in report.config.families:
        for metric in _METRICS:
            rows = []
            for ds_name in names:
                means = {m: report.cells[(ds_name, m, family)].mean(metric)
                         for m in methods if (ds_name, m, family) in report.cells}
                rows.append((ds_name, means))
            wins = report.win_counts(family, metric)
            path = out / f"{metric}_{family}.{fmt}"
            _write_table(path, fmt, metric, family, methods, rows, wins)
            written.append(path)
        runtime_rows = []
        for ds_name in names:
            means = {m: report.cells[(ds_name, m, family)].mean("runtime")
                     for m in methods if (ds_name, m, family) in report.cells}
            runtime_rows.append((ds_name, means))
        path = out / f"runtime_{family}.{fmt}"
        _write_table(path, fmt, "runtime", family, methods, runtime_rows, None)
        written.append(path)
    return written


def _write_table(path, fmt, metric, family, methods, rows, wins) -> None:
    lines = []
    if fmt == "md":
        lines.append(f"# {metric} ({family} kernel)")
        lines.append("")
        lines.append("| dataset | " + " | ".join(methods) + " |")
        lines.append("|---" * (len(methods) + 1) + "|")
    else:
        lines.append("dataset," + ",".join(methods) + ",best")
    for ds_name, means in rows:
        finite = {m: v for m, v in means.items() if np.isfinite(v)}
        best_value = max(finite.values()) if finite and wins is not None else None
        cells = []
        best_method = ""
        for m in methods:
            v = means.get(m, float("nan"))
            text = _format_value(v)
            if best_value is not None and np.isfinite(v) and v == best_value:
                if not best_method:
                    best_method = m
                if fmt == "md":
                    text = f"**{text}**"
            cells.append(text)
        if fmt == "md":
            lines.append(f"| {ds_name} | " + " | ".join(cells) + " |")
        else:
            lines.append(f"{ds_name}," + ",".join(cells) + f",{best_method}")
    if wins is not None:
        n = len(rows)
        win_cells = [f"{wins.get(m, 0)}/{n}" for m in methods]
        if fmt == "md":
            lines.append("| wins | " + " | ".join(win_cells) + " |")
        else:
            lines.append("wins," + ",".join(win_cells) + ",")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# config files: flat key=value lines, # comments

_LIST_KEYS = {"datasets", "methods"}
_FLOAT_LIST_KEYS = {"c_grid", "rbf_gammas"}
_INT_LIST_KEYS = {"poly_degrees"}
_INT_KEYS = {"folds", "repeats", "inner_folds", "smote_k", "seed"}
_FLOAT_KEYS = {"cell_budget"}


def parse_config_file(path) -> ExperimentConfig:
    """Read a flat key=value config.  Lists are comma separated; unknown
    keys are errors so typos cannot silently fall back to defaults."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    kwargs: dict = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not eq:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        try:
            if key in _LIST_KEYS:
                kwargs[key] = tuple(v.strip() for v in value.split(",") if v.strip())
            elif key in _FLOAT_LIST_KEYS:
                kwargs[key] = tuple(float(v) for v in value.split(",") if v.strip())
            elif key in _INT_LIST_KEYS:
                kwargs[key] = tuple(int(v) for v in value.split(",") if v.strip())
            elif key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            else:
                raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    if "datasets" not in kwargs:
        raise ConfigError("config must set datasets=")
    return ExperimentConfig(**kwargs)
