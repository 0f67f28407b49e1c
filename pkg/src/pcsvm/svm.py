"""Soft-margin kernel SVM with per-class penalties, trained by SMO.

Two interchangeable solver backends exist: a compiled extension and a pure
NumPy implementation.  The compiled one is picked at import when available;
set PCSVM_FORCE_PY_SMO=1 to force the fallback.  Both walk identical update
trajectories, so results differ at most by float-level noise.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, imbalance_ratio
from .kernels import Kernel, gram_matrix, kernel_from_spec

if os.environ.get("PCSVM_FORCE_PY_SMO"):
    from . import _smo_py as _default_backend
    _COMPILED_AVAILABLE = False
else:
    try:
        from . import _smo as _default_backend
        _COMPILED_AVAILABLE = True
    except ImportError:
        from . import _smo_py as _default_backend
        _COMPILED_AVAILABLE = False

from . import _smo_py

__all__ = [
    "SvmModel",
    "SvmParams",
    "adjusted_eta",
    "backend_name",
    "dual_objective",
    "load_model",
    "max_kkt_violation",
    "primal_objective",
    "save_model",
    "train_dec",
    "train_smo",
    "train_svm",
]


def backend_name() -> str:
    """Active solver backend: "compiled" or "python"."""
    return "compiled" if _default_backend is not _smo_py else "python"


def adjusted_eta(k11: float, k22: float, k12: float, c_pos: float) -> float:
    """Pair-update curvature with the squared-slack penalty folded into the
    kernel: k11 + k22 - 2*(k12 - 1/(4*c_pos) - 1/4).

    Always exceeds the plain curvature k11 + k22 - 2*k12 by
    1/(2*c_pos) + 1/2, so the same error gap yields a smaller alpha step.
    """
    if not c_pos > 0:
        raise ValueError("c_pos must be > 0")
    return k11 + k22 - 2.0 * (k12 - 1.0 / (4.0 * c_pos) - 0.25)


@dataclass(frozen=True)
class SvmParams:
    """Training hyperparameters.

    c_pos and c_neg are the box bounds for positive and negative alphas.
    max_updates caps accepted pair updates; None means 100 * n.
    """

    kernel: Kernel
    c_pos: float = 1.0
    c_neg: float = 1.0
    kkt_tol: float = 1e-3
    alpha_eps: float = 1e-8
    max_updates: int | None = None

    def __post_init__(self):
        for name in ("c_pos", "c_neg", "kkt_tol", "alpha_eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.max_updates is not None and self.max_updates < 1:
            raise ValueError("max_updates must be >= 1 when given")


@dataclass
class SvmModel:
    """Trained model: dual coefficients plus the training rows they weight.

    decision values are sum_i alphas[i]*labels[i]*k(x_i, x) + bias; rows
    with alphas below params.alpha_eps contribute nothing and are dropped
    on serialization.
    """

    alphas: np.ndarray
    bias: float
    params: SvmParams
    features: np.ndarray
    labels: np.ndarray
    converged: bool = True
    n_updates: int = 0

    @property
    def support_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alphas > self.params.alpha_eps)

    @property
    def n_support(self) -> int:
        return int(self.support_indices.size)

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        sv = self.support_indices
        if sv.size == 0:
            return np.full(x.shape[0], self.bias)
        k = gram_matrix(self.params.kernel, self.features[sv], x)
        return (self.alphas[sv] * self.labels[sv]) @ k + self.bias

    def decision_value(self, x) -> float:
        return float(self.decision_function(np.atleast_2d(x))[0])

    def predict(self, x: np.ndarray) -> np.ndarray:
        dv = self.decision_function(x)
        return np.where(dv >= 0.0, 1, -1).astype(np.int64)


def _class_boxes(labels: np.ndarray, params: SvmParams) -> np.ndarray:
    return np.where(labels == 1, params.c_pos, params.c_neg)


def train_smo(ds: Dataset, params: SvmParams, *, gram: np.ndarray | None = None,
              backend: str | None = None,
              objective_trace: list | None = None) -> SvmModel:
    """Train by SMO under per-class box constraints.

    Accepts a precomputed symmetric Gram matrix over ds.features.  backend
    picks the solver explicitly ("compiled" or "python"); objective tracing
    is only available from the python backend.  Non-convergence within the
    update budget returns the best-so-far model and warns.
    """
    if ds.n_pos == 0 or ds.n_neg == 0:
        raise ValueError("training requires both classes present")
    k = gram_matrix(params.kernel, ds.features) if gram is None else \
        np.ascontiguousarray(gram, dtype=np.float64)
    if k.shape != (ds.n, ds.n):
        raise ValueError("gram matrix shape does not match dataset")
    box = _class_boxes(ds.labels, params)
    max_updates = params.max_updates if params.max_updates is not None else 100 * ds.n
    y = ds.labels.astype(np.float64)
    if objective_trace is not None and backend is None:
        backend = "python"
    if backend is None:
        solver = _default_backend
    elif backend == "python":
        solver = _smo_py
    elif backend == "compiled":
        if not _COMPILED_AVAILABLE:
            raise RuntimeError("compiled solver backend is not available")
        from . import _smo as solver
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if solver is _smo_py:
        alphas, _, n_updates, converged = solver.smo_solve(
            k, y, box, params.kkt_tol, params.alpha_eps, max_updates,
            objective_trace=objective_trace)
    else:
        if objective_trace is not None:
            raise ValueError("objective_trace requires the python backend")
        alphas, _, n_updates, converged = solver.smo_solve(
            k, y, box, params.kkt_tol, params.alpha_eps, max_updates)
    bias = _recompute_bias(alphas, y, box, k, params.alpha_eps)
    if not converged:
        warnings.warn(
            f"SMO stopped after {n_updates} updates without meeting the KKT "
            f"tolerance {params.kkt_tol}; returning best-so-far model",
            RuntimeWarning, stacklevel=2)
    return SvmModel(alphas=alphas, bias=float(bias), params=params,
                    features=ds.features, labels=ds.labels,
                    converged=bool(converged), n_updates=int(n_updates))


def _recompute_bias(alphas, y, box, k, alpha_eps) -> float:
    """Bias minimizing the largest per-point optimality violation.

    Each point's violation is a one-sided (or, for free support vectors,
    two-sided) hinge in b, so the worst case is minimized exactly at the
    midpoint of the tightest opposing margin targets.  The running bias
    at termination already keeps every violation within tolerance, so
    the minimax choice can only do better; flat optima resolve to the
    midpoint of the feasible interval.
    """
    u = k @ (alphas * y)
    target = y - u  # b making each point sit exactly on its margin
    at_zero = alphas <= alpha_eps
    at_box = alphas >= box - alpha_eps
    free = ~at_zero & ~at_box
    pos = y > 0
    # each point's violation is a hinge in b: points whose margin must
    # stay >= 1 force b toward their target from below, points capped at
    # <= 1 force it from above, free vectors pull both ways; the exact
    # minimax solution is the midpoint of the two tightest targets
    floor_side = free | (at_zero & pos) | (at_box & ~pos)
    ceil_side = free | (at_zero & ~pos) | (at_box & pos)
    if not floor_side.any() and not ceil_side.any():
        return 0.0
    if not floor_side.any():
        return float(np.min(target[ceil_side]))
    if not ceil_side.any():
        return float(np.max(target[floor_side]))
    return float(0.5 * (np.max(target[floor_side]) + np.min(target[ceil_side])))


def train_svm(ds: Dataset, c: float, kernel: Kernel, **kwargs) -> SvmModel:
    """Plain single-penalty SVM: both classes share the box bound c."""
    return train_smo(ds, SvmParams(kernel=kernel, c_pos=c, c_neg=c), **kwargs)


def train_dec(ds: Dataset, base_c: float, kernel: Kernel, **kwargs) -> SvmModel:
    """Cost-sensitive SVM with the penalty ratio tied to class imbalance:
    c_pos = base_c * (n_neg / n_pos), c_neg = base_c."""
    ir = imbalance_ratio(ds)
    params = SvmParams(kernel=kernel, c_pos=base_c * ir, c_neg=base_c)
    return train_smo(ds, params, **kwargs)


def dual_objective(model: SvmModel, gram: np.ndarray | None = None) -> float:
    """sum(a) - 0.5 * (a*y)' K (a*y) over the training set."""
    k = gram_matrix(model.params.kernel, model.features) if gram is None else gram
    v = model.alphas * model.labels
    return float(np.sum(model.alphas) - 0.5 * v @ k @ v)


def primal_objective(model: SvmModel, gram: np.ndarray | None = None) -> float:
    """0.5*||w||^2 + c_pos*sum(pos hinge) + c_neg*sum(neg hinge) at the
    model's (w, b), with hinge xi_i = max(0, 1 - y_i f(x_i))."""
    k = gram_matrix(model.params.kernel, model.features) if gram is None else gram
    v = model.alphas * model.labels
    u = k @ v
    xi = np.maximum(0.0, 1.0 - model.labels * (u + model.bias))
    pos = model.labels == 1
    return float(0.5 * v @ u
                 + model.params.c_pos * np.sum(xi[pos])
                 + model.params.c_neg * np.sum(xi[~pos]))


def max_kkt_violation(model: SvmModel, gram: np.ndarray | None = None) -> float:
    """Largest violation of the three-case optimality conditions.

    Zero alphas need margin >= 1, boxed alphas margin <= 1, and free
    alphas margin == 1; the return value is the worst shortfall.
    """
    k = gram_matrix(model.params.kernel, model.features) if gram is None else gram
    margins = model.labels * (k @ (model.alphas * model.labels) + model.bias)
    eps = model.params.alpha_eps
    box = _class_boxes(model.labels, model.params)
    at_zero = model.alphas <= eps
    at_box = model.alphas >= box - eps
    free = ~at_zero & ~at_box
    worst = 0.0
    if np.any(at_zero):
        worst = max(worst, float(np.max(1.0 - margins[at_zero])))
    if np.any(at_box):
        worst = max(worst, float(np.max(margins[at_box] - 1.0)))
    if np.any(free):
        worst = max(worst, float(np.max(np.abs(margins[free] - 1.0))))
    return worst


_MODEL_MAGIC = "pcsvm-model"
_MODEL_VERSION = 1


def save_model(model: SvmModel, path) -> None:
    """Write a model as versioned plain text.

    Layout: header key/value lines, then one line per support vector
    holding alpha, label, and the feature row.  Floats use repr for exact
    round-tripping.  Non-support rows are dropped; predictions are
    unchanged because their dual weight is (numerically) zero.
    """
    sv = model.support_indices
    p = model.params
    lines = [
        f"{_MODEL_MAGIC} {_MODEL_VERSION}",
        f"kernel {p.kernel.spec_string()}",
        f"c_pos {p.c_pos!r}",
        f"c_neg {p.c_neg!r}",
        f"kkt_tol {p.kkt_tol!r}",
        f"alpha_eps {p.alpha_eps!r}",
        f"max_updates {'none' if p.max_updates is None else p.max_updates}",
        f"converged {int(model.converged)}",
        f"n_updates {model.n_updates}",
        f"bias {float(model.bias)!r}",
        f"n_support {sv.size}",
        f"n_features {model.features.shape[1]}",
    ]
    for i in sv:
        row = " ".join(repr(float(x)) for x in model.features[i])
        lines.append(f"sv {float(model.alphas[i])!r} {int(model.labels[i])} {row}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> SvmModel:
    """Inverse of save_model; the restored model holds support rows only."""
    text = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not text or not text[0].startswith(_MODEL_MAGIC):
        raise ValueError("not a model file")
    version = int(text[0].split()[1])
    if version != _MODEL_VERSION:
        raise ValueError(f"unsupported model format version {version}")
    header: dict = {}
    sv_lines = []
    for line in text[1:]:
        key, _, rest = line.partition(" ")
        if key == "sv":
            sv_lines.append(rest)
        else:
            header[key] = rest
    max_updates = header["max_updates"]
    params = SvmParams(
        kernel=kernel_from_spec(header["kernel"]),
        c_pos=float(header["c_pos"]),
        c_neg=float(header["c_neg"]),
        kkt_tol=float(header["kkt_tol"]),
        alpha_eps=float(header["alpha_eps"]),
        max_updates=None if max_updates == "none" else int(max_updates),
    )
    n_support = int(header["n_support"])
    d = int(header["n_features"])
    if len(sv_lines) != n_support:
        raise ValueError(f"expected {n_support} support rows, found {len(sv_lines)}")
    alphas = np.zeros(n_support)
    labels = np.zeros(n_support, dtype=np.int64)
    features = np.zeros((n_support, d))
    for r, rest in enumerate(sv_lines):
        parts = rest.split()
        if len(parts) != 2 + d:
            raise ValueError(f"support row {r}: expected {2 + d} fields")
        alphas[r] = float(parts[0])
        labels[r] = int(parts[1])
        features[r] = [float(v) for v in parts[2:]]
    return SvmModel(alphas=alphas, bias=float(header["bias"]), params=params,
                    features=features, labels=labels,
                    converged=bool(int(header["converged"])),
                    n_updates=int(header["n_updates"]))
