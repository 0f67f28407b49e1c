"""Kernel evaluation, Gram matrices, and the (0, 1)-valued similarity matrix.

The similarity matrix feeds a beta-distribution block model, so every entry
must lie strictly inside (0, 1).  RBF Gram entries are already in (0, 1] and
are only clamped; other kernels are cosine-normalized into [-1, 1] first and
then mapped affinely onto (0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Kernel",
    "SIMILARITY_EPS",
    "gram_matrix",
    "kernel_from_spec",
    "similarity_matrix",
]

SIMILARITY_EPS = 1e-3


@dataclass(frozen=True)
class Kernel:
    """Kernel function description.

    kind: "linear", "poly", or "rbf".
    poly computes (gamma * x.y + coef0) ** degree, rbf computes
    exp(-gamma * ||x - y||^2).
    """

    kind: str
    degree: int = 3
    gamma: float = 1.0
    coef0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "poly", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "poly" and self.degree < 1:
            raise ValueError("polynomial degree must be >= 1")
        if self.kind in ("poly", "rbf") and not self.gamma > 0:
            raise ValueError("gamma must be > 0")

    def __call__(self, x: np.ndarray, y: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "linear":
            return float(x @ y)
        if self.kind == "poly":
            return float((self.gamma * (x @ y) + self.coef0) ** self.degree)
        diff = x - y
        return float(np.exp(-self.gamma * (diff @ diff)))

    def spec_string(self) -> str:
        if self.kind == "linear":
            return "linear"
        if self.kind == "poly":
            return f"poly:degree={self.degree},gamma={self.gamma:g},coef0={self.coef0:g}"
        return f"rbf:gamma={self.gamma:g}"


def kernel_from_spec(spec: str) -> Kernel:
    """Parse a kernel spec string.

    Accepted forms: "linear", "poly:degree=3,gamma=1,coef0=1" (all
    parameters optional, "polynomial" also accepted), "rbf:gamma=0.5".
    """
    spec = spec.strip()
    kind, _, params = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "polynomial":
        kind = "poly"
    kwargs: dict = {}
    if params.strip():
        for item in params.split(","):
            key, eq, value = item.partition("=")
            key = key.strip().lower()
            if not eq or not value.strip():
                raise ValueError(f"malformed kernel parameter {item!r} in {spec!r}")
            if key in ("degree", "d"):
                kwargs["degree"] = int(value)
            elif key in ("gamma", "g"):
                kwargs["gamma"] = float(value)
            elif key in ("coef0", "c0"):
                kwargs["coef0"] = float(value)
            else:
                raise ValueError(f"unknown kernel parameter {key!r} in {spec!r}")
    if kind == "linear" and kwargs:
        raise ValueError("linear kernel takes no parameters")
    if kind == "rbf" and "degree" in kwargs:
        raise ValueError("rbf kernel has no degree parameter")
    return Kernel(kind=kind, **kwargs)


def gram_matrix(kernel: Kernel, x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    """Dense kernel matrix K[i, j] = k(x_i, y_j).

    With y omitted the result is made exactly symmetric by mirroring the
    upper triangle, and the rbf diagonal is pinned to exactly 1.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    symmetric = y is None
    y = x if symmetric else np.ascontiguousarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise ValueError("inputs must be 2-D with matching feature counts")
    inner = x @ y.T
    with np.errstate(over="ignore"):  # overflow becomes an explicit error below
        if kernel.kind == "linear":
            k = inner
        elif kernel.kind == "poly":
            k = (kernel.gamma * inner + kernel.coef0) ** kernel.degree
        else:
            sq = (np.sum(x * x, axis=1)[:, None] - 2.0 * inner
                  + np.sum(y * y, axis=1)[None, :])
            np.maximum(sq, 0.0, out=sq)
            k = np.exp(-kernel.gamma * sq)
    if not np.all(np.isfinite(k)):
        raise FloatingPointError(
            f"kernel matrix overflow for {kernel.spec_string()}; rescale features")
    if symmetric:
        iu = np.triu_indices(k.shape[0], 1)
        k[(iu[1], iu[0])] = k[iu]
        if kernel.kind == "rbf":
            np.fill_diagonal(k, 1.0)
    return k


def similarity_matrix(kernel: Kernel, x: np.ndarray, *,
                      eps: float = SIMILARITY_EPS,
                      gram: np.ndarray | None = None) -> np.ndarray:
    """Symmetric similarity matrix with every entry in the open (0, 1).

    RBF values are clamped into [eps, 1-eps] directly.  Other kernels are
    cosine-normalized, shifted from [-1, 1] onto [0, 1], then clamped.
    Pass a precomputed ``gram`` to skip recomputation.
    """
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 0.5)")
    k = gram_matrix(kernel, x) if gram is None else np.asarray(gram, dtype=np.float64)
    if kernel.kind == "rbf":
        return np.clip(k, eps, 1.0 - eps)
    diag = np.diag(k).copy()
    if np.any(diag <= 0.0):
        bad = int(np.flatnonzero(diag <= 0.0)[0])
        raise ValueError(f"non-positive Gram diagonal at index {bad}; "
                         "cannot cosine-normalize")
    norm = np.sqrt(diag)
    s = k / np.outer(norm, norm)
    w = np.clip((s + 1.0) / 2.0, eps, 1.0 - eps)
    return (w + w.T) / 2.0
