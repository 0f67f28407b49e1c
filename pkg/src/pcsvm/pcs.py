"""Cluster-probability derivation of the minority penalty, end to end.

Pipeline: train an equal-penalty baseline, pick a witness triple from its
support vectors (a missed positive A, its most similar hit positive B, and
B's most similar other hit positive C), evaluate the fitted cross-cluster
density at W[A,B] and the within-minority density at W[B,C], turn those
into a lower bound on the positive-class penalty, then retrain with that
penalty against a unit negative penalty.

If the baseline already classifies every positive support vector correctly
there is nothing to fix and the baseline is returned unchanged.  If the
bound is infeasible, the penalty falls back to the imbalance-ratio rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blockmodel import BlockModelHyper, BlockModelPosterior, fit_blockmodel, pair_density
from .data import Dataset, imbalance_ratio
from .kernels import Kernel, gram_matrix, similarity_matrix
from .resampling import ResamplePlan, smote
from .svm import SvmModel, SvmParams, train_smo

__all__ = [
    "CPOS_CAP",
    "CPosResult",
    "InsufficientPositiveSupport",
    "NoAdjustmentNeeded",
    "PcsResult",
    "TriplePick",
    "compute_cpos",
    "select_triple",
    "train_pcs",
    "train_pcs_smote",
]

CPOS_CAP = 1e6


class NoAdjustmentNeeded(Exception):
    """Baseline has no misclassified positive support vector."""


class InsufficientPositiveSupport(Exception):
    """Fewer than two correctly classified positive support vectors."""


@dataclass(frozen=True)
class TriplePick:
    """Support-vector triple anchoring the penalty derivation.

    a: the worst misclassified positive (false negative); b: the hit
    positive most similar to a; c: the hit positive most similar to b,
    distinct from both.  k_ab and k_bc are their similarity values.
    """

    a: int
    b: int
    c: int
    k_ab: float
    k_bc: float

    def __post_init__(self):
        if len({self.a, self.b, self.c}) != 3:
            raise ValueError("triple indices must be pairwise distinct")


@dataclass(frozen=True)
class CPosResult:
    """Derived positive-class penalty plus its inputs.

    fallback_used marks an infeasible bound (or an unformable triple, in
    which case the densities are NaN) resolved by the imbalance-ratio
    penalty instead.
    """

    c_pos: float
    p_ab: float
    p_bc: float
    k_scale: float
    fallback_used: bool

    def __post_init__(self):
        if not self.c_pos > 0:
            raise ValueError("c_pos must be positive")
        for name in ("p_ab", "p_bc"):
            v = getattr(self, name)
            if not math.isnan(v) and v < 0:
                raise ValueError(f"{name} must be nonnegative (or NaN when no triple)")


@dataclass(frozen=True)
class PcsResult:
    """Final model plus every intermediate the pipeline produced.

    triple, cpos, and posterior are None on the no-adjustment path, where
    model is the baseline object itself.
    """

    model: SvmModel
    baseline: SvmModel
    triple: TriplePick | None
    cpos: CPosResult | None
    posterior: BlockModelPosterior | None

    @property
    def adjusted(self) -> bool:
        return self.triple is not None or self.cpos is not None

    @property
    def fallback_used(self) -> bool:
        return self.cpos is not None and self.cpos.fallback_used

    def diagnostics(self) -> dict:
        d: dict = {"adjusted": self.adjusted, "fallback_used": self.fallback_used}
        if self.triple is not None:
            d.update(a=self.triple.a, b=self.triple.b, c=self.triple.c,
                     k_ab=self.triple.k_ab, k_bc=self.triple.k_bc)
        if self.cpos is not None:
            d.update(c_pos=self.cpos.c_pos, p_ab=self.cpos.p_ab,
                     p_bc=self.cpos.p_bc, k_scale=self.cpos.k_scale)
        return d


def select_triple(model: SvmModel, ds: Dataset, w: np.ndarray) -> TriplePick:
    """Pick (a, b, c) from the baseline's support vectors.

    a is the false-negative support vector with the lowest decision value;
    b maximizes W[a, .] over hit positive support vectors; c maximizes
    W[b, .] over the remaining hit positives.  Ties break to the lower
    index via argmax.
    """
    w = np.asarray(w)
    if w.shape != (ds.n, ds.n):
        raise ValueError("similarity matrix shape does not match dataset")
    dv = model.decision_function(ds.features)
    sv = model.alphas > model.params.alpha_eps
    positive = ds.labels == 1
    fn = sv & positive & (dv < 0.0)
    tp = sv & positive & (dv >= 0.0)
    if not np.any(fn):
        raise NoAdjustmentNeeded("no misclassified positive support vector")
    if int(np.sum(tp)) < 2:
        raise InsufficientPositiveSupport(
            f"need >= 2 correctly classified positive support vectors, "
            f"have {int(np.sum(tp))}")
    fn_idx = np.flatnonzero(fn)
    a = int(fn_idx[np.argmin(dv[fn_idx])])
    row = np.where(tp, w[a], -np.inf)
    row[a] = -np.inf
    b = int(np.argmax(row))
    row = np.where(tp, w[b], -np.inf)
    row[a] = -np.inf
    row[b] = -np.inf
    c = int(np.argmax(row))
    return TriplePick(a=a, b=b, c=c, k_ab=float(w[a, b]), k_bc=float(w[b, c]))


def compute_cpos(k_ab: float, p_ab: float, p_bc: float, k_scale: float = 1.0,
                 fallback_ratio: float = 1.0, slack: float = 0.05) -> CPosResult:
    """Positive-class penalty from the similarity k_ab and the two block
    densities.

    The bound is p_ab / D with D = 4*k_ab*(p_ab - k_scale*p_bc) - p_ab;
    the returned penalty exceeds it by the slack fraction.  A non-positive
    D (or bound) has no usable solution, so the imbalance-ratio fallback
    is returned instead.  Values are capped at 1e6 to keep the retrain QP
    well conditioned.
    """
    if not 0.0 < k_ab < 1.0:
        raise ValueError("k_ab must lie in (0, 1)")
    if not p_ab > 0 or not p_bc > 0:
        raise ValueError("densities p_ab and p_bc must be positive")
    if not fallback_ratio > 0:
        raise ValueError("fallback_ratio must be positive")
    denom = 4.0 * k_ab * (p_ab - k_scale * p_bc) - p_ab
    if denom > 0.0 and p_ab / denom > 0.0:
        c_pos = min((1.0 + slack) * p_ab / denom, CPOS_CAP)
        return CPosResult(c_pos=c_pos, p_ab=p_ab, p_bc=p_bc,
                          k_scale=k_scale, fallback_used=False)
    return CPosResult(c_pos=min(fallback_ratio, CPOS_CAP), p_ab=p_ab, p_bc=p_bc,
                      k_scale=k_scale, fallback_used=True)


def train_pcs(ds: Dataset, kernel: Kernel, base_c: float = 1.0,
              hyper: BlockModelHyper | None = None, seed: int = 0, *,
              k_scale: float = 1.0, backend: str | None = None,
              kkt_tol: float = 1e-3, alpha_eps: float = 1e-8) -> PcsResult:
    """Full pipeline; deterministic for fixed inputs and seed."""
    gram = gram_matrix(kernel, ds.features)
    base_params = SvmParams(kernel=kernel, c_pos=base_c, c_neg=base_c,
                            kkt_tol=kkt_tol, alpha_eps=alpha_eps)
    baseline = train_smo(ds, base_params, gram=gram, backend=backend)
    w = similarity_matrix(kernel, ds.features, gram=gram)
    fallback_ratio = base_c * imbalance_ratio(ds)
    try:
        triple = select_triple(baseline, ds, w)
    except NoAdjustmentNeeded:
        return PcsResult(model=baseline, baseline=baseline,
                         triple=None, cpos=None, posterior=None)
    except InsufficientPositiveSupport:
        cpos = CPosResult(c_pos=min(fallback_ratio, CPOS_CAP),
                          p_ab=math.nan, p_bc=math.nan,
                          k_scale=k_scale, fallback_used=True)
        final = _retrain(ds, kernel, cpos.c_pos, gram, backend, kkt_tol, alpha_eps)
        return PcsResult(model=final, baseline=baseline,
                         triple=None, cpos=cpos, posterior=None)
    posterior = fit_blockmodel(w, hyper, init_labels=ds.labels, seed=seed)
    # deep-tail pdf values can underflow to 0; floor them so the bound
    # computation stays defined (a 0 density just forces the fallback)
    p_ab = max(pair_density(posterior, triple.k_ab, "cross"), 1e-300)
    p_bc = max(pair_density(posterior, triple.k_bc, "within_minority"), 1e-300)
    cpos = compute_cpos(triple.k_ab, p_ab, p_bc, k_scale=k_scale,
                        fallback_ratio=fallback_ratio)
    final = _retrain(ds, kernel, cpos.c_pos, gram, backend, kkt_tol, alpha_eps)
    return PcsResult(model=final, baseline=baseline, triple=triple,
                     cpos=cpos, posterior=posterior)


def _retrain(ds, kernel, c_pos, gram, backend, kkt_tol, alpha_eps) -> SvmModel:
    # the retrain pins the negative penalty to 1; only C+ carries the fix
    params = SvmParams(kernel=kernel, c_pos=c_pos, c_neg=1.0,
                       kkt_tol=kkt_tol, alpha_eps=alpha_eps)
    return train_smo(ds, params, gram=gram, backend=backend)


def train_pcs_smote(ds: Dataset, kernel: Kernel, base_c: float = 1.0,
                    hyper: BlockModelHyper | None = None, smote_k: int = 5,
                    seed: int = 0, **kwargs) -> PcsResult:
    """SMOTE the positives up to balance, then run the pipeline on the
    rebalanced data.  Already-balanced input passes through untouched."""
    if ds.n_pos < ds.n_neg:
        plan = ResamplePlan(method="smote", seed=seed, target="balanced",
                            k_neighbors=smote_k)
        ds = smote(ds, plan)
    return train_pcs(ds, kernel, base_c=base_c, hyper=hyper, seed=seed, **kwargs)
