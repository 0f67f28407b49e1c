"""Class-rebalancing preprocessors: random undersampling, random
oversampling, and SMOTE interpolation.

All three are deterministic per seed and are meant for training folds only;
evaluating on resampled data would misstate every imbalance metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset

__all__ = [
    "ResamplePlan",
    "random_oversample",
    "random_undersample",
    "resample",
    "smote",
]


@dataclass(frozen=True)
class ResamplePlan:
    """Target class counts for a resampling pass.

    target is "balanced" (both classes brought to the applicable count) or
    a {"pos": int, "neg": int} mapping.  Undersampling only shrinks the
    negative class; oversampling methods only grow the positive class.
    """

    method: str
    seed: int = 0
    target: object = "balanced"
    k_neighbors: int = 5

    def __post_init__(self):
        if self.method not in ("rus", "ros", "smote"):
            raise ValueError(f"unknown resampling method {self.method!r}")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.target != "balanced":
            if not isinstance(self.target, dict) or set(self.target) - {"pos", "neg"}:
                raise ValueError('target must be "balanced" or {"pos": n, "neg": n}')
            if any(v < 1 for v in self.target.values()):
                raise ValueError("explicit class targets must be >= 1")

    def resolve(self, n_pos: int, n_neg: int) -> tuple[int, int]:
        """Concrete (target_pos, target_neg) for a dataset's counts."""
        if self.target == "balanced":
            if self.method == "rus":
                return n_pos, n_pos
            return n_neg, n_neg
        return (int(self.target.get("pos", n_pos)),
                int(self.target.get("neg", n_neg)))


def _split_classes(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    return np.flatnonzero(ds.labels == 1), np.flatnonzero(ds.labels == -1)


def random_undersample(ds: Dataset, plan: ResamplePlan) -> Dataset:
    """Drop random negative rows until the negative count hits the target."""
    pos_idx, neg_idx = _split_classes(ds)
    target_pos, target_neg = plan.resolve(pos_idx.size, neg_idx.size)
    if target_pos != pos_idx.size:
        raise ValueError("undersampling does not change the positive class")
    if target_neg > neg_idx.size:
        raise ValueError(
            f"cannot undersample negatives to {target_neg}: only {neg_idx.size} present")
    if target_neg == neg_idx.size:
        return ds
    rng = np.random.default_rng(plan.seed)
    keep_neg = rng.choice(neg_idx, size=target_neg, replace=False)
    keep = np.sort(np.concatenate([pos_idx, keep_neg]))
    return ds.subset(keep)


def random_oversample(ds: Dataset, plan: ResamplePlan) -> Dataset:
    """Duplicate random positive rows (with replacement) up to the target."""
    pos_idx, neg_idx = _split_classes(ds)
    target_pos, target_neg = plan.resolve(pos_idx.size, neg_idx.size)
    if target_neg != neg_idx.size:
        raise ValueError("oversampling does not change the negative class")
    if target_pos < pos_idx.size:
        raise ValueError(
            f"oversampling target {target_pos} below current positive count {pos_idx.size}")
    extra = target_pos - pos_idx.size
    if extra == 0:
        return ds
    rng = np.random.default_rng(plan.seed)
    dup = rng.choice(pos_idx, size=extra, replace=True)
    features = np.vstack([ds.features, ds.features[dup]])
    labels = np.concatenate([ds.labels, np.ones(extra, dtype=np.int64)])
    return Dataset(features, labels, name=ds.name, attribute_names=ds.attribute_names)


def _minority_neighbors(pos_features: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest minority neighbors of each minority point.

    Self always excluded; distance ties go to the lower index (stable sort
    on distances keeps index order within equal keys).
    """
    diff = pos_features[:, None, :] - pos_features[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(dist2, np.inf)
    order = np.argsort(dist2, axis=1, kind="stable")
    return order[:, :k]


def smote(ds: Dataset, plan: ResamplePlan) -> Dataset:
    """Synthesize positives by interpolating toward nearest minority
    neighbors: x_i + delta * (x_nn - x_i), delta uniform in [0, 1]."""
    pos_idx, neg_idx = _split_classes(ds)
    target_pos, target_neg = plan.resolve(pos_idx.size, neg_idx.size)
    if target_neg != neg_idx.size:
        raise ValueError("oversampling does not change the negative class")
    if target_pos < pos_idx.size:
        raise ValueError(
            f"oversampling target {target_pos} below current positive count {pos_idx.size}")
    if pos_idx.size <= plan.k_neighbors:
        raise ValueError(
            f"SMOTE needs more than k_neighbors={plan.k_neighbors} minority rows, "
            f"have {pos_idx.size}; lower k_neighbors")
    extra = target_pos - pos_idx.size
    if extra == 0:
        return ds
    rng = np.random.default_rng(plan.seed)
    pos_features = ds.features[pos_idx]
    neighbors = _minority_neighbors(pos_features, plan.k_neighbors)
    # Cycle base points so synthesis spreads evenly across the minority set.
    base = np.arange(extra) % pos_idx.size
    pick = rng.integers(0, plan.k_neighbors, size=extra)
    delta = rng.uniform(0.0, 1.0, size=extra)
    anchor = pos_features[base]
    partner = pos_features[neighbors[base, pick]]
    synthetic = anchor + delta[:, None] * (partner - anchor)
    features = np.vstack([ds.features, synthetic])
    labels = np.concatenate([ds.labels, np.ones(extra, dtype=np.int64)])
    return Dataset(features, labels, name=ds.name, attribute_names=ds.attribute_names)


def resample(ds: Dataset, plan: ResamplePlan) -> Dataset:
    """Dispatch on plan.method."""
    if plan.method == "rus":
        return random_undersample(ds, plan)
    if plan.method == "ros":
        return random_oversample(ds, plan)
    return smote(ds, plan)
