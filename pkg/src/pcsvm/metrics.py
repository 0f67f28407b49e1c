"""Evaluation metrics for imbalanced binary classification.

The positive class is always +1.  Accuracy hides minority errors at high
imbalance, so the headline numbers here are sensitivity, specificity,
F-measure, G-mean, and rank-statistic AUC.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "ConfusionCounts",
    "ScoreSet",
    "auc_score",
    "confusion_counts",
    "summarize_scores",
]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ScoreSet:
    """Derived scores plus a flag marking any zero-denominator fallbacks.

    A zero denominator (e.g. no predicted positives for precision) scores 0
    rather than NaN so that averages over folds stay defined;
    ``degenerate`` records that this rule fired.
    """

    sensitivity: float
    specificity: float
    precision: float
    f_measure: float
    g_mean: float
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "precision": self.precision,
            "f_measure": self.f_measure,
            "g_mean": self.g_mean,
        }


def confusion_counts(labels, predictions) -> ConfusionCounts:
    """Tally a confusion matrix with +1 as the positive class."""
    y = np.asarray(labels)
    p = np.asarray(predictions)
    if y.shape != p.shape or y.ndim != 1:
        raise ValueError("labels and predictions must be equal-length vectors")
    for arr, what in ((y, "labels"), (p, "predictions")):
        if not np.isin(arr, (-1, 1)).all():
            raise ValueError(f"{what} must contain only +1 and -1")
    pos = y == 1
    hit = p == y
    return ConfusionCounts(
        tp=int(np.sum(pos & hit)),
        fp=int(np.sum(~pos & ~hit)),
        tn=int(np.sum(~pos & hit)),
        fn=int(np.sum(pos & ~hit)),
    )


def _ratio(num: int, den: int) -> tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


def summarize_scores(c: ConfusionCounts) -> ScoreSet:
    """Sensitivity, specificity, precision, F-measure (beta=1), G-mean."""
    sens, d1 = _ratio(c.tp, c.tp + c.fn)
    spec, d2 = _ratio(c.tn, c.tn + c.fp)
    prec, d3 = _ratio(c.tp, c.tp + c.fp)
    if prec + sens > 0.0:
        f, d4 = 2.0 * prec * sens / (prec + sens), False
    else:
        f, d4 = 0.0, True
    return ScoreSet(
        sensitivity=sens,
        specificity=spec,
        precision=prec,
        f_measure=f,
        g_mean=float(np.sqrt(sens * spec)),
        degenerate=d1 or d2 or d3 or d4,
    )


def auc_score(labels, decision_values) -> float:
    """Mann-Whitney rank AUC; tied decision values earn half credit."""
    y = np.asarray(labels)
    v = np.asarray(decision_values, dtype=np.float64)
    if y.shape != v.shape or y.ndim != 1:
        raise ValueError("labels and decision_values must be equal-length vectors")
    if not np.isin(y, (-1, 1)).all():
        raise ValueError("labels must contain only +1 and -1")
    n_pos = int(np.sum(y == 1))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(v)
    rank_sum_pos = float(np.sum(ranks[y == 1]))
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)
