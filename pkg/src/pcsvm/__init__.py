"""Kernel SVM toolkit for imbalanced binary classification.

Provides a deterministic SMO solver with per-class penalties, a
cluster-similarity procedure that derives the minority penalty from
beta-distribution fits on the kernel matrix, resampling baselines,
imbalance-aware metrics, and a cross-validated benchmark harness.
"""

from .data import (
    Dataset,
    DatasetFormatError,
    FoldPlan,
    Scaler,
    imbalance_ratio,
    load_dataset,
    standardize,
    stratified_kfold,
    synth_imbalanced,
)
from .kernels import Kernel, gram_matrix, kernel_from_spec, similarity_matrix
from .svm import SvmModel, train_dec, train_svm
from .metrics import ConfusionCounts, auc_score, confusion_counts, summarize_scores
from .resampling import ResamplePlan, random_oversample, random_undersample, smote
from .blockmodel import BlockModelPosterior, fit_blockmodel
from .pcs import (
    CPosResult,
    PcsResult,
    compute_cpos,
    select_triple,
    train_pcs,
    train_pcs_smote,
)
from .harness import ExperimentConfig, run_experiment

__version__ = "0.1.0"

__all__ = [
    "BlockModelPosterior",
    "CPosResult",
    "ConfusionCounts",
    "Dataset",
    "DatasetFormatError",
    "ExperimentConfig",
    "FoldPlan",
    "Kernel",
    "PcsResult",
    "ResamplePlan",
    "Scaler",
    "SvmModel",
    "auc_score",
    "compute_cpos",
    "confusion_counts",
    "fit_blockmodel",
    "gram_matrix",
    "imbalance_ratio",
    "kernel_from_spec",
    "load_dataset",
    "random_oversample",
    "random_undersample",
    "run_experiment",
    "select_triple",
    "similarity_matrix",
    "smote",
    "standardize",
    "stratified_kfold",
    "summarize_scores",
    "synth_imbalanced",
    "train_dec",
    "train_pcs",
    "train_pcs_smote",
    "train_svm",
    "__version__",
]
