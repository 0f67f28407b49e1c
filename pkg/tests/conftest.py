"""Shared generators and helpers for the test suite.

The planted-instance builders here are frozen: several tests assert
exact seed lists and frozen oracle values computed against these exact
constructions, so changing any constant invalidates those expectations.
"""

from pathlib import Path

import numpy as np
import pytest

from pcsvm.data import Dataset
from pcsvm.kernels import Kernel

REPO_ROOT = Path(__file__).resolve().parents[1]
KEEL_DIR = REPO_ROOT / "data" / "keel"

# one line per acceptance criterion, echoed after the run because
# pytest's capture would swallow prints from inside the tests
acceptance_lines: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)

# rbf width used with planted_arc throughout; the genuine-adjustment
# seed list below was measured against exactly this kernel
ARC_KERNEL = Kernel("rbf", gamma=0.10)

# seeds in range(30) where the arc instance yields a usable bound
# (positive denominator) instead of the imbalance-ratio fallback
ARC_GENUINE_SEEDS = (0, 2, 7, 12, 15, 16, 18, 21, 25, 28)


def planted_arc(seed: int) -> Dataset:
    """Imbalanced 2-D instance with a tight majority clump, a minority
    arc at constant distance from it, and one stray minority point
    inside the clump.  The geometry makes cross-cluster similarities
    concentrate while within-minority similarities spread, which is the
    regime where the penalty bound has a positive denominator."""
    rng = np.random.default_rng(seed)
    neg = rng.normal(size=(50, 2)) * 0.15
    theta = np.linspace(-0.61, 0.61, 10)
    arc = 3.0 * np.column_stack([np.cos(theta), np.sin(theta)])
    arc += rng.normal(size=(10, 2)) * 0.03
    stray = rng.normal(size=(1, 2)) * 0.08
    features = np.vstack([neg, arc, stray])
    labels = np.concatenate([-np.ones(50), np.ones(11)]).astype(int)
    return Dataset(features, labels, name=f"arc{seed}")


def planted_blocks(seed: int, n_a: int = 30, n_b: int = 30,
                   within=(8.0, 2.0), cross=(2.0, 8.0)):
    """Two-block similarity matrix with beta-distributed entries;
    returns (w, block_labels)."""
    rng = np.random.default_rng(seed)
    n = n_a + n_b
    labels = np.array([0] * n_a + [1] * n_b)
    w = np.full((n, n), 0.5)
    for i in range(n):
        for j in range(i + 1, n):
            ab = within if labels[i] == labels[j] else cross
            v = float(np.clip(rng.beta(*ab), 1e-4, 1.0 - 1e-4))
            w[i, j] = w[j, i] = v
    return w, labels


def block_agreement(post, labels) -> float:
    """Fraction of nodes on the majority side of the best relabeling."""
    hard = np.argmax(post.responsibilities, axis=1)
    a = float(np.mean(hard == labels))
    return max(a, 1.0 - a)


def random_solver_case(seed: int):
    """Small random training problem cycling through kernel types and
    asymmetric penalty pairs; returns (ds, kernel, c_pos, c_neg)."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 21))
    d = int(rng.integers(2, 4))
    features = rng.normal(size=(n, d))
    labels = np.where(rng.random(n) < 0.5, -1, 1)
    if np.all(labels == labels[0]):
        labels[0] = -labels[0]
    features[labels == 1] += 0.75
    kernel = (Kernel("linear"),
              Kernel("rbf", gamma=0.7),
              Kernel("poly", degree=2, gamma=0.5, coef0=1.0))[seed % 3]
    c_pos = (1.0, 4.0, 0.5)[seed % 3]
    c_neg = (1.0, 1.0, 2.0)[(seed // 3) % 3]
    return Dataset(features, labels), kernel, c_pos, c_neg


def training_fn_count(model, ds: Dataset) -> int:
    pred = model.predict(ds.features)
    return int(np.sum((ds.labels == 1) & (pred == -1)))


def keel_path(name: str) -> Path:
    return KEEL_DIR / f"{name}.dat"


def require_keel(name: str) -> Path:
    path = keel_path(name)
    if not path.exists():
        pytest.skip(f"KEEL dataset {name} not present under {KEEL_DIR}; "
                    f"run scripts/fetch_keel.py on a networked machine")
    return path
