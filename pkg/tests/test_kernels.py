import math

import numpy as np
import pytest

from pcsvm.kernels import (SIMILARITY_EPS, Kernel, gram_matrix,
                           kernel_from_spec, similarity_matrix)


def test_single_evaluations():
    assert Kernel("rbf", gamma=2.0)(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 1.0
    assert Kernel("linear")(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
    x = np.array([1.0, 1.0])
    assert Kernel("poly", degree=2, gamma=1.0, coef0=1.0)(x, x) == 9.0


def test_kernel_validation():
    with pytest.raises(ValueError, match="kind"):
        Kernel("sigmoid")
    with pytest.raises(ValueError, match="degree"):
        Kernel("poly", degree=0)
    with pytest.raises(ValueError, match="gamma"):
        Kernel("rbf", gamma=0.0)


def test_pairwise_evaluation_oracle():
    # gram entries must match direct scalar evaluation done independently
    rng = np.random.default_rng(0)
    x = rng.normal(size=(10, 4))
    kernels = [Kernel("linear"), Kernel("poly", degree=3, gamma=0.5, coef0=1.0),
               Kernel("rbf", gamma=0.8)]
    for kernel in kernels:
        k = gram_matrix(kernel, x)
        for _ in range(10):
            i, j = rng.integers(0, 10, size=2)
            dot = sum(x[i, t] * x[j, t] for t in range(4))
            if kernel.kind == "linear":
                direct = dot
            elif kernel.kind == "poly":
                direct = (kernel.gamma * dot + kernel.coef0) ** kernel.degree
            else:
                sq = sum((x[i, t] - x[j, t]) ** 2 for t in range(4))
                direct = math.exp(-kernel.gamma * sq)
            assert abs(k[i, j] - direct) <= 1e-12 * max(1.0, abs(direct))


def test_gram_exact_symmetry_and_rbf_diagonal():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(40, 5)) * 3.0
    for kernel in (Kernel("linear"), Kernel("poly", degree=2),
                   Kernel("rbf", gamma=0.3)):
        k = gram_matrix(kernel, x)
        assert np.array_equal(k, k.T)
    k = gram_matrix(Kernel("rbf", gamma=0.3), x)
    assert np.all(np.diag(k) == 1.0)


def test_gram_psd_spot_check():
    rng = np.random.default_rng(2)
    for seed in range(5):
        n = int(rng.integers(5, 51))
        x = np.random.default_rng(seed).normal(size=(n, 3))
        for kernel in (Kernel("linear"), Kernel("poly", degree=3, gamma=0.5),
                       Kernel("rbf", gamma=1.0)):
            k = gram_matrix(kernel, x)
            assert np.linalg.eigvalsh(k).min() >= -1e-8 * n


def test_gram_rectangular_matches_square_blocks():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(6, 3))
    y = rng.normal(size=(4, 3))
    kernel = Kernel("rbf", gamma=0.5)
    cross = gram_matrix(kernel, x, y)
    assert cross.shape == (6, 4)
    full = gram_matrix(kernel, np.vstack([x, y]))
    assert np.allclose(cross, full[:6, 6:], atol=1e-12)


def test_gram_overflow_reported():
    x = np.array([[1e60, 0.0], [0.0, 1e60]])
    with pytest.raises(FloatingPointError):
        gram_matrix(Kernel("poly", degree=12, gamma=1.0, coef0=0.0), x)


def test_similarity_rbf_clamps():
    x = np.array([[0.0, 0.0], [0.0, 0.0], [100.0, 100.0]])
    w = similarity_matrix(Kernel("rbf", gamma=1.0), x)
    assert w[0, 1] == 1.0 - SIMILARITY_EPS  # identical points, clamped top
    assert w[0, 2] == SIMILARITY_EPS        # far apart, clamped bottom
    assert np.array_equal(w, w.T)


def test_similarity_cosine_path():
    x = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
    w = similarity_matrix(Kernel("linear"), x)
    assert w[0, 1] == SIMILARITY_EPS            # antiparallel pair
    assert w[0, 2] == pytest.approx(0.5)        # orthogonal pair
    assert np.all((w >= SIMILARITY_EPS) & (w <= 1.0 - SIMILARITY_EPS))


def test_similarity_interior_value_unchanged():
    # two points whose rbf similarity is strictly inside the clamp band
    x = np.array([[0.0, 0.0], [1.0, 0.0]])
    gamma = -math.log(0.37)
    w = similarity_matrix(Kernel("rbf", gamma=gamma), x)
    assert w[0, 1] == pytest.approx(0.37, abs=1e-12)


def test_similarity_rejects_bad_diag_and_eps():
    x = np.array([[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(ValueError, match="diagonal"):
        similarity_matrix(Kernel("linear"), x)
    with pytest.raises(ValueError, match="eps"):
        similarity_matrix(Kernel("rbf", gamma=1.0), x, eps=0.6)


def test_similarity_accepts_precomputed_gram():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(8, 2))
    kernel = Kernel("rbf", gamma=0.4)
    gram = gram_matrix(kernel, x)
    assert np.array_equal(similarity_matrix(kernel, x, gram=gram),
                          similarity_matrix(kernel, x))


def test_spec_string_round_trip():
    for kernel in (Kernel("linear"), Kernel("poly", degree=2, gamma=0.5, coef0=2.0),
                   Kernel("rbf", gamma=0.125)):
        assert kernel_from_spec(kernel.spec_string()) == kernel


def test_kernel_from_spec_forms():
    assert kernel_from_spec("linear") == Kernel("linear")
    assert kernel_from_spec("polynomial:d=2,g=0.5") == Kernel("poly", degree=2, gamma=0.5)
    assert kernel_from_spec("rbf:gamma=0.5") == Kernel("rbf", gamma=0.5)
    with pytest.raises(ValueError, match="no parameters"):
        kernel_from_spec("linear:gamma=1")
    with pytest.raises(ValueError, match="degree"):
        kernel_from_spec("rbf:degree=3")
    with pytest.raises(ValueError, match="unknown kernel parameter"):
        kernel_from_spec("poly:width=2")
    with pytest.raises(ValueError, match="malformed"):
        kernel_from_spec("rbf:gamma")
