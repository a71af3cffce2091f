import numpy as np
import pytest
from scipy.linalg import sqrtm

from oracles import dense_gep_oracle, two_pass_covariance
from sparsegep.applications import (LabeledData, cca_pairs, covariance, lda_pair,
                                    pca_pair, scatter_matrices, sir_matrices,
                                    sir_pair, slice_labels)
from sparsegep.errors import InvalidInputError
from sparsegep.linalg import projection_distance, small_gep


def test_pca_pair_examples(rng):
    pair = pca_pair(np.array([[1.0, 0], [-1, 0]]))
    np.testing.assert_allclose(pair.A, np.diag([2.0, 0]))
    np.testing.assert_array_equal(pair.B, np.eye(2))
    np.testing.assert_array_equal(pca_pair(np.ones((4, 3))).A, np.zeros((3, 3)))
    X = rng.standard_normal((30, 5)) + 10
    np.testing.assert_allclose(pca_pair(X).A, two_pass_covariance(X), atol=1e-10)
    np.testing.assert_allclose(pca_pair(X, gram=True).A, 29 * pca_pair(X).A, atol=1e-9)
    with pytest.raises(InvalidInputError):
        pca_pair(np.ones((1, 3)))


def test_lda_two_class_hand_example():
    data = LabeledData(np.array([[0.0], [2.0], [4.0], [6.0]]), np.array([1, 1, 2, 2]))
    S_B, S_W = scatter_matrices(data)
    assert S_B[0, 0] == pytest.approx(4.0)
    assert S_W[0, 0] == pytest.approx(2.0)
    pair = lda_pair(data)
    t2 = (1.0 - 5.0) ** 2 / (2.0 * (1 / 2 + 1 / 2))
    lam = small_gep(pair.A, pair.B)[1][0]
    assert lam == pytest.approx(2.0)
    assert lam == pytest.approx(t2 * 4 / 16)


def test_lda_equal_means_and_rank(rng):
    X = rng.standard_normal((10, 3))
    data = LabeledData(np.vstack([X, X[::-1]]), np.repeat([0, 1], 10))
    np.testing.assert_allclose(scatter_matrices(data)[0], 0, atol=1e-12)
    y = np.repeat([1, 2, 3], 8)
    data = LabeledData(rng.standard_normal((24, 6)), y)
    S_B, S_W = scatter_matrices(data)
    assert np.linalg.matrix_rank(S_B, tol=1e-10) <= 2
    # n S_B + (n - K) S_W is the total scatter
    n, K = 24, 3
    np.testing.assert_allclose(n * S_B + (n - K) * S_W, (n - 1) * covariance(data.X), atol=1e-10)


def test_lda_small_class_rejected(rng):
    with pytest.raises(InvalidInputError, match="fewer than two"):
        lda_pair(LabeledData(rng.standard_normal((5, 2)), np.array([1, 1, 1, 1, 2])))


def test_lda_singular_within_is_regularized(rng):
    data = LabeledData(rng.standard_normal((6, 10)), np.repeat([1, 2], 3))
    pair = lda_pair(data)
    assert pair.regularized and pair.epsilon_used > 0
    np.linalg.cholesky(pair.B)


def test_slice_labels():
    np.testing.assert_array_equal(slice_labels(np.array([0, 1, 1, 0])), [0, 1, 1, 0])
    with pytest.raises(InvalidInputError, match="empty"):
        slice_labels(np.array([1, 1, 1]), 2)
    y = np.array([0.3, -1.0, 2.0, 0.1, 5.0, -2.0])
    np.testing.assert_array_equal(slice_labels(y, 3), [1, 0, 2, 1, 2, 0])
    assert slice_labels(np.array([1.0, 2.0]), 5).max() == 1
    with pytest.raises(InvalidInputError):
        slice_labels(y, 1)


def test_sir_matches_between_scatter(rng):
    data = LabeledData(rng.standard_normal((30, 4)), rng.integers(0, 3, 30))
    A, B = sir_matrices(data, n_slices=3)
    np.testing.assert_allclose(A, scatter_matrices(data)[0], atol=1e-12)
    np.testing.assert_allclose(B, covariance(data.X), atol=1e-12)
    binary = LabeledData(data.X, (data.y > 0).astype(int))
    assert np.linalg.matrix_rank(sir_pair(binary).A, tol=1e-10) <= 1


def test_sir_signal_beats_permutation():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((400, 5))
    y = (X[:, 0] + 0.3 * rng.standard_normal(400) > 0).astype(int)
    true = sir_pair(LabeledData(X, y))
    perm = sir_pair(LabeledData(X, rng.permutation(y)))
    assert small_gep(perm.A, perm.B)[1][0] < 0.2 * small_gep(true.A, true.B)[1][0]
    assert projection_distance(dense_gep_oracle(true.A, true.B, 1)[0], np.eye(5)[:, :1]) < 0.2


def test_cca_identity_variant(rng):
    X = rng.standard_normal((50, 4))
    Y = X[:, :3] + 0.5 * rng.standard_normal((50, 3))
    g, h = cca_pairs(X, Y)
    np.testing.assert_array_equal(g.B, np.eye(4))
    gv = np.linalg.eigvalsh(g.A)[::-1][:3]
    hv = np.linalg.eigvalsh(h.A)[::-1][:3]
    np.testing.assert_allclose(gv, hv, atol=1e-8)
    gs, hs = cca_pairs(X, X)
    np.testing.assert_allclose(gs.A, hs.A, atol=1e-12)


def test_cca_shared_latent_factor(rng):
    z = rng.standard_normal(500)
    X = np.column_stack([z, rng.standard_normal(500)])
    Y = np.column_stack([rng.standard_normal(500), z])
    g, h = cca_pairs(X, Y)
    assert projection_distance(dense_gep_oracle(g.A, g.B, 1)[0], [1, 0]) < 0.1
    assert projection_distance(dense_gep_oracle(h.A, h.B, 1)[0], [0, 1]) < 0.1


def test_cca_full_variant_gives_canonical_correlations(rng):
    X = rng.standard_normal((80, 3))
    Y = X @ rng.standard_normal((3, 2)) + rng.standard_normal((80, 2))
    g, h = cca_pairs(X, Y, standardized_identity=False)
    S = np.cov(np.hstack([X, Y]).T)
    S1, S2, S12 = S[:3, :3], S[3:, 3:], S[:3, 3:]
    K = np.linalg.inv(sqrtm(S1)) @ S12 @ np.linalg.inv(sqrtm(S2))
    rho2 = np.linalg.svd(np.real(K), compute_uv=False) ** 2
    np.testing.assert_allclose(dense_gep_oracle(g.A, g.B, 2)[1], rho2, atol=1e-8)
    np.testing.assert_allclose(dense_gep_oracle(h.A, h.B, 2)[1], rho2, atol=1e-8)


def test_cca_errors(rng):
    X = rng.standard_normal((10, 2))
    Y = np.column_stack([rng.standard_normal(10), np.ones(10)])
    with pytest.raises(InvalidInputError, match="Y column 1"):
        cca_pairs(X, Y)
    with pytest.raises(InvalidInputError):
        cca_pairs(X, Y[:5])
