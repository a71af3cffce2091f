import dataclasses

import numpy as np
import pytest

from sparsegep.errors import InvalidInputError, SparseGepError
from sparsegep.linalg import projection_distance
from sparsegep.applications import LabeledData
from sparsegep import simulation as sim
from sparsegep.simulation import (ExperimentSpec, aggregate, classify_lda,
                                  compound_symmetry, gen_lda, gen_pca, gen_taichi,
                                  lda_population, pca_covariance, pca_loadings,
                                  pca_spikes, run_experiment, run_repetition,
                                  taichi_label)


def nonzero_rows(U):
    return np.flatnonzero(np.linalg.norm(U, axis=1) > 1e-12)


def test_pca_model_supports(rng):
    U = pca_loadings("I", 3, 50, rng)
    assert nonzero_rows(U).tolist() == list(range(10))
    np.testing.assert_allclose(np.linalg.norm(U, axis=0), 1.0)
    U = pca_loadings("II", 3, 50, rng)
    assert nonzero_rows(U).tolist() == list(range(15))
    for j in range(3):
        assert np.flatnonzero(U[:, j]).tolist() == list(range(5 * j, 5 * j + 5))
    U = pca_loadings("III", 3, 50, rng)
    assert nonzero_rows(U).tolist() == list(range(15))
    np.testing.assert_allclose(U.T @ U, np.eye(3), atol=1e-12)
    with pytest.raises(InvalidInputError):
        pca_loadings("II", 3, 15, rng)
    with pytest.raises(InvalidInputError):
        pca_loadings("IV", 3, 50, rng)


def test_pca_spikes():
    np.testing.assert_allclose(pca_spikes(3), [15, 12, 9])
    np.testing.assert_allclose(pca_spikes(3, "squared"), [225, 144, 81])
    with pytest.raises(InvalidInputError):
        pca_spikes(3, "cubic")


def test_gen_pca_shapes(rng):
    X, U = gen_pca("II", 3, 40, 25, rng)
    assert X.shape == (25, 40)
    np.testing.assert_allclose(U.T @ U, np.eye(3), atol=1e-12)


def test_pca_generator_covariance_monte_carlo():
    rng = np.random.default_rng(11)
    U = pca_loadings("I", 3, 20, rng)
    sigma = pca_covariance(U)
    L = np.linalg.cholesky(sigma)
    X = sim.sample_gaussian(50000, 0.0, L, rng)
    S = np.cov(X.T)
    # compare on the correlation scale; raw entries reach 16
    scale = np.sqrt(np.outer(np.diag(sigma), np.diag(sigma)))
    assert (np.abs(S - sigma) / scale).max() <= 0.05


def test_compound_symmetry_spectrum():
    vals = np.sort(np.linalg.eigvalsh(compound_symmetry(200, 0.5)))
    np.testing.assert_allclose(vals[:-1], 0.5, atol=1e-10)
    assert vals[-1] == pytest.approx(1 + 199 * 0.5)


@pytest.mark.parametrize("model", ["I", "II", "III", "IV", "V"])
def test_lda_truth_lives_on_first_five(rng, model):
    means, sigma = lda_population(model)
    assert means.shape == (200, 4 if model == "V" else 3)
    data, U = gen_lda(model, 4, rng, means=means, sigma=sigma)
    assert U.shape == (200, 2)
    np.testing.assert_allclose(U.T @ U, np.eye(2), atol=1e-10)
    if model == "I":
        assert set(nonzero_rows(U)) <= set(range(5))
    K = means.shape[1]
    assert data.X.shape == (4 * K, 200)
    assert sorted(set(data.y.tolist())) == list(range(1, K + 1))


def test_lda_models_ii_iii_share_truth_with_i():
    U1 = sim.lda_truth(*lda_population("I"))
    for model in ("II", "III"):
        assert projection_distance(U1, sim.lda_truth(*lda_population(model))) <= 1e-8


def test_taichi_labels():
    pts = {(1.0, 0.0): 1, (-1.0, 0.0): 0, (0.0, 1.0): 0, (0.0, -1.0): 1,
           (0.1, 1.5): 1, (-0.1, -1.5): 0, (1.5, -0.5): 1}
    for (a, b), lab in pts.items():
        assert taichi_label(a, b) == lab, (a, b)
    rng = np.random.default_rng(1)
    x = rng.uniform(-2, 2, (2, 5000))
    # the symbol is antisymmetric under a half turn
    agree = taichi_label(x[0], x[1]) + taichi_label(-x[0], -x[1])
    assert np.mean(agree == 1) > 0.999


def test_taichi_generator():
    data = gen_taichi(20000, 5, np.random.default_rng(3))
    r2 = data.X[:, 0] ** 2 + data.X[:, 1] ** 2
    assert r2.max() <= 4.0
    assert abs(np.mean(r2 <= 2) - 0.5) < 0.015
    assert abs(data.y.mean() - 0.5) < 0.015
    assert set(np.unique(data.y)) == {0, 1}
    assert abs(data.X[:, 2:].std() - 1) < 0.02
    with pytest.raises(InvalidInputError):
        gen_taichi(10, 1, np.random.default_rng(0))


def test_classify_lda_separated_and_chance(rng):
    x = np.concatenate([rng.uniform(0, 1, 20), rng.uniform(5, 6, 20)])[:, None]
    y = np.repeat([1, 2], 20)
    _, rate, _ = classify_lda(LabeledData(x, y), LabeledData(x, y))
    assert rate == 0
    Xtr = rng.standard_normal((3000, 2))
    ytr = rng.integers(1, 4, 3000)
    Xte = rng.standard_normal((3000, 2))
    yte = rng.integers(1, 4, 3000)
    _, rate, _ = classify_lda(LabeledData(Xtr, ytr), LabeledData(Xte, yte))
    assert abs(rate - 2 / 3) < 0.04


def test_classify_lda_ridges_singular_covariance(rng):
    x = rng.standard_normal((20, 1))
    X = np.hstack([x, x])
    y = np.repeat([1, 2], 10)
    pred, _, ridged = classify_lda(LabeledData(X, y), LabeledData(X, y))
    assert ridged and pred.shape == (20,)


def test_spec_resolution_and_text_round_trip():
    s = ExperimentSpec(family="lda", model="v").resolved()
    assert (s.d, s.p, s.n_train, s.n_test, s.method) == (3, 200, 30, 3000, "fastpoi")
    s = ExperimentSpec().resolved()
    assert (s.d, s.p, s.n_train, s.n_tune, s.method) == (3, 200, 100, 100, "poi")
    text = "# comment\nfamily = taichi\nrepetitions = 2  # two\nlambda_rel = 0.25\n"
    spec = ExperimentSpec.from_text(text)
    assert spec.family == "taichi" and spec.repetitions == 2 and spec.lambda_rel == 0.25
    assert ExperimentSpec.from_text(spec.to_text()) == spec
    assert ExperimentSpec.from_dict(spec.to_dict()) == spec
    for bad in ("nonsense", "repetitions = two", "colour = red"):
        with pytest.raises(InvalidInputError):
            ExperimentSpec.from_text(bad)
    for kwargs in ({"family": "ica"}, {"model": "IX"}, {"repetitions": 0},
                   {"penalty": "scad"}, {"d": 300}):
        with pytest.raises(InvalidInputError):
            ExperimentSpec(**kwargs).resolved()


SMALL_PCA = ExperimentSpec(family="pca", model="II", p=40, n_train=40, repetitions=3,
                           seed=5, grid_len=12)


def test_experiment_is_deterministic():
    a, b = run_experiment(SMALL_PCA), run_experiment(SMALL_PCA)
    assert a.to_json() == b.to_json()
    assert a.to_csv() == b.to_csv()
    single = run_experiment(dataclasses.replace(SMALL_PCA, repetitions=1))
    assert single.reps[0] == a.reps[0]


def test_experiment_parallel_matches_serial():
    assert run_experiment(SMALL_PCA, workers=2).to_csv() == run_experiment(SMALL_PCA).to_csv()


def test_report_invariants():
    rep = run_experiment(SMALL_PCA)
    assert rep.failures == 0 and len(rep.reps) == 3
    for row in rep.reps:
        assert row["min_distance"] <= row["cv_distance"] + 1e-15
        assert row["true_positives"] + row["false_positives"] == row["support_size"]
    mean = np.mean([r["min_distance"] for r in rep.reps])
    assert rep.aggregates["min_distance"]["mean"] == pytest.approx(mean, rel=1e-15)
    lines = rep.to_csv().splitlines()
    assert len(lines) == 5 and lines[-1].startswith("mean,failures=0")


def test_lda_model_v_distance_defined():
    spec = ExperimentSpec(family="lda", model="V", n_train=15, n_test=20, repetitions=1,
                          seed=2, grid_len=10)
    rep = run_experiment(spec)
    row = rep.reps[0]
    assert row["status"] == "ok"
    assert np.isfinite(row["min_distance"]) and np.isfinite(row["cv_distance"])
    assert 0 <= row["misclassification"] <= 1


def test_failed_repetition_is_recorded(monkeypatch):
    def boom(s, rng):
        raise SparseGepError("synthetic failure")
    monkeypatch.setitem(sim._RUNNERS, "pca", boom)
    row = run_repetition(SMALL_PCA, 0)
    assert row["status"].startswith("failed")
    assert aggregate([row]) == {}


def test_taichi_experiment_runs():
    rep = run_experiment(ExperimentSpec(family="taichi", n_train=600, p=20, repetitions=2, seed=1))
    assert all(r["status"] == "ok" for r in rep.reps)
    assert rep.aggregates["min_distance"]["mean"] <= 0.3
