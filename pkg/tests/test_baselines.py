import numpy as np
import pytest
from scipy.special import expit

from aucmax.baselines import (
    LinearModel,
    decision_scores,
    fit_linear_svm,
    fit_logistic,
    load_model,
    logistic_objective,
    model_from_dict,
    model_to_dict,
    predict,
    predict_proba,
    save_model,
    svm_objective,
)
from aucmax.data import SynthSpec, generate_synthetic
from aucmax.metrics import roc_auc
from aucmax.objective import LabeledDataset


def blobs(seed=1, n=60, sep=3.0, scale=0.3):
    rng = np.random.default_rng(seed)
    half = n // 2
    features = np.vstack([
        rng.standard_normal((half, 2)) * scale + sep,
        rng.standard_normal((half, 2)) * scale - sep,
    ])
    labels = np.concatenate([np.ones(half, dtype=int), -np.ones(half, dtype=int)])
    return LabeledDataset(features, labels)


# --- logistic regression

def test_logistic_separable_1d():
    ds = LabeledDataset(np.array([[-1.0], [1.0]]), np.array([-1, 1]))
    model = fit_logistic(ds, C=1e4)
    assert np.array_equal(predict(model, ds.features), ds.labels)


def test_logistic_intercept_only_prior():
    # all-zero features: optimum is the class-prior logit on the intercept
    features = np.zeros((30, 2))
    labels = np.concatenate([np.ones(10, dtype=int), -np.ones(20, dtype=int)])
    model = fit_logistic(LabeledDataset(features, labels), C=1.0)
    assert np.abs(model.beta[1:]).max() <= 1e-8
    assert expit(model.beta[0]) == pytest.approx(1 / 3, abs=1e-3)


def test_logistic_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    features = rng.standard_normal((40, 3))
    labels = np.where(rng.random(40) < 0.5, 1, -1)
    beta = rng.standard_normal(4)
    _, grad = logistic_objective(beta, features, labels, C=2.0)
    numeric = np.zeros_like(beta)
    h = 1e-6
    for i in range(beta.size):
        bp, bm = beta.copy(), beta.copy()
        bp[i] += h
        bm[i] -= h
        numeric[i] = (
            logistic_objective(bp, features, labels, 2.0)[0]
            - logistic_objective(bm, features, labels, 2.0)[0]
        ) / (2 * h)
    assert np.linalg.norm(grad - numeric) / np.linalg.norm(numeric) <= 1e-6


def test_logistic_probabilities_monotone_in_score():
    ds = blobs(seed=3)
    model = fit_logistic(ds, C=1.0)
    scores = decision_scores(model, ds.features)
    probs = predict_proba(model, ds.features)
    assert np.all((probs > 0) & (probs < 1))
    order = np.argsort(scores)
    assert np.all(np.diff(probs[order]) >= 0)


def test_logistic_rejects_bad_C():
    with pytest.raises(ValueError, match="C"):
        fit_logistic(blobs(), C=0.0)


# --- linear SVM

def test_svm_separable_blobs():
    ds = blobs(seed=1)
    model = fit_linear_svm(ds, C=100.0)
    assert np.array_equal(predict(model, ds.features), ds.labels)
    design = np.hstack([np.ones((ds.n_samples, 1)), ds.features])
    margins = ds.labels * (design @ model.beta)
    assert np.maximum(0.0, 1.0 - margins).sum() == 0.0    # no slack used


def test_svm_small_C_shrinks_weights():
    ds = blobs(seed=4)
    model = fit_linear_svm(ds, C=1e-8)
    assert np.abs(model.beta[1:]).max() <= 1e-2


def test_svm_matches_1d_grid_search():
    features = np.array([[-2.0], [-1.0], [1.0], [2.0], [-0.5], [0.5]])
    labels = np.array([-1, -1, 1, 1, -1, 1])
    ds = LabeledDataset(features, labels)
    model = fit_linear_svm(ds, C=1.0, max_iter=20_000)
    fitted = svm_objective(model.beta, features, labels, 1.0)
    grid = np.linspace(-5.0, 5.0, 20_001)
    best = min(svm_objective(np.array([0.0, b]), features, labels, 1.0) for b in grid)
    assert fitted <= 1.01 * best


def test_svm_averaged_objective_non_increasing():
    # non-separable imbalanced instance: checkpointed objective of the
    # averaged iterate decreases monotonically
    ds = generate_synthetic(SynthSpec(400, 5, 1 / 3, 1.0, seed=7))
    model = fit_linear_svm(ds, C=1.0, max_iter=4000, tol=0.0)
    trace = model.train_meta["objective_trace"]
    assert len(trace) >= 10
    values = [obj for _, obj in trace]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


# --- scores, predictions, serialization

def test_decision_scores_examples():
    zero = LinearModel(np.zeros(3), "svm", threshold=0.0)
    assert np.all(decision_scores(zero, np.ones((4, 2))) == 0.0)
    known = LinearModel(np.array([0.0, 1.0]), "svm", threshold=0.0)
    assert decision_scores(known, np.array([[2.0]]))[0] == 2.0


def test_threshold_reproduces_predictions():
    for kind, threshold in (("logistic", 0.5), ("svm", 0.0)):
        ds = blobs(seed=6)
        model = fit_logistic(ds, C=1.0) if kind == "logistic" else fit_linear_svm(ds, C=1.0)
        scores = decision_scores(model, ds.features)
        cut = 0.0 if kind == "logistic" else model.threshold   # logit(0.5) = 0
        assert np.array_equal(predict(model, ds.features), np.where(scores > cut, 1, -1))


def test_scores_rank_separable_data_perfectly():
    ds = blobs(seed=8)
    model = fit_logistic(ds, C=10.0)
    assert roc_auc(decision_scores(model, ds.features), ds.labels) == 1.0


def test_dimension_mismatch():
    model = LinearModel(np.array([0.0, 1.0]), "svm", threshold=0.0)
    with pytest.raises(ValueError, match="dimension mismatch"):
        decision_scores(model, np.ones((2, 3)))


def test_model_serialization_round_trip(tmp_path):
    ds = blobs(seed=9)
    model = fit_linear_svm(ds, C=2.0)
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.kind == "svm" and loaded.C == 2.0
    assert np.array_equal(loaded.beta, model.beta)
    assert model_to_dict(model_from_dict(model_to_dict(model))) == model_to_dict(model)
