"""Linear baseline classifiers fit by deterministic full-batch methods:
L2-regularized logistic regression (gradient descent with backtracking)
and a soft-margin linear SVM in its hinge-loss form (averaged subgradient
descent with Pegasos-style decreasing steps)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .objective import LabeledDataset

__all__ = [
    "LinearModel",
    "logistic_objective",
    "svm_objective",
    "fit_logistic",
    "fit_linear_svm",
    "decision_scores",
    "predict",
    "predict_proba",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
]


@dataclass
class LinearModel:
    """Fitted linear classifier; ``beta`` holds the intercept first."""

    beta: np.ndarray
    kind: str                                   # "logistic" or "svm"
    threshold: float                            # probability (logistic) or margin (svm)
    C: float | None = None
    train_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        if self.beta.ndim != 1 or self.beta.size < 2:
            raise ValueError("beta must be [intercept, weights...]")
        if not np.isfinite(self.beta).all():
            raise ValueError("beta contains NaN or Inf")
        if self.kind not in ("logistic", "svm"):
            raise ValueError(f"unknown model kind {self.kind!r}")


def _design(features) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim != 2:
        raise ValueError("features must be a 2-D array")
    return np.hstack([np.ones((x.shape[0], 1)), x])


def logistic_objective(beta, features, labels, C: float):
    """Mean logistic loss plus ``1/(2*C*N)`` L2 on the non-intercept weights.

    Returns ``(value, gradient)``.
    """
    xd = _design(features)
    y = np.asarray(labels, dtype=float)
    n = y.size
    margins = y * (xd @ beta)
    value = float(np.mean(np.logaddexp(0.0, -margins)))
    reg = np.asarray(beta, dtype=float).copy()
    reg[0] = 0.0
    value += float(reg @ reg) / (2.0 * C * n)
    if not np.isfinite(value):
        raise FloatingPointError("non-finite logistic loss")
    weights = y * expit(-margins)               # sigma(-y * score)
    grad = -(xd.T @ weights) / n + reg / (C * n)
    return value, grad


def fit_logistic(train: LabeledDataset, C: float = 1.0, tol: float = 1e-6,
                 max_iter: int = 10_000) -> LinearModel:
    """Full-batch gradient descent with Armijo backtracking.

    Terminates when the loss gradient norm drops to ``tol`` or after
    ``max_iter`` accepted steps; predicts +1 when the modeled probability
    exceeds 0.5.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    beta = np.zeros(train.n_features + 1)
    value, grad = logistic_objective(beta, train.features, train.labels, C)
    step = 1.0
    iterations = 0
    grad_norm = float(np.linalg.norm(grad))
    for iterations in range(1, max_iter + 1):
        if grad_norm <= tol:
            iterations -= 1
            break
        accepted = False
        for _ in range(60):                     # Armijo: halve until sufficient decrease
            candidate = beta - step * grad
            cand_value, cand_grad = logistic_objective(candidate, train.features, train.labels, C)
            if cand_value <= value - 1e-4 * step * grad_norm**2:
                beta, value, grad = candidate, cand_value, cand_grad
                grad_norm = float(np.linalg.norm(grad))
                step = min(step * 2.0, 1e6)
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break                               # step underflow: cannot improve further
    meta = {
        "iterations": iterations,
        "grad_norm": grad_norm,
        "objective": value,
        "converged": bool(grad_norm <= tol),
    }
    return LinearModel(beta, "logistic", threshold=0.5, C=C, train_meta=meta)


def svm_objective(beta, features, labels, C: float) -> float:
    """Scaled soft-margin objective ``(0.5 ||w||^2 + C * sum hinge) / (C * N)``
    (intercept unregularized)."""
    xd = _design(features)
    y = np.asarray(labels, dtype=float)
    n = y.size
    margins = y * (xd @ beta)
    hinge = np.maximum(0.0, 1.0 - margins)
    lam = 1.0 / (C * n)
    weights = np.asarray(beta, dtype=float).copy()
    weights[0] = 0.0
    return float(0.5 * lam * (weights @ weights) + hinge.mean())


SVM_CHECK_EVERY = 50


def fit_linear_svm(train: LabeledDataset, C: float = 1.0, tol: float = 1e-6,
                   max_iter: int = 10_000) -> LinearModel:
    """Averaged subgradient descent on the hinge form of the soft-margin SVM.

    Steps follow ``1 / (R^2 + lam * t)`` with ``lam = 1/(C*N)`` and ``R^2``
    the mean squared row norm, decreasing like the strongly convex optimal
    schedule but bounded at the start.  The running average of iterates is
    returned; its objective is checkpointed every 50 iterations and the fit
    stops early once the relative improvement falls below ``tol``.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    xd = _design(train.features)
    y = train.labels.astype(float)
    n = y.size
    lam = 1.0 / (C * n)
    r2 = float(np.mean(np.sum(xd * xd, axis=1)))
    beta = np.zeros(xd.shape[1])
    average = beta.copy()
    trace: list[tuple[int, float]] = []
    previous = np.inf
    iterations = max_iter
    for t in range(max_iter):
        margins = y * (xd @ beta)
        violating = margins < 1.0
        subgrad = lam * np.concatenate([[0.0], beta[1:]])
        if violating.any():
            subgrad = subgrad - (xd[violating].T @ y[violating]) / n
        beta = beta - subgrad / (r2 + lam * t)
        average = average * (t / (t + 1.0)) + beta / (t + 1.0)
        if (t + 1) % SVM_CHECK_EVERY == 0 or t + 1 == max_iter:
            objective = svm_objective(average, train.features, train.labels, C)
            trace.append((t + 1, objective))
            if np.isfinite(previous) and previous - objective <= tol * max(1.0, abs(previous)):
                iterations = t + 1
                break
            previous = objective
    meta = {
        "iterations": iterations,
        "objective": trace[-1][1],
        "objective_trace": [[i, o] for i, o in trace],
    }
    return LinearModel(average, "svm", threshold=0.0, C=C, train_meta=meta)


def decision_scores(model: LinearModel, features) -> np.ndarray:
    """Linear scores ``beta @ [1; x]`` (logit for logistic, margin for svm)."""
    xd = _design(features)
    if xd.shape[1] != model.beta.size:
        raise ValueError(
            f"dimension mismatch: model expects {model.beta.size - 1} features, got {xd.shape[1] - 1}"
        )
    return xd @ model.beta


def _score_cut(model: LinearModel) -> float:
    if model.kind == "logistic":                # probability threshold -> logit space
        t = model.threshold
        if not 0.0 < t < 1.0:
            raise ValueError("logistic threshold must lie in (0, 1)")
        return float(np.log(t / (1.0 - t)))
    return float(model.threshold)


def predict(model: LinearModel, features) -> np.ndarray:
    """+1 where the decision score exceeds the model threshold, else -1."""
    return np.where(decision_scores(model, features) > _score_cut(model), 1, -1)


def predict_proba(model: LinearModel, features) -> np.ndarray:
    if model.kind != "logistic":
        raise ValueError("probabilities are defined for logistic models only")
    return expit(decision_scores(model, features))


def model_to_dict(model: LinearModel) -> dict:
    return {
        "kind": model.kind,
        "beta": model.beta.tolist(),
        "threshold": model.threshold,
        "C": model.C,
        "train_meta": model.train_meta,
    }


def model_from_dict(obj: dict) -> LinearModel:
    return LinearModel(
        beta=np.asarray(obj["beta"], dtype=float),
        kind=obj["kind"],
        threshold=float(obj["threshold"]),
        C=obj.get("C"),
        train_meta=obj.get("train_meta", {}),
    )


def save_model(model: LinearModel, path):
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True, indent=2) + "\n")


def load_model(path) -> LinearModel:
    return model_from_dict(json.loads(Path(path).read_text()))
