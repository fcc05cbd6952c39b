"""Predictive means, weighted aggregation, and out-of-sample error summaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .kernel import KernelConfig, cross_kernel, fit_reference
from .models import CandidateModel, design_matrix, _thin_qr

__all__ = [
    "PredictionSet",
    "predict_linear",
    "predict_reference",
    "rmse",
    "aggregate",
    "effective_models",
    "select_top",
]

WEIGHT_SUM_TOL = 1e-10


@dataclass(frozen=True)
class PredictionSet:
    """Per-model test predictions (models x test points) plus the reference's."""

    model_predictions: np.ndarray
    reference_predictions: np.ndarray
    weights: dict[str, np.ndarray]


def predict_linear(ds_train: Dataset, model: CandidateModel, X_test) -> np.ndarray:
    """Posterior predictive mean of one candidate at new covariate rows.

    Flat prior: the least-squares fit applied to the test design. g-prior:
    the same fit shrunk by g/(1+g) (posterior mean of the coefficients).
    """
    X_test = np.atleast_2d(np.asarray(X_test, dtype=float))
    Xj = design_matrix(ds_train, model)
    Q, R = _thin_qr(Xj, model, ds_train.names)
    beta = np.linalg.solve(R, Q.T @ ds_train.y) * model.shrinkage()
    cols = [np.ones(X_test.shape[0])]
    cols.extend(X_test[:, j] for j in model.subset)
    return np.column_stack(cols) @ beta


def predict_reference(ds_train: Dataset, cfg: KernelConfig, X_test) -> np.ndarray:
    """Reference posterior mean k(x*, X) (K + I)^{-1} y at new points."""
    ref = fit_reference(ds_train.X, ds_train.y, cfg)
    alpha = ref.eigvecs @ (ref.eig_y / (1.0 + ref.eigvals))
    return cross_kernel(np.atleast_2d(np.asarray(X_test, dtype=float)),
                        ds_train.X, cfg) @ alpha


def rmse(pred, truth) -> float:
    """Root mean squared error between two equal-length vectors."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.size == 0:
        raise ValueError(f"shape mismatch or empty: {pred.shape} vs {truth.shape}")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def aggregate(preds: np.ndarray, weights) -> np.ndarray:
    """Weighted combination of per-model predictions (rows = models)."""
    preds = np.asarray(preds, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if weights.shape[0] != preds.shape[0]:
        raise ValueError("one weight per model required")
    if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights sum to {weights.sum()}, expected 1")
    return weights @ preds


def effective_models(weights) -> float:
    """Inverse participation ratio 1 / sum(w^2) of a normalized weight vector."""
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights sum to {weights.sum()}, expected 1")
    return float(1.0 / np.sum(weights ** 2))


def select_top(weights, models: list[CandidateModel]) -> int:
    """Index of the highest-weight model.

    Ties break toward the smaller model, then lexicographic subset order, so
    selection is deterministic across platforms.
    """
    weights = np.asarray(weights, dtype=float)
    best = 0
    for i in range(1, len(models)):
        if weights[i] > weights[best]:
            best = i
        elif weights[i] == weights[best]:
            a, b = models[i], models[best]
            if (a.p_j, a.subset) < (b.p_j, b.subset):
                best = i
    return best
