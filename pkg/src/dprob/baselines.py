"""Classical comparators: Bayes factors under Zellner g-priors, BIC weights,
and exponential weighting.

The g-prior here follows the convention of standard Bayes-factor software:
covariates centered, intercept and noise variance given flat treatment, so
each model's marginal likelihood depends on the data only through its
ordinary R^2. This deliberately differs from the uniform full-coefficient
prior used for the divergence-engine candidates; the two conventions serve
different comparisons and live in different modules on purpose.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .data import Dataset
from .models import CandidateModel, RankDeficiencyError, design_matrix, _thin_qr

__all__ = [
    "BaselineWeights",
    "gprior_log_marginal",
    "bic_weight_scores",
    "exponential_weights",
]

_HYPER_G_NODES = 201  # Gauss-Legendre points on u = g/(1+g)


@dataclass(frozen=True)
class BaselineWeights:
    """Per-model log scores and normalized probabilities for one method."""

    method: str
    labels: tuple[str, ...]
    log_scores: np.ndarray
    probabilities: np.ndarray

    def top_models(self, k: int = 5):
        order = np.argsort(self.probabilities)[::-1][:k]
        return [(self.labels[i], float(self.probabilities[i])) for i in order]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "model", "log_score", "probability"])
            for i, label in enumerate(self.labels):
                writer.writerow([self.method, label, float(self.log_scores[i]),
                                 float(self.probabilities[i])])

    def to_json(self) -> str:
        return json.dumps({
            "method": self.method,
            "models": [
                {"model": lab, "log_score": float(s), "probability": float(p)}
                for lab, s, p in zip(self.labels, self.log_scores, self.probabilities)
            ],
        }, indent=2)


def _normalize(method, models, names, scores) -> BaselineWeights:
    scores = np.asarray(scores, dtype=float)
    probs = np.exp(scores - logsumexp(scores))
    return BaselineWeights(
        method=method,
        labels=tuple(m.label(names) for m in models),
        log_scores=scores,
        probabilities=probs,
    )


def _r_squared(ds: Dataset, model: CandidateModel) -> float:
    """Ordinary R^2 of the intercept model; centered-covariate computation."""
    y = ds.y
    yc = y - y.mean()
    tss = float(yc @ yc)
    if tss <= 0:
        raise ValueError("response is constant; R^2 undefined")
    if not model.subset:
        return 0.0
    Xc = ds.X[:, model.subset] - ds.X[:, model.subset].mean(axis=0)
    Q, R = np.linalg.qr(Xc)
    diag = np.abs(np.diag(R))
    if diag.size and diag.min() <= ds.n * np.finfo(float).eps * diag.max():
        raise RankDeficiencyError(
            f"centered design for {model.label(ds.names)!r} is rank deficient")
    fitted = Q.T @ yc
    return float(fitted @ fitted) / tss


def gprior_log_marginal(ds: Dataset, model: CandidateModel, mode: str = "unit_info") -> float:
    """Log marginal likelihood relative to the null model under a g-prior.

    ``unit_info`` fixes ``g = n``:
    ``log BF = ((n-1-p_j)/2) log(1+g) - ((n-1)/2) log(1 + g(1-R^2))``.

    ``hyper_g`` places the density ``(1/2)(1+g)^{-3/2}`` on g (equivalently
    ``u = g/(1+g) ~ Beta(1, 1/2)``) and integrates the fixed-g Bayes factor
    numerically with 201-point Gauss-Legendre quadrature on u. In u the
    integrand reduces to ``(1/2)(1-u)^{(p_j-1)/2} (1 - u R^2)^{-(n-1)/2}``,
    evaluated in log space to survive large n.

    The null model returns 0 under both modes.
    """
    if mode not in ("unit_info", "hyper_g"):
        raise ValueError(f"mode must be 'unit_info' or 'hyper_g', got {mode!r}")
    n = ds.n
    p_j = model.p_j
    if n <= p_j + 2:
        raise ValueError(f"need n > p_j + 2 (n={n}, p_j={p_j})")
    if not model.subset:
        return 0.0
    r2 = _r_squared(ds, model)
    if r2 >= 1.0:
        raise ValueError(f"model {model.label(ds.names)!r} fits perfectly (R^2 >= 1)")
    if mode == "unit_info":
        g = float(n)
        return (0.5 * (n - 1 - p_j) * math.log1p(g)
                - 0.5 * (n - 1) * math.log1p(g * (1.0 - r2)))
    nodes, weights = np.polynomial.legendre.leggauss(_HYPER_G_NODES)
    u = 0.5 * (nodes + 1.0)
    log_integrand = (-math.log(2.0)
                     + 0.5 * (p_j - 1) * np.log1p(-u)
                     - 0.5 * (n - 1) * np.log1p(-u * r2))
    return float(logsumexp(log_integrand, b=0.5 * weights))


def _ols_rss(ds: Dataset, model: CandidateModel) -> float:
    Xj = design_matrix(ds, model)
    Q, _ = _thin_qr(Xj, model, ds.names)
    qty = Q.T @ ds.y
    return max(float(ds.y @ ds.y - qty @ qty), 0.0)


def bic_weight_scores(ds: Dataset, models: list[CandidateModel]) -> BaselineWeights:
    """Schwarz-criterion weights: score ``-BIC_j/2`` with
    ``BIC_j = n log(RSS_j/n) + (p_j + 2) log n`` (intercept and variance
    counted as parameters), normalized by log-sum-exp."""
    n = ds.n
    scores = []
    for model in models:
        rss = _ols_rss(ds, model)
        if rss <= 0:
            raise ValueError(f"model {model.label(ds.names)!r} has zero residual sum of squares")
        bic = n * math.log(rss / n) + (model.p_j + 2) * math.log(n)
        scores.append(-0.5 * bic)
    return _normalize("bic", models, ds.names, scores)


def exponential_weights(ds: Dataset, models: list[CandidateModel],
                        sigma0_sq: float) -> BaselineWeights:
    """Exponential weighting from the unbiased risk estimate.

    Stored log score is ``-RSS_j/(4 sigma0_sq) - (p_j + 1)/2 + n/4`` (the
    n/4 term is constant across models and cancels in normalization, but is
    kept so stored scores match the published weight definition). RSS_j
    comes from flat least-squares fits. Callers typically pass the
    reference-model posterior-mean variance ``rss0 / (n - 2)``.
    """
    if not sigma0_sq > 0:
        raise ValueError(f"sigma0_sq must be positive, got {sigma0_sq}")
    n = ds.n
    scores = []
    for model in models:
        rss = _ols_rss(ds, model)
        scores.append(-rss / (4.0 * sigma0_sq) - 0.5 * (model.p_j + 1) + 0.25 * n)
    return _normalize("ew", models, ds.names, scores)


def gprior_weight_scores(ds: Dataset, models: list[CandidateModel],
                         mode: str = "unit_info") -> BaselineWeights:
    """Normalized Bayes-factor weights over a model list for one g-prior mode."""
    scores = [gprior_log_marginal(ds, m, mode) for m in models]
    return _normalize(mode, models, ds.names, scores)
