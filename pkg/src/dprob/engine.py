"""Divergence estimators and model-weight reports.

Two analytic estimators of the per-observation Kullback-Leibler divergence
between a candidate linear model and the Gaussian-process reference are
supported, each decomposing as ``(goodness_of_fit + penalty) / n``:

* estimator 1 averages the conditional KL over both posteriors
  (penalty ``tr(H_j)/2``),
* estimator 2 measures KL between posterior-predictive densities,
  integrated over the two inverse-gamma variance posteriors
  (penalty ``log det(I + H_j)/2``).

Absolute weights ``pi = exp(-n KL)`` underflow catastrophically (real data
produces values around 1e-22), so everything is carried in natural-log
space; linear-space values are derived only for display.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .models import CandidateModel, ModelFit

__all__ = [
    "KlEstimate",
    "WeightReport",
    "kl1_analytic",
    "kl2_analytic",
    "make_report",
    "evidence_label",
]

# Evidence-of-lack-of-fit scale on absolute weights (Bayes-factor convention).
EVIDENCE_THRESHOLDS = (
    (math.log(1.0 / 150.0), "very strong"),
    (math.log(1.0 / 20.0), "strong"),
    (math.log(1.0 / 3.0), "positive"),
)
_NEG_CLAMP = -1e-10  # KL estimates below this signal a formula/numerics bug


@dataclass(frozen=True)
class KlEstimate:
    """Both divergence estimates for one model, with their decompositions.

    ``kl1``/``kl2`` are per-observation values; ``n * kl_t == g_t + p_t``.
    """

    kl1: float
    kl2: float
    g1: float
    p1: float
    g2: float
    p2: float


def _finish(g: float, p: float, n: int, which: str) -> float:
    total = g + p
    if total < _NEG_CLAMP:
        raise ValueError(f"{which} estimate is negative ({total / n:.3e}); "
                         "inputs violate the estimator's assumptions")
    return max(total, 0.0) / n


def kl1_analytic(fitj: ModelFit, trH: float, rss0: float, n: int) -> tuple[float, float]:
    """Posterior-mean divergence decomposition (g1, p1) for one candidate.

    ``g1 = (n/2) [ qd/rssj + (tr H + n) rss0 / ((n-2) rssj) + log(rssj/rss0) - 1 ]``
    with ``qd = y'(H_j - H)^2 y``, and ``p1 = tr(H_j)/2``. The per-observation
    estimate is ``(g1 + p1)/n``.
    """
    if n <= 2:
        raise ValueError("need n > 2 for the variance posterior means to exist")
    if not fitj.rssj > 0:
        raise ValueError("candidate interpolates the data (rssj = 0)")
    if not rss0 > 0:
        raise ValueError("reference interpolates the data (rss0 = 0)")
    g1 = 0.5 * n * (
        fitj.qform_diff / fitj.rssj
        + (trH + n) * rss0 / ((n - 2) * fitj.rssj)
        + math.log(fitj.rssj / rss0)
        - 1.0
    )
    return g1, 0.5 * fitj.trHj


def kl2_analytic(fitj: ModelFit, logdet_IplusH: float, rss0: float, n: int) -> tuple[float, float]:
    """Posterior-predictive divergence decomposition (g2, p2) for one candidate.

    ``g2 = (n/2) [ qp/rssj + (rss0/rssj) tp/(n-2) + log(rssj/rss0)
                   - log det(I + H)/n - 1 ]``
    with ``qp = y'(H_j - H)'(I + H_j)^{-1}(H_j - H) y`` and
    ``tp = tr{(I + H_j)^{-1}(I + H)}``; ``p2 = log det(I + H_j)/2``. The
    reference log-determinant enters divided by n: it originates inside the
    per-observation conditional divergence, so integrating the variance
    posteriors leaves a single -log det(I + H)/2 in ``n KL``, not n times it.
    """
    if n <= 2:
        raise ValueError("need n > 2 for the variance posterior means to exist")
    if not fitj.rssj > 0:
        raise ValueError("candidate interpolates the data (rssj = 0)")
    if not rss0 > 0:
        raise ValueError("reference interpolates the data (rss0 = 0)")
    g2 = 0.5 * n * (
        fitj.qform_pred / fitj.rssj
        + (rss0 / fitj.rssj) * fitj.trace_pred / (n - 2)
        + math.log(fitj.rssj / rss0)
        - logdet_IplusH / n
        - 1.0
    )
    return g2, 0.5 * fitj.logdet_IplusHj


def kl_estimate(fitj: ModelFit, trH: float, logdet_IplusH: float, rss0: float, n: int) -> KlEstimate:
    """Assemble both estimators for one candidate."""
    g1, p1 = kl1_analytic(fitj, trH, rss0, n)
    g2, p2 = kl2_analytic(fitj, logdet_IplusH, rss0, n)
    return KlEstimate(
        kl1=_finish(g1, p1, n, "kl1"),
        kl2=_finish(g2, p2, n, "kl2"),
        g1=g1, p1=p1, g2=g2, p2=p2,
    )


def evidence_label(log_abs_weight: float) -> str:
    """Strength-of-evidence (of lack of fit) label for an absolute weight."""
    for threshold, label in EVIDENCE_THRESHOLDS:
        if log_abs_weight < threshold:
            return label
    return "bare mention"


@dataclass(frozen=True)
class WeightReport:
    """Per-model weight table plus covariate inclusion probabilities.

    ``log_abs_1``/``log_abs_2`` are natural logs of the absolute weights
    ``exp(-n KL_t)``; ``cond_1``/``cond_2`` are the conditional weights
    normalized over the model list (each sums to one). ``evidence`` labels
    the estimator-1 absolute weight; conditional weights are relative
    quantities and never carry labels. ``inclusion`` maps covariate name to
    its (estimator-1, estimator-2) inclusion probabilities.
    """

    labels: tuple[str, ...]
    subsets: tuple[tuple[int, ...], ...]
    log_abs_1: np.ndarray
    log_abs_2: np.ndarray
    cond_1: np.ndarray
    cond_2: np.ndarray
    evidence: tuple[str, ...]
    inclusion: dict[str, tuple[float, float]]
    n: int

    def top_models(self, estimator: int = 1, k: int = 5):
        """(label, conditional weight) rows, largest first."""
        cond = self.cond_1 if estimator == 1 else self.cond_2
        order = np.argsort(cond)[::-1][:k]
        return [(self.labels[i], float(cond[i])) for i in order]

    def rows(self):
        for i, label in enumerate(self.labels):
            yield {
                "model": label,
                "log_pi1": float(self.log_abs_1[i]),
                "log_pi2": float(self.log_abs_2[i]),
                "cond_pi1": float(self.cond_1[i]),
                "cond_pi2": float(self.cond_2[i]),
                "evidence": self.evidence[i],
            }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["model", "log_pi1", "log_pi2", "cond_pi1", "cond_pi2", "evidence"])
            writer.writeheader()
            for row in self.rows():
                writer.writerow(row)

    def write_inclusion_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["covariate", "inclusion_pi1", "inclusion_pi2"])
            for name, (i1, i2) in self.inclusion.items():
                writer.writerow([name, i1, i2])

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n,
            "models": list(self.rows()),
            "inclusion": {k: list(v) for k, v in self.inclusion.items()},
        }, indent=2)


def make_report(models: list[CandidateModel], kls: list[KlEstimate], names, n: int) -> WeightReport:
    """Normalize per-model divergence estimates into a weight report.

    Log absolute weight is ``-(g_t + p_t)``; conditional weights come from a
    log-sum-exp normalization per estimator. Inclusion probability of a
    covariate is the summed conditional weight of the models containing it.
    """
    if not kls or len(models) != len(kls):
        raise ValueError("need one KlEstimate per model, nonempty")
    log_abs_1 = np.array([-(k.g1 + k.p1) for k in kls])
    log_abs_2 = np.array([-(k.g2 + k.p2) for k in kls])
    cond_1 = np.exp(log_abs_1 - logsumexp(log_abs_1))
    cond_2 = np.exp(log_abs_2 - logsumexp(log_abs_2))
    labels = tuple(m.label(names) for m in models)
    inclusion: dict[str, tuple[float, float]] = {}
    for j, name in enumerate(names):
        contains = np.array([j in m.subset for m in models])
        inclusion[name] = (float(cond_1[contains].sum()), float(cond_2[contains].sum()))
    return WeightReport(
        labels=labels,
        subsets=tuple(m.subset for m in models),
        log_abs_1=log_abs_1,
        log_abs_2=log_abs_2,
        cond_1=cond_1,
        cond_2=cond_2,
        evidence=tuple(evidence_label(v) for v in log_abs_1),
        inclusion=inclusion,
        n=n,
    )
