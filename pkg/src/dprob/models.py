"""Candidate linear models: covariate subsets, hat matrices, divergence scalars.

Every candidate is an intercept-plus-subset linear model. Under the flat
coefficient prior its hat matrix is the orthogonal projector onto the span
of ``[1, X_subset]``; under a Zellner-style prior with precision
``X_j'X_j / g`` applied to the full coefficient vector (intercept included),
the hat matrix is the same projector scaled by ``g / (1 + g)``. Writing
``H_j = c Q Q'`` with Q orthonormal makes every scalar needed downstream an
O(n p_j^2) computation:

    (I + H_j)^{-1} = I - (c / (1 + c)) Q Q'        (rank-m Woodbury identity)

Note the baseline Bayes-factor module uses the conventional centered,
intercept-exempt g-prior instead; the two conventions are deliberately kept
in separate modules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .kernel import ReferenceFit

__all__ = [
    "RankDeficiencyError",
    "CandidateModel",
    "ModelFit",
    "enumerate_subsets",
    "design_matrix",
    "fit_candidate",
]

MAX_ENUM_P = 20  # 2^p enumeration cap


class RankDeficiencyError(ValueError):
    """Raised when a candidate design matrix is column-rank deficient."""


@dataclass(frozen=True)
class CandidateModel:
    """Covariate subset plus coefficient-prior mode.

    ``subset`` holds 0-based covariate indices (empty tuple = intercept-only
    null model). ``prior`` is "flat" (improper, precision zero) or "gprior";
    the latter requires ``g > 0``.
    """

    subset: tuple[int, ...]
    prior: str = "flat"
    g: float | None = None

    def __post_init__(self):
        subset = tuple(int(j) for j in self.subset)
        object.__setattr__(self, "subset", subset)
        if len(set(subset)) != len(subset) or any(j < 0 for j in subset):
            raise ValueError(f"subset indices must be unique and nonnegative: {subset}")
        if self.prior not in ("flat", "gprior"):
            raise ValueError(f"prior must be 'flat' or 'gprior', got {self.prior!r}")
        if self.prior == "gprior":
            if self.g is None or not self.g > 0:
                raise ValueError("gprior mode requires g > 0")
        elif self.g is not None:
            raise ValueError("g is only meaningful with prior='gprior'")

    @property
    def p_j(self) -> int:
        return len(self.subset)

    def label(self, names) -> str:
        """Comma-joined covariate names, '(intercept)' for the null model."""
        if not self.subset:
            return "(intercept)"
        return ",".join(names[j] for j in self.subset)

    def shrinkage(self) -> float:
        """Scale c in H_j = c * projector: 1 for flat, g/(1+g) for gprior."""
        if self.prior == "flat":
            return 1.0
        return self.g / (1.0 + self.g)


@dataclass(frozen=True)
class ModelFit:
    """Per-model scalars entering the divergence estimators."""

    trHj: float
    logdet_IplusHj: float
    rssj: float          # y'(I - H_j)y
    qform_diff: float    # y'(H_j - H)^2 y
    qform_pred: float    # y'(H_j - H)'(I + H_j)^{-1}(H_j - H)y
    trace_pred: float    # tr{(I + H_j)^{-1}(I + H)}
    p_j: int


def enumerate_subsets(p: int, prior: str = "flat", g: float | None = None) -> list[CandidateModel]:
    """All 2^p covariate subsets in binary counting order (bit j = covariate j).

    The first model is always the intercept-only null model; every model
    implicitly includes the intercept.
    """
    if p < 1:
        raise ValueError(f"need at least one covariate to enumerate, got p={p}")
    if p > MAX_ENUM_P:
        raise ValueError(f"p={p} exceeds the 2^p enumeration cap ({MAX_ENUM_P})")
    models = []
    for mask in range(2 ** p):
        subset = tuple(j for j in range(p) if (mask >> j) & 1)
        models.append(CandidateModel(subset, prior=prior, g=g))
    return models


def design_matrix(ds: Dataset, model: CandidateModel) -> np.ndarray:
    """Intercept-augmented design [1, X_subset] on the dataset's rows."""
    cols = [np.ones(ds.n)]
    cols.extend(ds.X[:, j] for j in model.subset)
    return np.column_stack(cols)


def _thin_qr(Xj: np.ndarray, model: CandidateModel, names):
    """Thin QR of the design; errors name the collinear columns."""
    Q, R = np.linalg.qr(Xj)
    diag = np.abs(np.diag(R))
    tol = Xj.shape[0] * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    bad = np.nonzero(diag <= tol)[0]
    if bad.size:
        labels = ["intercept" if k == 0 else names[model.subset[k - 1]] for k in bad]
        raise RankDeficiencyError(
            f"design for model {model.label(names)!r} is rank deficient; "
            f"collinear columns: {', '.join(labels)}")
    return Q, R


def fit_candidate(ds: Dataset, model: CandidateModel, ref: ReferenceFit,
                  hat_override: np.ndarray | None = None) -> ModelFit:
    """Compute the six divergence scalars for one candidate against a reference.

    ``hat_override`` substitutes an explicit hat matrix for the candidate
    (test hook used to inject H itself); normal callers leave it None.
    """
    y = ds.y
    n = ds.n
    hat_y_ref = ref.hat_y
    if hat_override is not None:
        Hj = np.asarray(hat_override, dtype=float)
        hj_y = Hj @ y
        rssj = max(float(y @ y - y @ hj_y), 0.0)
        v = hj_y - hat_y_ref
        M = np.linalg.inv(np.eye(n) + Hj)
        IH = np.eye(n) + ref.eigvecs @ (ref.hat_diag_eigvals[:, None] * ref.eigvecs.T)
        return ModelFit(
            trHj=float(np.trace(Hj)),
            logdet_IplusHj=float(np.linalg.slogdet(np.eye(n) + Hj)[1]),
            rssj=rssj,
            qform_diff=float(v @ v),
            qform_pred=float(v @ (M @ v)),
            trace_pred=float(np.trace(M @ IH)),
            p_j=model.p_j,
        )

    c = model.shrinkage()
    Xj = design_matrix(ds, model)
    Q, _ = _thin_qr(Xj, model, ds.names)
    m = Q.shape[1]

    Qty = Q.T @ y
    rssj = max(float(y @ y - c * (Qty @ Qty)), 0.0)
    hj_y = c * (Q @ Qty)
    v = hj_y - hat_y_ref
    s = c / (1.0 + c)
    Qtv = Q.T @ v
    qform_diff = float(v @ v)
    qform_pred = max(float(v @ v - s * (Qtv @ Qtv)), 0.0)
    # tr{(I+H_j)^{-1}(I+H)} = n + tr(H) - s (m + tr(Q' H Q))
    HQ = ref.hat_apply(Q)
    trace_pred = float(n + ref.trH - s * (m + np.sum(Q * HQ)))
    return ModelFit(
        trHj=c * m,
        logdet_IplusHj=m * float(np.log1p(c)),
        rssj=rssj,
        qform_diff=qform_diff,
        qform_pred=qform_pred,
        trace_pred=trace_pred,
        p_j=model.p_j,
    )
