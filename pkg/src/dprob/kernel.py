"""Squared-exponential kernel, reference hat matrix and log marginal likelihood.

The reference regression model puts a zero-mean Gaussian-process prior with
covariance ``sigma0^2 * K`` on the mean vector and an improper 1/sigma0^2
prior on the noise variance. Everything downstream needs only a handful of
scalars derived from the symmetric eigendecomposition of K:

* the hat matrix ``H = K (K + I)^{-1}`` applied through the eigenbasis,
* ``tr(H)``, ``log det(I + H)``,
* the residual quadratic form ``rss0 = y' (I - H) y``.

A single eigendecomposition serves all of them, which is why it (and not a
Cholesky factorization) is the canonical route here. The squared-exponential
kernel is severely ill-conditioned at small bandwidths, so eigenvalues are
clamped at zero and anything below ``-jitter_tol`` is treated as a hard
failure of the kernel construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "KernelError",
    "KernelConfig",
    "ReferenceFit",
    "build_kernel",
    "cross_kernel",
    "fit_reference",
    "log_marginal",
]

JITTER_REL_TOL = 1e-8  # eigenvalues below -JITTER_REL_TOL * tau^2 are an error


class KernelError(RuntimeError):
    """Raised when a kernel matrix is numerically unusable."""


@dataclass(frozen=True)
class KernelConfig:
    """Squared-exponential kernel hyperparameters.

    Attributes
    ----------
    bandwidths : (p,) ndarray
        Per-covariate bandwidths (lambda); strictly positive.
    amplitude : float
        Amplitude (tau); strictly positive. The kernel is
        ``k(u, v) = tau^2 exp(-sum_j (u_j - v_j)^2 / (2 lambda_j^2))``.
    """

    bandwidths: np.ndarray
    amplitude: float

    def __post_init__(self):
        bw = np.atleast_1d(np.asarray(self.bandwidths, dtype=float))
        object.__setattr__(self, "bandwidths", bw)
        object.__setattr__(self, "amplitude", float(self.amplitude))
        if bw.ndim != 1 or bw.size == 0:
            raise ValueError("bandwidths must be a nonempty vector")
        if not np.all(np.isfinite(bw)) or np.any(bw <= 0):
            raise ValueError("bandwidths must be strictly positive and finite")
        if not np.isfinite(self.amplitude) or self.amplitude <= 0:
            raise ValueError("amplitude must be strictly positive and finite")
        bw.setflags(write=False)

    def to_dict(self) -> dict:
        return {"bandwidths": self.bandwidths.tolist(), "amplitude": self.amplitude}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelConfig":
        return cls(np.asarray(d["bandwidths"], dtype=float), float(d["amplitude"]))


@dataclass(frozen=True)
class ReferenceFit:
    """Eigendecomposition-backed reference fit.

    ``eigvals``/``eigvecs`` factor the kernel matrix K (eigenvalues clamped
    at zero); the hat matrix is ``H = V diag(w / (1 + w)) V'``. ``rss0`` is
    the reference residual quadratic form ``y'(I - H)y``, accumulated in the
    eigenbasis to avoid cancellation and clamped at zero.
    """

    eigvals: np.ndarray
    eigvecs: np.ndarray
    trH: float
    logdet_IplusH: float
    rss0: float
    n: int
    eig_y: np.ndarray  # V' y, cached for quadratic forms

    @property
    def hat_diag_eigvals(self) -> np.ndarray:
        """Eigenvalues of H, each in [0, 1)."""
        return self.eigvals / (1.0 + self.eigvals)

    def hat_apply(self, M: np.ndarray) -> np.ndarray:
        """Apply H to a vector or a matrix of columns through the eigenbasis."""
        h = self.hat_diag_eigvals
        VtM = self.eigvecs.T @ M
        scaled = (h[:, None] * VtM) if M.ndim > 1 else h * VtM
        return self.eigvecs @ scaled

    @property
    def hat_y(self) -> np.ndarray:
        """Fitted reference means H y."""
        return self.eigvecs @ (self.hat_diag_eigvals * self.eig_y)


def _sq_dists(X: np.ndarray) -> list[np.ndarray]:
    """Per-covariate squared-distance matrices, reusable across configs."""
    return [np.square(X[:, j:j + 1] - X[:, j:j + 1].T) for j in range(X.shape[1])]


def _kernel_from_sq_dists(sq_dists, cfg: KernelConfig) -> np.ndarray:
    if len(sq_dists) != cfg.bandwidths.size:
        raise ValueError("bandwidth count does not match the number of covariates")
    expo = np.zeros_like(sq_dists[0])
    for j, d2 in enumerate(sq_dists):
        # exp(-2 log lambda) instead of 1/lambda^2: huge bandwidths underflow
        # to zero contribution instead of overflowing.
        expo += d2 * np.exp(-2.0 * np.log(cfg.bandwidths[j]))
    K = cfg.amplitude ** 2 * np.exp(-0.5 * expo)
    return 0.5 * (K + K.T)


def build_kernel(X: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Kernel matrix ``K[i, l] = tau^2 exp(-sum_j (x_ij - x_lj)^2 / (2 lambda_j^2))``.

    Symmetry is exact by construction. ``X`` must be finite, one row per
    observation.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite entries")
    return _kernel_from_sq_dists(_sq_dists(X), cfg)


def cross_kernel(X_test: np.ndarray, X_train: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Rectangular kernel block k(X_test, X_train)."""
    X_test = np.atleast_2d(np.asarray(X_test, dtype=float))
    X_train = np.atleast_2d(np.asarray(X_train, dtype=float))
    expo = np.zeros((X_test.shape[0], X_train.shape[0]))
    for j in range(X_train.shape[1]):
        d2 = np.square(X_test[:, j:j + 1] - X_train[:, j][None, :])
        expo += d2 * np.exp(-2.0 * np.log(cfg.bandwidths[j]))
    return cfg.amplitude ** 2 * np.exp(-0.5 * expo)


def _clamped_eigh(K: np.ndarray, cfg: KernelConfig):
    try:
        w, V = np.linalg.eigh(K)
    except np.linalg.LinAlgError as exc:
        raise KernelError(f"eigendecomposition failed: {exc}") from exc
    jitter_tol = JITTER_REL_TOL * cfg.amplitude ** 2
    if w.min() < -jitter_tol:
        raise KernelError(
            f"kernel is not PSD: eigenvalue {w.min():.3e} below -{jitter_tol:.3e}")
    return np.clip(w, 0.0, None), V


def fit_reference(X: np.ndarray, y: np.ndarray, cfg: KernelConfig) -> ReferenceFit:
    """Eigendecompose the kernel and assemble the reference-fit scalars."""
    y = np.asarray(y, dtype=float)
    K = build_kernel(X, cfg)
    w, V = _clamped_eigh(K, cfg)
    h = w / (1.0 + w)
    z = V.T @ y
    rss0 = max(float(np.sum(z * z / (1.0 + w))), 0.0)
    return ReferenceFit(
        eigvals=w,
        eigvecs=V,
        trH=float(np.sum(h)),
        logdet_IplusH=float(np.sum(np.log1p(h))),
        rss0=rss0,
        n=y.size,
        eig_y=z,
    )


def log_marginal(X: np.ndarray, y: np.ndarray, cfg: KernelConfig) -> float:
    """Log marginal likelihood of the data in (bandwidths, amplitude).

    Returns ``-0.5 log|K + I| - (n/2) log(y'(K + I)^{-1} y)``; the additive
    constant from integrating the noise variance is omitted throughout (only
    differences and the argmax are ever used). Computed via the kernel
    eigendecomposition: ``log|K + I| = sum log(1 + w_i)``.
    """
    y = np.asarray(y, dtype=float)
    K = build_kernel(X, cfg)
    w, V = _clamped_eigh(K, cfg)
    z = V.T @ y
    quad = float(np.sum(z * z / (1.0 + w)))
    if quad <= 0.0:
        raise KernelError("y'(K + I)^{-1} y is non-positive; kernel failure")
    return float(-0.5 * np.sum(np.log1p(w)) - 0.5 * y.size * np.log(quad))
