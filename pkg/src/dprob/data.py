"""Tabular data loading, covariate rescaling and train/test splitting.

All downstream machinery reads from a single immutable :class:`Dataset`:
covariates rescaled to [0, 1] column-wise (the kernel bandwidths are
calibrated for unit-range inputs), response left in original units.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["DataError", "Dataset", "SplitPlan", "load_csv", "split"]


class DataError(ValueError):
    """Raised for unusable input data (missing file, bad cells, bad columns)."""


@dataclass(frozen=True)
class Dataset:
    """Design matrix plus response, with rescaling metadata.

    Attributes
    ----------
    X : (n, p) ndarray
        Covariates after column-wise rescaling to [0, 1].
    y : (n,) ndarray
        Response, not rescaled.
    names : tuple of str
        Covariate labels, in column order.
    rescale_bounds : tuple of (min, max) pairs
        Original per-covariate bounds recorded at load time; applying
        ``x * (max - min) + min`` column-wise recovers the raw covariates.
    """

    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]
    rescale_bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(
            self, "rescale_bounds",
            tuple((float(lo), float(hi)) for lo, hi in self.rescale_bounds),
        )
        n, p = X.shape
        if n < 3 or p < 1:
            raise DataError(f"need n >= 3 rows and p >= 1 covariates, got {n} x {p}")
        if y.shape != (n,):
            raise DataError(f"response length {y.shape} does not match n={n}")
        if len(self.names) != p or len(self.rescale_bounds) != p:
            raise DataError("names/rescale_bounds length must equal the number of covariates")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains non-finite entries")
        for name, (lo, hi) in zip(self.names, self.rescale_bounds):
            if not hi > lo:
                raise DataError(f"covariate {name!r} has degenerate bounds ({lo}, {hi})")
        X.setflags(write=False)
        y.setflags(write=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def raw_covariates(self) -> np.ndarray:
        """Undo the [0, 1] rescaling using the stored bounds."""
        lo = np.array([b[0] for b in self.rescale_bounds])
        hi = np.array([b[1] for b in self.rescale_bounds])
        return self.X * (hi - lo) + lo

    def subset_rows(self, rows: np.ndarray) -> "Dataset":
        """New Dataset restricted to ``rows``; bounds are kept, not recomputed."""
        return Dataset(self.X[rows], self.y[rows], self.names, self.rescale_bounds)

    def to_debug_json(self) -> str:
        """JSON dump of shape, column names and rescale bounds (no data)."""
        return json.dumps({
            "n": self.n,
            "p": self.p,
            "names": list(self.names),
            "rescale_bounds": [list(b) for b in self.rescale_bounds],
        })


@dataclass(frozen=True)
class SplitPlan:
    """Disjoint train/test row indices, reproducible from ``seed``."""

    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int

    def __post_init__(self):
        tr = np.asarray(self.train_indices, dtype=np.int64)
        te = np.asarray(self.test_indices, dtype=np.int64)
        object.__setattr__(self, "train_indices", tr)
        object.__setattr__(self, "test_indices", te)
        n = tr.size + te.size
        combined = np.concatenate([tr, te])
        if np.intersect1d(tr, te).size or not np.array_equal(np.sort(combined), np.arange(n)):
            raise ValueError("train/test indices must partition 0..n-1")
        tr.setflags(write=False)
        te.setflags(write=False)


def _parse_cell(text: str, row: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"cell at row {row}, column {col!r} does not parse as a real: {text!r}")
    if not math.isfinite(value):
        raise DataError(f"cell at row {row}, column {col!r} is not finite: {text!r}")
    return value


def load_csv(path, response_name: str) -> Dataset:
    """Load a comma-separated file and rescale covariates to [0, 1].

    The file must have a header row; ``response_name`` selects the response
    column, every other column becomes a covariate (order preserved). Uses a
    plain "." decimal dialect, no locale handling. Constant covariate
    columns are rejected rather than silently dropped.
    """
    try:
        fh = open(path, "r", newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty")
        header = [h.strip().strip('"') for h in header]
        if response_name not in header:
            raise DataError(f"response column {response_name!r} not among headers {header}")
        rows = []
        for i, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # trailing blank line
            if len(row) != len(header):
                raise DataError(f"row {i} has {len(row)} cells, expected {len(header)}")
            rows.append([_parse_cell(c, i, header[j]) for j, c in enumerate(row)])
    if len(rows) < 3:
        raise DataError(f"{path} has {len(rows)} data rows; need at least 3")
    table = np.array(rows, dtype=float)
    resp_idx = header.index(response_name)
    y = table[:, resp_idx]
    cov_idx = [j for j in range(len(header)) if j != resp_idx]
    if not cov_idx:
        raise DataError("no covariate columns besides the response")
    names = [header[j] for j in cov_idx]
    raw = table[:, cov_idx]
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    for j, name in enumerate(names):
        if hi[j] == lo[j]:
            raise DataError(f"covariate column {name!r} is constant")
    X = (raw - lo) / (hi - lo)
    return Dataset(X, y, names, tuple(zip(lo.tolist(), hi.tolist())))


def from_arrays(X, y, names=None, rescale_bounds=None) -> Dataset:
    """Wrap in-memory arrays as a Dataset without rescaling.

    Intended for synthetic data already living on known bounds; defaults to
    identity bounds (0, 1) so the stored covariates are the raw ones.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    p = X.shape[1]
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(p)) if p > 1 else ("x",)
    if rescale_bounds is None:
        rescale_bounds = tuple((0.0, 1.0) for _ in range(p))
    return Dataset(X, np.asarray(y, dtype=float), tuple(names), tuple(rescale_bounds))


def split(ds: Dataset, train_fraction: float, seed: int) -> SplitPlan:
    """Uniformly random train/test partition with ``round(frac * n)`` train rows.

    The same (dataset, fraction, seed) triple always produces the same plan.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = ds.n
    n_train = int(round(train_fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    if n_train < ds.p + 2:
        raise DataError(
            f"train size {n_train} is too small for p={ds.p} covariates (need >= p + 2)")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    return SplitPlan(np.sort(perm[:n_train]), np.sort(perm[n_train:]), seed)
