"""Regression data model: dataset container, column normalization, and the
empirical moment quantities that the estimator's constraint set and the
error-bound machinery are built from.

All types are immutable after construction and all operations are pure
functions, so everything here is safe to share across workers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

IDENTITY = "identity"
RMS = "rms"
MAXABS = "maxabs"
NORMALIZATION_MODES = (IDENTITY, RMS, MAXABS)


class DegenerateColumnError(ValueError):
    """A regressor column is identically zero, so its scale weight would be
    infinite."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Observed responses and regressors, with optional simulation truth.

    ``x`` is n-by-p with one observation per row; ``y`` has length n;
    ``beta_true`` (length p) is only set when the data was generated with a
    known coefficient vector.
    """

    x: np.ndarray
    y: np.ndarray
    beta_true: np.ndarray | None = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.ndim != 2:
            raise ValueError("x must be a 2-d array")
        if x.shape[0] != y.shape[0]:
            raise ValueError(
                f"x has {x.shape[0]} rows but y has length {y.shape[0]}")
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("x must have at least one row and one column")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise ValueError("x and y must be finite")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))
        if self.beta_true is not None:
            bt = np.atleast_1d(np.asarray(self.beta_true, dtype=float))
            if bt.shape[0] != x.shape[1]:
                raise ValueError("beta_true length must match regressor count")
            if not np.all(np.isfinite(bt)):
                raise ValueError("beta_true must be finite")
            object.__setattr__(self, "beta_true", _frozen(bt))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class Normalization:
    """Diagonal column scaling; ``diag`` holds the positive weights."""

    mode: str
    diag: np.ndarray

    def __post_init__(self):
        if self.mode not in NORMALIZATION_MODES:
            raise ValueError(f"unknown normalization mode {self.mode!r}")
        diag = np.atleast_1d(np.asarray(self.diag, dtype=float))
        if not np.all(np.isfinite(diag)) or (diag <= 0).any():
            raise ValueError("normalization weights must be positive finite")
        object.__setattr__(self, "diag", _frozen(diag))

    @property
    def p(self) -> int:
        return self.diag.shape[0]


@dataclass(frozen=True)
class GramMatrix:
    """Scaled second-moment matrix of the regressors (symmetric PSD)."""

    psi: np.ndarray

    def __post_init__(self):
        psi = np.atleast_2d(np.asarray(self.psi, dtype=float))
        if psi.shape[0] != psi.shape[1]:
            raise ValueError("psi must be square")
        scale = max(np.abs(psi).max(), 1.0)
        if np.abs(psi - psi.T).max() > 1e-12 * scale:
            raise ValueError("psi must be symmetric")
        object.__setattr__(self, "psi", _frozen(psi))

    @property
    def p(self) -> int:
        return self.psi.shape[0]


def build_normalization(x: np.ndarray, mode: str = RMS) -> Normalization:
    """Column scale weights: all ones, inverse root-mean-square, or inverse
    max absolute value, per ``mode``.

    Raises DegenerateColumnError when a column is identically zero under the
    rms or maxabs modes; under identity a zero column only triggers a
    warning-free pass (the weight is 1 regardless).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.size == 0:
        raise ValueError("x must be non-empty")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    p = x.shape[1]
    if mode == IDENTITY:
        bad = np.flatnonzero(np.abs(x).max(axis=0) == 0.0)
        if bad.size:
            warnings.warn(f"column {bad[0]} is identically zero",
                          RuntimeWarning, stacklevel=2)
        return Normalization(IDENTITY, np.ones(p))
    if mode == RMS:
        ms = (x ** 2).mean(axis=0)
        bad = np.flatnonzero(ms == 0.0)
        if bad.size:
            raise DegenerateColumnError(
                f"column {bad[0]} is identically zero (rms weight undefined)")
        return Normalization(RMS, 1.0 / np.sqrt(ms))
    if mode == MAXABS:
        mx = np.abs(x).max(axis=0)
        bad = np.flatnonzero(mx == 0.0)
        if bad.size:
            raise DegenerateColumnError(
                f"column {bad[0]} is identically zero (maxabs weight undefined)")
        return Normalization(MAXABS, 1.0 / mx)
    raise ValueError(f"unknown normalization mode {mode!r}")


def compute_psi(x: np.ndarray, norm: Normalization) -> GramMatrix:
    """Scaled Gram matrix of the regressors: D (X'X / n) D."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, p = x.shape
    if p != norm.p:
        raise ValueError("normalization length does not match column count")
    d = norm.diag
    g = x.T @ x / n
    psi = d[:, None] * g * d[None, :]
    psi = 0.5 * (psi + psi.T)
    return GramMatrix(psi)


def residual_gram(data: Dataset, norm: Normalization,
                  beta: np.ndarray) -> np.ndarray:
    """Scaled regressor-residual correlation vector D X'(Y - X beta) / n.

    The sup-norm of this vector against sigma * r is the estimator's
    feasibility test.
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if beta.shape[0] != data.p or norm.p != data.p:
        raise ValueError("dimension mismatch")
    resid = data.y - data.x @ beta
    return norm.diag * (data.x.T @ resid) / data.n


def q_hat(data: Dataset, norm: Normalization, beta: np.ndarray) -> float:
    """Worst-column average of squared regressor-weighted residuals:
    max_k (d_kk^2 / n) sum_i x_ki^2 (y_i - x_i'beta)^2.
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if beta.shape[0] != data.p or norm.p != data.p:
        raise ValueError("dimension mismatch")
    resid = data.y - data.x @ beta
    per_col = (data.x ** 2).T @ (resid ** 2) / data.n
    return float(np.max(norm.diag ** 2 * per_col))
