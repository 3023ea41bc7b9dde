"""Noise-proxy policies and the data-driven error bounds they feed.

The proxy constant enters only the reported bounds, never the estimator
itself. Policies: a uniform bound L on regressors and errors (proxy L^4), a
fixed user-supplied value, or a plug-in using the worst-column residual
moment at a reference coefficient vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, Normalization, q_hat
from .sensitivity import DEGENERACY_TOL

BOUNDED = "bounded"
PLUGIN = "plugin"
FIXED = "fixed"


class DegenerateBoundsError(ValueError):
    """The sensitivity constant is too small for finite bounds."""


@dataclass(frozen=True)
class QStarPolicy:
    """How to resolve the noise-proxy constant.

    kind "bounded" takes value = L and resolves to L**4; "fixed" passes its
    value through; "plugin" evaluates the worst-column residual moment at a
    reference vector (the simulation truth when known, otherwise the fitted
    coefficients). Plug-in values carry no finite-sample guarantee and are
    flagged downstream.
    """

    kind: str
    value: float | None = None

    def __post_init__(self):
        if self.kind not in (BOUNDED, PLUGIN, FIXED):
            raise ValueError(f"unknown qstar policy {self.kind!r}")
        if self.kind in (BOUNDED, FIXED):
            if self.value is None or not self.value > 0:
                raise ValueError(f"{self.kind} policy needs a positive value")

    @staticmethod
    def bounded(limit: float) -> "QStarPolicy":
        return QStarPolicy(BOUNDED, float(limit))

    @staticmethod
    def plugin() -> "QStarPolicy":
        return QStarPolicy(PLUGIN, None)

    @staticmethod
    def fixed(value: float) -> "QStarPolicy":
        return QStarPolicy(FIXED, float(value))


@dataclass(frozen=True)
class ErrorBounds:
    """Data-driven bounds on the l1 estimation error and on the in-sample
    prediction error, together with the inputs they were evaluated at.

    Algebraically prediction_bound = l1_bound * (2 gamma + 1) sqrt(qstar)
    * r / gamma.
    """

    l1_bound: float
    prediction_bound: float
    gamma: float
    kappa: float
    qstar: float
    r: float


def resolve_qstar(policy: QStarPolicy, data: Dataset | None = None,
                  norm: Normalization | None = None,
                  beta_ref: np.ndarray | None = None) -> float:
    """Resolve the policy to a number. Plug-in needs data, scaling and a
    reference vector; a zero plug-in value (noiseless reference) is returned
    as-is and must be treated as "bounds unavailable" by the caller."""
    if policy.kind == BOUNDED:
        return float(policy.value) ** 4
    if policy.kind == FIXED:
        return float(policy.value)
    if data is None or norm is None or beta_ref is None:
        raise ValueError("plugin policy requires data, normalization and a "
                         "reference coefficient vector")
    return q_hat(data, norm, beta_ref)


def error_bounds(gamma: float, kappa: float, qstar: float,
                 r: float) -> ErrorBounds:
    """Evaluate the two bound formulas:

        l1:         (gamma+2)(2 gamma+1) sqrt(qstar) r   / (gamma kappa)
        prediction: (gamma+2)(2 gamma+1)^2 qstar     r^2 / (gamma^2 kappa)
    """
    if gamma <= 0 or r <= 0 or qstar <= 0:
        raise ValueError("gamma, qstar and r must be positive")
    if kappa <= DEGENERACY_TOL:
        raise DegenerateBoundsError(
            "sensitivity below degeneracy tolerance; bounds are infinite")
    g2 = gamma + 2.0
    tg1 = 2.0 * gamma + 1.0
    l1 = g2 * tg1 * np.sqrt(qstar) * r / (gamma * kappa)
    pred = g2 * tg1 * tg1 * qstar * r * r / (gamma * gamma * kappa)
    return ErrorBounds(l1_bound=float(l1), prediction_bound=float(pred),
                       gamma=float(gamma), kappa=float(kappa),
                       qstar=float(qstar), r=float(r))
