"""The self-tuned Dantzig-type estimator: a single linear program over
coefficients and a noise-level variable, with tuning constants computed from
the data and a grid search over the cone parameter.

The estimator minimizes |D^{-1} beta|_1 + c sigma subject to the scaled
regressor-residual correlations being bounded by sigma * r componentwise,
where r depends only on (p, n, alpha) and c couples the penalty to the
computed sensitivity. No knowledge of the noise level is required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import (ErrorBounds, QStarPolicy, error_bounds, resolve_qstar,
                     PLUGIN)
from .core import (Dataset, GramMatrix, Normalization, RMS,
                   build_normalization, compute_psi, residual_gram)
from .lp import LpProblem, solve_lp
from .sensitivity import DEGENERACY_TOL, SensitivityReport, kappa_one_zero

DEFAULT_GAMMA_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)
SELECT_BY_L1 = "l1"
SELECT_BY_PREDICTION = "prediction"


class DegenerateSensitivityError(RuntimeError):
    """The sensitivity constant is numerically zero, so the tuning constant
    c is undefined."""


@dataclass(frozen=True)
class FitOptions:
    """User-provided knobs for a fit.

    ``s`` is the sparsity certificate (an asserted upper bound on the true
    support size); it is required because the tuning constant depends on it
    and the procedure has no way to infer it. ``selection_rule`` picks which
    data-driven bound drives the grid search over gamma.
    """

    s: int
    alpha: float = 0.05
    gamma_grid: tuple[float, ...] = DEFAULT_GAMMA_GRID
    normalization: str = RMS
    qstar: QStarPolicy = field(default_factory=QStarPolicy.plugin)
    selection_rule: str = SELECT_BY_L1
    lp_max_iterations: int | None = None
    workers: int | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.s < 1:
            raise ValueError("sparsity certificate s must be >= 1")
        grid = tuple(float(g) for g in self.gamma_grid)
        if not grid or any(g <= 0 for g in grid):
            raise ValueError("gamma grid must be nonempty and positive")
        object.__setattr__(self, "gamma_grid", grid)
        if self.selection_rule not in (SELECT_BY_L1, SELECT_BY_PREDICTION):
            raise ValueError(f"unknown selection rule {self.selection_rule!r}")


@dataclass(frozen=True)
class GammaTableEntry:
    """One grid point of the gamma search."""

    gamma: float
    kappa: float
    degenerate: bool
    l1_bound: float
    prediction_bound: float
    qstar: float
    qstar_provisional: bool
    sensitivity: SensitivityReport


@dataclass(frozen=True)
class FitResult:
    """Fitted coefficients, self-tuned noise level, tuning constants, the
    sensitivity report behind c, and the data-driven error bounds.

    ``bounds`` is None when the resolved noise proxy is degenerate (zero
    plug-in value on noiseless data); ``bounds_caveat`` then says why. The
    fitted pair always satisfies the correlation constraint within the LP
    tolerance: sup-norm of the scaled residual correlations <= sigma_hat * r.
    """

    beta_hat: np.ndarray
    sigma_hat: float
    r: float
    c: float
    gamma: float
    sensitivity: SensitivityReport
    bounds: ErrorBounds | None
    bounds_caveat: str | None
    normalization: Normalization
    lp_stats: dict
    gamma_table: tuple[GammaTableEntry, ...] = ()


def tuning_r(p: int, n: int, alpha: float) -> float:
    """Constraint level sqrt(2 log(4 p / alpha) / n)."""
    if p < 1 or n < 1:
        raise ValueError("p and n must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return math.sqrt(2.0 * math.log(4.0 * p / alpha) / n)


def tuning_c(r: float, gamma: float, kappa: float) -> float:
    """Penalty coupling (2 gamma + 1) r / kappa."""
    if kappa <= DEGENERACY_TOL:
        raise DegenerateSensitivityError("sensitivity degenerate; c undefined")
    return (2.0 * gamma + 1.0) * r / kappa


def build_fit_problem(data: Dataset, norm: Normalization, r: float,
                      c_penalty: float) -> LpProblem:
    """Standard-form program for the estimator.

    Variables (beta+, beta-, sigma); objective sum_k (beta+_k + beta-_k)/d_kk
    + c_penalty * sigma; rows force |D X'(Y - X beta)/n|_inf <= sigma r.
    """
    p = data.p
    m = norm.diag[:, None] * (data.x.T @ data.x) / data.n
    g = norm.diag * (data.x.T @ data.y) / data.n
    cost = np.concatenate([1.0 / norm.diag, 1.0 / norm.diag, [c_penalty]])
    a = np.zeros((2 * p, 2 * p + 1))
    a[:p, :p] = -m
    a[:p, p:2 * p] = m
    a[:p, -1] = -r
    a[p:, :p] = m
    a[p:, p:2 * p] = -m
    a[p:, -1] = -r
    b = np.concatenate([-g, g])
    return LpProblem(cost, a_ub=a, b_ub=b)


def criterion_value(norm: Normalization, beta: np.ndarray, sigma: float,
                    c_penalty: float) -> float:
    """Objective |D^{-1} beta|_1 + c sigma at a candidate pair."""
    return float(np.abs(beta / norm.diag).sum() + c_penalty * sigma)


def constraint_gap(data: Dataset, norm: Normalization, beta: np.ndarray,
                   sigma: float, r: float) -> float:
    """Sup-norm of the scaled residual correlations minus sigma * r;
    nonpositive (within tolerance) means the pair is feasible."""
    return float(np.abs(residual_gram(data, norm, beta)).max() - sigma * r)


def _resolve_selection_qstar(options: FitOptions, data: Dataset,
                             norm: Normalization) -> tuple[float, bool]:
    """Noise proxy used during gamma selection.

    The plug-in policy without a known truth would need the fit itself, so
    selection falls back to a provisional value of 1; the argmin is unchanged
    because the proxy enters every grid entry as the same positive factor.
    """
    if options.qstar.kind == PLUGIN and data.beta_true is None:
        return 1.0, True
    beta_ref = data.beta_true
    value = resolve_qstar(options.qstar, data, norm, beta_ref)
    if value <= 0.0:
        return 1.0, True
    return value, False


def select_gamma(data: Dataset, options: FitOptions,
                 psi: GramMatrix | None = None,
                 norm: Normalization | None = None,
                 ) -> tuple[float, tuple[GammaTableEntry, ...]]:
    """Minimize the data-driven bound over the gamma grid.

    Returns the winning gamma (lowest value on ties) and the full table.
    Grid entries with degenerate sensitivity are kept in the table but
    excluded from the argmin; if every entry is degenerate the search fails.
    """
    if norm is None:
        norm = build_normalization(data.x, options.normalization)
    if psi is None:
        psi = compute_psi(data.x, norm)
    r = tuning_r(data.p, data.n, options.alpha)
    qstar, provisional = _resolve_selection_qstar(options, data, norm)

    entries = []
    for gamma in options.gamma_grid:
        sens = kappa_one_zero(psi, options.s, gamma, workers=options.workers)
        if sens.degenerate:
            entries.append(GammaTableEntry(
                gamma=gamma, kappa=sens.kappa, degenerate=True,
                l1_bound=float("inf"), prediction_bound=float("inf"),
                qstar=qstar, qstar_provisional=provisional,
                sensitivity=sens))
            continue
        eb = error_bounds(gamma, sens.kappa, qstar, r)
        entries.append(GammaTableEntry(
            gamma=gamma, kappa=sens.kappa, degenerate=False,
            l1_bound=eb.l1_bound, prediction_bound=eb.prediction_bound,
            qstar=qstar, qstar_provisional=provisional, sensitivity=sens))

    usable = [e for e in entries if not e.degenerate]
    if not usable:
        raise DegenerateSensitivityError(
            "sensitivity degenerate at every gamma grid point")
    key = (lambda e: (e.l1_bound, e.gamma)) if \
        options.selection_rule == SELECT_BY_L1 else \
        (lambda e: (e.prediction_bound, e.gamma))
    best = min(usable, key=key)
    return best.gamma, tuple(entries)


def fit_fixed_gamma(data: Dataset, options: FitOptions, gamma: float,
                    sensitivity: SensitivityReport | None = None,
                    gamma_table: tuple[GammaTableEntry, ...] = (),
                    ) -> FitResult:
    """Solve the estimator program at one fixed gamma.

    The program is always feasible (zero coefficients with sigma large
    enough) and bounded below by zero, so the solve must end optimal.
    """
    norm = build_normalization(data.x, options.normalization)
    if sensitivity is None:
        psi = compute_psi(data.x, norm)
        sensitivity = kappa_one_zero(psi, options.s, gamma,
                                     workers=options.workers)
    if sensitivity.degenerate:
        raise DegenerateSensitivityError("sensitivity degenerate; c undefined")
    r = tuning_r(data.p, data.n, options.alpha)
    c_penalty = tuning_c(r, gamma, sensitivity.kappa)

    problem = build_fit_problem(data, norm, r, c_penalty)
    solution = solve_lp(problem, max_iterations=options.lp_max_iterations)
    if solution.status != "optimal":
        raise RuntimeError(
            f"estimator program ended {solution.status}; it is feasible and "
            "bounded, so this is numerical")
    p = data.p
    beta_hat = solution.x[:p] - solution.x[p:2 * p]
    sigma_hat = float(solution.x[2 * p])

    beta_ref = data.beta_true if data.beta_true is not None else beta_hat
    qstar = resolve_qstar(options.qstar, data, norm, beta_ref)
    caveat = None
    eb = None
    if qstar <= 0.0:
        caveat = ("noise proxy resolved to zero (noiseless reference); "
                  "bounds unavailable")
    else:
        eb = error_bounds(gamma, sensitivity.kappa, qstar, r)
        if options.qstar.kind == PLUGIN:
            caveat = "plug-in noise proxy: no finite-sample guarantee"

    return FitResult(
        beta_hat=beta_hat, sigma_hat=sigma_hat, r=r, c=c_penalty,
        gamma=float(gamma), sensitivity=sensitivity, bounds=eb,
        bounds_caveat=caveat, normalization=norm,
        lp_stats={"status": solution.status,
                  "iterations": solution.iterations,
                  "objective_value": solution.objective_value},
        gamma_table=gamma_table)


def fit(data: Dataset, options: FitOptions) -> FitResult:
    """Full pipeline: choose gamma on the grid, then fit at the winner.

    The sensitivity report computed during selection at the winning gamma is
    reused for the fit; identical inputs give identical results.
    """
    norm = build_normalization(data.x, options.normalization)
    psi = compute_psi(data.x, norm)
    gamma_hat, table = select_gamma(data, options, psi=psi, norm=norm)
    chosen = next(e for e in table if e.gamma == gamma_hat)
    return fit_fixed_gamma(data, options, gamma_hat,
                           sensitivity=chosen.sensitivity,
                           gamma_table=table)
