"""Data generation with known ground truth and the Monte Carlo harness that
verifies the self-normalized tail bound, the good-event probability, and the
coverage of the data-driven error bounds.

Every replication derives its own generator from (seed, rep_index), so
results do not depend on execution order and permuting replication indices
permutes the per-replication diagnostics.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bounds import QStarPolicy
from .core import Dataset, build_normalization, compute_psi, q_hat, residual_gram
from .estimator import FitOptions, fit

IID_GAUSSIAN = "iid_gaussian"
TOEPLITZ = "toeplitz"
BOUNDED_UNIFORM = "bounded_uniform"

GAUSSIAN = "gaussian"
RADEMACHER = "rademacher"
HETERO_SYMMETRIC = "hetero_symmetric"


@dataclass(frozen=True)
class DesignSpec:
    """Regressor law: iid standard normal, Toeplitz-correlated normal with
    correlation param^|i-j|, or iid uniform on [-param, param]."""

    kind: str
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in (IID_GAUSSIAN, TOEPLITZ, BOUNDED_UNIFORM):
            raise ValueError(f"unknown design {self.kind!r}")
        if self.kind == TOEPLITZ and not 0.0 <= self.param < 1.0:
            raise ValueError("toeplitz correlation must lie in [0, 1)")
        if self.kind == BOUNDED_UNIFORM and self.param <= 0.0:
            raise ValueError("bounded_uniform needs a positive half-width")


@dataclass(frozen=True)
class NoiseSpec:
    """Error law, symmetric about zero by construction.

    gaussian: scale * N(0,1); rademacher: scale * (+-1); hetero_symmetric:
    per-observation scale drawn uniformly from [0.5, 1.5] * scale, then
    multiplied by an independent random sign and half-normal magnitude.
    """

    kind: str
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, RADEMACHER, HETERO_SYMMETRIC):
            raise ValueError(f"unknown noise {self.kind!r}")
        if self.scale < 0.0:
            raise ValueError("noise scale must be nonnegative")


@dataclass(frozen=True)
class SimConfig:
    """Experiment description; fit options pass through to the estimator.

    When ``fit_options`` is omitted a default is built with the sparsity
    certificate equal to the true support size and, for bounded designs with
    bounded noise, the uniform-bound noise proxy.
    """

    n: int
    p: int
    s_true: int
    design: DesignSpec
    noise: NoiseSpec
    beta_magnitude: float = 1.0
    reps: int = 1
    seed: int = 0
    alpha: float = 0.05
    fit_options: FitOptions | None = None

    def __post_init__(self):
        if self.s_true < 1 or self.s_true > self.p:
            raise ValueError("need 1 <= s_true <= p")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    def resolved_fit_options(self) -> FitOptions:
        if self.fit_options is not None:
            return self.fit_options
        bounded = (self.design.kind == BOUNDED_UNIFORM
                   and self.noise.kind == RADEMACHER
                   and self.noise.scale <= self.design.param)
        qstar = (QStarPolicy.bounded(self.design.param) if bounded
                 else QStarPolicy.plugin())
        return FitOptions(s=self.s_true, alpha=self.alpha, qstar=qstar)


@dataclass(frozen=True)
class CoverageResult:
    """Counts of bound violations across replications.

    ``fit_errors`` counts replications whose fit failed outright (degenerate
    sensitivity or solver trouble); those do not count as violations.
    """

    reps: int
    violations_g: int
    violations_l1: int
    violations_pred: int
    fit_errors: int
    per_rep: tuple[dict, ...]


def _draw_noise(noise: NoiseSpec, rng: np.random.Generator,
                size) -> np.ndarray:
    if noise.kind == GAUSSIAN:
        return noise.scale * rng.standard_normal(size)
    if noise.kind == RADEMACHER:
        return noise.scale * (rng.integers(0, 2, size=size) * 2.0 - 1.0)
    scales = noise.scale * rng.uniform(0.5, 1.5, size=size)
    signs = rng.integers(0, 2, size=size) * 2.0 - 1.0
    magnitudes = np.abs(rng.standard_normal(size))
    return scales * signs * magnitudes


def true_beta(config: SimConfig) -> np.ndarray:
    """Exactly s_true leading nonzeros of magnitude beta_magnitude with
    alternating signs."""
    beta = np.zeros(config.p)
    signs = np.where(np.arange(config.s_true) % 2 == 0, 1.0, -1.0)
    beta[:config.s_true] = config.beta_magnitude * signs
    return beta


def generate(config: SimConfig, rep_index: int) -> Dataset:
    """One replication's dataset, deterministic given (seed, rep_index)."""
    rng = np.random.default_rng([config.seed, rep_index])
    n, p = config.n, config.p
    design = config.design
    if design.kind == IID_GAUSSIAN:
        x = rng.standard_normal((n, p))
    elif design.kind == BOUNDED_UNIFORM:
        x = rng.uniform(-design.param, design.param, size=(n, p))
    else:
        rho = design.param
        cov = rho ** np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
        chol = np.linalg.cholesky(cov)
        x = rng.standard_normal((n, p)) @ chol.T
    beta = true_beta(config)
    u = _draw_noise(config.noise, rng, n)
    y = x @ beta + u
    return Dataset(x=x, y=y, beta_true=beta)


@dataclass(frozen=True)
class EfronCheckResult:
    """Empirical tails of the self-normalized ratio against the theoretical
    envelope 2 exp(-n t^2 / 2)."""

    t: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    reps: int
    skipped: int


def efron_check(noise: NoiseSpec, n: int, reps: int, t_grid,
                seed: int = 0) -> EfronCheckResult:
    """Monte Carlo tail of |mean(eta)| / sqrt(mean(eta^2)) for iid symmetric
    draws, versus the envelope 2 exp(-n t^2 / 2).

    All-zero draws (impossible for the built-in continuous laws and for sign
    noise with positive scale) are skipped and counted.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    rng = np.random.default_rng([seed])
    eta = _draw_noise(noise, rng, (reps, n))
    num = np.abs(eta.mean(axis=1))
    den = np.sqrt((eta ** 2).mean(axis=1))
    ok = den > 0.0
    skipped = int((~ok).sum())
    ratio = num[ok] / den[ok]
    t = np.asarray(list(t_grid), dtype=float)
    empirical = np.array([(ratio >= ti).mean() if ratio.size else 0.0
                          for ti in t])
    bound = 2.0 * np.exp(-n * t ** 2 / 2.0)
    return EfronCheckResult(t=t, empirical=empirical, bound=bound,
                            reps=reps, skipped=skipped)


def run_replication(config: SimConfig, rep_index: int) -> dict:
    """Generate, fit, and evaluate the good event and both bounds."""
    data = generate(config, rep_index)
    options = config.resolved_fit_options()
    norm = build_normalization(data.x, options.normalization)
    psi = compute_psi(data.x, norm)
    beta_star = data.beta_true
    qhat_star = q_hat(data, norm, beta_star)

    row: dict = {"rep": rep_index}
    try:
        result = fit(data, options)
    except Exception as exc:  # noqa: BLE001 - failures are tallied, not fatal
        row.update(error=repr(exc))
        return row

    r = result.r
    corr_noise = float(np.abs(residual_gram(data, norm, beta_star)).max())
    event_g = corr_noise <= r * np.sqrt(qhat_star) + 1e-12
    delta = (result.beta_hat - beta_star) / norm.diag
    l1_err = float(np.abs(delta).sum())
    pred_err = float(delta @ psi.psi @ delta)
    row.update(
        gamma=result.gamma, kappa=result.sensitivity.kappa, r=r,
        sigma_hat=result.sigma_hat, qhat_star=qhat_star,
        corr_noise=corr_noise, event_g=bool(event_g),
        l1_err=l1_err, pred_err=pred_err,
    )
    if result.bounds is None:
        row.update(bounds_available=False)
    else:
        row.update(
            bounds_available=True,
            l1_bound=result.bounds.l1_bound,
            pred_bound=result.bounds.prediction_bound,
            l1_violation=bool(l1_err > result.bounds.l1_bound),
            pred_violation=bool(pred_err > result.bounds.prediction_bound),
        )
    return row


def _coverage_task(args) -> dict:
    config, rep_index = args
    return run_replication(config, rep_index)


def coverage_experiment(config: SimConfig,
                        workers: int | None = None) -> CoverageResult:
    """Run all replications and tally violations of the good event and of
    the two data-driven bounds. Replications are independent work items;
    aggregation is an order-independent count."""
    tasks = [(config, i) for i in range(config.reps)]
    if workers is not None and workers > 1 and config.reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_coverage_task, tasks, chunksize=1))
    else:
        rows = [run_replication(config, i) for i in range(config.reps)]

    rows.sort(key=lambda row: row["rep"])
    fit_errors = sum(1 for row in rows if "error" in row)
    violations_g = sum(1 for row in rows if row.get("event_g") is False)
    violations_l1 = sum(1 for row in rows if row.get("l1_violation"))
    violations_pred = sum(1 for row in rows if row.get("pred_violation"))
    return CoverageResult(
        reps=config.reps, violations_g=violations_g,
        violations_l1=violations_l1, violations_pred=violations_pred,
        fit_errors=fit_errors, per_rep=tuple(rows))
