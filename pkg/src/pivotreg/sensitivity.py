"""Sensitivity analysis of the scaled Gram matrix on the cone of dominant
coordinates: the computable lower-bound constant obtained from p linear
programs, exact small-instance block sensitivities by sign-pattern
enumeration, and sampling diagnostics for the restricted-eigenvalue style
quantities that are not exactly computable.

Indices are 0-based throughout.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import GramMatrix
from .lp import LpProblem, solve_lp

DEGENERACY_TOL = 1e-12

_POOL_PSI = {}


@dataclass(frozen=True)
class ConeSpec:
    """Dominant-coordinate cone: off-support l1 mass at most (1 + gamma)
    times the on-support l1 mass."""

    j: tuple[int, ...]
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        j = tuple(sorted(int(i) for i in set(self.j)))
        object.__setattr__(self, "j", j)


@dataclass(frozen=True)
class SensitivityReport:
    """Result of the p-program sensitivity computation.

    ``per_k`` holds each inner optimum before division by the sparsity
    certificate; ``kappa`` is their minimum divided by ``s``. ``deltas``
    (optional) holds one attaining vector per row. ``degenerate`` is set when
    kappa falls below the degeneracy tolerance, in which case the tuning
    constant downstream would blow up.
    """

    kappa: float
    per_k: np.ndarray
    s: int
    gamma: float
    degenerate: bool
    deltas: np.ndarray | None = None


def _inner_problem(psi: np.ndarray, k: int, budget: float) -> LpProblem:
    """LP for coordinate k with the pinned coordinate substituted out.

    Variables are (z+, z-, t) where z is the coefficient vector without
    coordinate k; rows bound |psi @ delta| by t componentwise plus one
    l1-budget row for |z|_1 <= budget - 1.
    """
    p = psi.shape[0]
    idx = np.concatenate([np.arange(k), np.arange(k + 1, p)])
    psi_rest = psi[:, idx]
    psi_k = psi[:, k]
    nz = p - 1
    c = np.zeros(2 * nz + 1)
    c[-1] = 1.0
    a = np.zeros((2 * p + 1, 2 * nz + 1))
    a[:p, :nz] = psi_rest
    a[:p, nz:2 * nz] = -psi_rest
    a[:p, -1] = -1.0
    a[p:2 * p, :nz] = -psi_rest
    a[p:2 * p, nz:2 * nz] = psi_rest
    a[p:2 * p, -1] = -1.0
    a[2 * p, :2 * nz] = 1.0
    b = np.concatenate([-psi_k, psi_k, [budget - 1.0]])
    return LpProblem(c, a_ub=a, b_ub=b)


def _solve_inner(psi: np.ndarray, k: int, budget: float):
    """Returns (optimum, attaining delta) for the k-th inner program."""
    p = psi.shape[0]
    sol = solve_lp(_inner_problem(psi, k, budget))
    if sol.status != "optimal":
        raise RuntimeError(
            f"inner sensitivity program {k} ended {sol.status}; "
            "the program is feasible and bounded, so this is numerical")
    nz = p - 1
    z = sol.x[:nz] - sol.x[nz:2 * nz]
    delta = np.zeros(p)
    delta[np.arange(p) != k] = z
    delta[k] = 1.0
    return float(sol.objective_value), delta


def _pool_init(psi):
    _POOL_PSI["psi"] = psi


def _pool_task(args):
    k, budget = args
    value, delta = _solve_inner(_POOL_PSI["psi"], k, budget)
    return k, value, delta


def kappa_one_zero(psi: GramMatrix, s: int, gamma: float,
                   keep_solutions: bool = False,
                   workers: int | None = None) -> SensitivityReport:
    """Computable sensitivity lower bound at sparsity certificate ``s``.

    Solves, for each coordinate k, the program

        minimize |psi @ delta|_inf  over  delta_k = 1, |delta|_1 <= (2+gamma)s

    (free coordinates split into positive and negative parts) and returns the
    minimum over k divided by s. Pinning delta_k to +1 only is enough because
    the objective is invariant under delta -> -delta.
    """
    if s < 1:
        raise ValueError("sparsity certificate s must be >= 1")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    mat = psi.psi
    p = mat.shape[0]
    budget = (2.0 + gamma) * s
    per_k = np.empty(p)
    deltas = np.empty((p, p)) if keep_solutions else None

    if workers is not None and workers > 1 and p > 1:
        tasks = [(k, budget) for k in range(p)]
        with ProcessPoolExecutor(max_workers=workers, initializer=_pool_init,
                                 initargs=(mat,)) as pool:
            for k, value, delta in pool.map(_pool_task, tasks,
                                            chunksize=max(1, p // (4 * workers))):
                per_k[k] = value
                if deltas is not None:
                    deltas[k] = delta
    else:
        for k in range(p):
            per_k[k], delta = _solve_inner(mat, k, budget)
            if deltas is not None:
                deltas[k] = delta

    kappa = float(per_k.min()) / s
    return SensitivityReport(
        kappa=kappa, per_k=per_k, s=int(s), gamma=float(gamma),
        degenerate=bool(kappa <= DEGENERACY_TOL), deltas=deltas)


def block_sensitivity_exact(psi: GramMatrix, j: tuple[int, ...],
                            j0: tuple[int, ...], gamma: float) -> float:
    """Exact block sensitivity

        inf |psi @ delta|_inf  over  delta in the cone on J, |delta_{J0}|_1 = 1

    by enumerating sign patterns over J union J0 (which linearize both the
    unit l1 equation and the cone's right-hand side) and solving one LP per
    pattern. By convention the infimum over an empty J0 is +inf.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    mat = psi.psi
    p = mat.shape[0]
    j = tuple(sorted(set(int(i) for i in j)))
    j0 = tuple(sorted(set(int(i) for i in j0)))
    if any(i < 0 or i >= p for i in j + j0):
        raise ValueError("index out of range")
    if not j:
        raise ValueError("J must be nonempty")
    if not j0:
        return float("inf")
    signed = tuple(sorted(set(j) | set(j0)))
    if len(signed) > 12:
        raise ValueError("sign-pattern enumeration limited to |J u J0| <= 12")

    in_j = np.zeros(p, dtype=bool)
    in_j[list(j)] = True
    jc = ~in_j

    best = np.inf
    n_signed = len(signed)
    # delta -> -delta symmetry: fix the first signed coordinate to +1
    for code in range(2 ** (n_signed - 1)):
        sign = {}
        sign[signed[0]] = 1.0
        for t, idx in enumerate(signed[1:]):
            sign[idx] = 1.0 if (code >> t) & 1 else -1.0

        # keep one split column for signed coordinates, both otherwise
        keep_pos = np.array([i not in sign or sign[i] > 0 for i in range(p)])
        keep_neg = np.array([i not in sign or sign[i] < 0 for i in range(p)])
        cols: list[tuple[int, float]] = []  # (coordinate, orientation)
        for i in range(p):
            if keep_pos[i]:
                cols.append((i, 1.0))
        for i in range(p):
            if keep_neg[i]:
                cols.append((i, -1.0))
        nv = len(cols) + 1  # plus t
        a_obj = np.zeros((2 * p, nv))
        for col_idx, (i, orient) in enumerate(cols):
            a_obj[:p, col_idx] = orient * mat[:, i]
            a_obj[p:, col_idx] = -orient * mat[:, i]
        a_obj[:, -1] = -1.0

        cone = np.zeros(nv)
        for col_idx, (i, _) in enumerate(cols):
            if jc[i]:
                cone[col_idx] = 1.0  # each split part adds to off-mass
            else:
                cone[col_idx] = -(1.0 + gamma)
        cone[-1] = 0.0

        unit = np.zeros(nv)
        for col_idx, (i, _) in enumerate(cols):
            if i in j0:
                unit[col_idx] = 1.0
        unit[-1] = 0.0

        c = np.zeros(nv)
        c[-1] = 1.0
        problem = LpProblem(
            c,
            a_ub=np.vstack([a_obj, cone[None, :]]),
            b_ub=np.zeros(2 * p + 1),
            a_eq=unit[None, :],
            b_eq=np.array([1.0]),
        )
        sol = solve_lp(problem)
        if sol.status == "infeasible":
            continue
        if sol.status != "optimal":
            raise RuntimeError(f"block sensitivity LP ended {sol.status}")
        best = min(best, sol.objective_value)
    if not np.isfinite(best):
        raise RuntimeError("all sign patterns infeasible; cannot happen for "
                           "nonempty J0")
    return float(max(best, 0.0))


def sample_cone(spec: ConeSpec, p: int, count: int, seed: int) -> np.ndarray:
    """Vectors satisfying the cone inequality exactly by construction.

    One row per sample. Support coordinates are standard normal; the
    off-support block gets a uniformly drawn fraction of the admissible l1
    mass, split Dirichlet-style with independent signs. Sample i depends only
    on (seed, i), so sample sets are nested across growing counts and
    independent of evaluation order.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    j = [i for i in spec.j if i < p]
    if len(j) != len(spec.j):
        raise ValueError("cone support index out of range")
    jc = [i for i in range(p) if i not in set(j)]
    out = np.zeros((count, p))
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        delta_j = rng.standard_normal(len(j))
        out[i, j] = delta_j
        if jc:
            frac = rng.uniform()
            mass = frac * (1.0 + spec.gamma) * np.abs(delta_j).sum()
            weights = rng.exponential(size=len(jc))
            weights /= weights.sum()
            signs = rng.integers(0, 2, size=len(jc)) * 2.0 - 1.0
            out[i, jc] = signs * weights * mass
    return out


def re_upper_bound(psi: GramMatrix, spec: ConeSpec, samples: int,
                   seed: int) -> float:
    """Sampled upper bound on the restricted eigenvalue: the minimum of
    |delta' psi delta| / |delta_J|_2^2 over constructed cone vectors.

    A minimum over a finite subset of the cone, so it can only overestimate
    the true infimum; reported as a diagnostic and never used in tuning.
    """
    draws = sample_cone(spec, psi.p, samples, seed)
    dj = draws[:, list(spec.j)]
    denom = (dj ** 2).sum(axis=1)
    quad = np.abs(np.einsum("ij,jk,ik->i", draws, psi.psi, draws))
    ok = denom > 0
    if not ok.any():
        raise RuntimeError("all samples had zero support mass")
    return float((quad[ok] / denom[ok]).min())
