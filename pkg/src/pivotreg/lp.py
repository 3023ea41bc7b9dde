"""Dense linear-programming kernel: two-phase revised simplex in standard form.

Problems are stated as

    minimize    objective @ x
    subject to  a_ub @ x <= b_ub
                a_eq @ x == b_eq
                x >= 0

The solver keeps an explicit basis inverse, updated by rank-one pivots and
refactorized periodically. Pricing is Dantzig's rule (most negative reduced
cost, lowest index on ties); after too many degenerate pivots the solver
switches to Bland's rule, which guarantees termination. Phase 1 uses
artificial variables: one unit artificial per equality row, plus a single
shared artificial column covering the inequality rows whose slack basis is
infeasible, which keeps phase 1 short on problems with many negative
right-hand sides.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _simplex_kernel as _kernel

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9
OPT_TOL = 1e-9
_DEGEN_TOL = 1e-11
_REFACTOR_EVERY = 100
_ORACLE_SIZE_GUARD = 24


class IterationLimitError(RuntimeError):
    """Raised when the simplex exceeds its iteration cap (numerical trouble,
    distinct from a certified infeasible or unbounded outcome)."""


def _as_matrix(a, ncols: int, name: str) -> np.ndarray:
    if a is None:
        return np.zeros((0, ncols))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.zeros((0, ncols))
    if a.shape[1] != ncols:
        raise ValueError(f"{name} has {a.shape[1]} columns, expected {ncols}")
    return a


def _as_vector(b, nrows: int, name: str) -> np.ndarray:
    if b is None:
        b = np.zeros(0)
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if b.shape[0] != nrows:
        raise ValueError(f"{name} has length {b.shape[0]}, expected {nrows}")
    return b


@dataclass(frozen=True)
class LpProblem:
    """Standard-form LP data. All variables carry an implicit lower bound 0.

    ``a_ub``/``a_eq`` may be None or empty when a constraint block is absent.
    """

    objective: np.ndarray
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.objective, dtype=float))
        a_ub = _as_matrix(self.a_ub, c.shape[0], "a_ub")
        b_ub = _as_vector(self.b_ub, a_ub.shape[0], "b_ub")
        a_eq = _as_matrix(self.a_eq, c.shape[0], "a_eq")
        b_eq = _as_vector(self.b_eq, a_eq.shape[0], "b_eq")
        for name, arr in (("objective", c), ("a_ub", a_ub), ("b_ub", b_ub),
                          ("a_eq", a_eq), ("b_eq", b_eq)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        for name, arr in (("objective", c), ("a_ub", a_ub), ("b_ub", b_ub),
                          ("a_eq", a_eq), ("b_eq", b_eq)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def n_ub(self) -> int:
        return self.a_ub.shape[0]

    @property
    def n_eq(self) -> int:
        return self.a_eq.shape[0]


@dataclass(frozen=True)
class LpSolution:
    """Outcome of an LP solve.

    ``status`` is one of {"optimal", "infeasible", "unbounded"}. When
    optimal, ``x`` is the primal vertex, ``objective_value`` equals
    ``objective @ x``, and ``dual`` holds one multiplier per constraint row
    (inequality rows first, then equality rows). Multipliers of inequality
    rows are nonnegative and satisfy d(optimum)/d(b_i) = -dual[i]; equality
    multipliers are sign-free. For non-optimal statuses ``x`` and ``dual``
    are None, and ``objective_value`` is nan (infeasible) or -inf
    (unbounded).
    """

    status: str
    x: np.ndarray | None
    objective_value: float
    dual: np.ndarray | None
    iterations: int


@dataclass
class _Presolved:
    """Problem after removal of empty rows/columns, with reassembly maps."""

    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    keep_cols: np.ndarray
    keep_ub: np.ndarray
    keep_eq: np.ndarray
    verdict: str | None = None
    unbounded_col: int | None = None


def _presolve(problem: LpProblem) -> _Presolved:
    c = problem.objective
    a_ub, b_ub = problem.a_ub, problem.b_ub
    a_eq, b_eq = problem.a_eq, problem.b_eq
    n = c.shape[0]

    col_scale = np.zeros(n)
    if a_ub.shape[0]:
        col_scale = np.maximum(col_scale, np.abs(a_ub).max(axis=0))
    if a_eq.shape[0]:
        col_scale = np.maximum(col_scale, np.abs(a_eq).max(axis=0))
    keep_cols = col_scale > 0.0
    for j in np.flatnonzero(~keep_cols):
        if c[j] < -OPT_TOL:
            # free to grow without touching any constraint
            return _Presolved(c, a_ub, b_ub, a_eq, b_eq,
                              keep_cols, np.ones(0, bool), np.ones(0, bool),
                              verdict=UNBOUNDED, unbounded_col=int(j))

    row_scale_ub = np.abs(a_ub).max(axis=1) if a_ub.shape[0] else np.zeros(0)
    keep_ub = row_scale_ub > 0.0
    for i in np.flatnonzero(~keep_ub):
        if b_ub[i] < -FEAS_TOL:
            return _Presolved(c, a_ub, b_ub, a_eq, b_eq,
                              keep_cols, keep_ub, np.ones(0, bool),
                              verdict=INFEASIBLE)
    row_scale_eq = np.abs(a_eq).max(axis=1) if a_eq.shape[0] else np.zeros(0)
    keep_eq = row_scale_eq > 0.0
    for i in np.flatnonzero(~keep_eq):
        if abs(b_eq[i]) > FEAS_TOL:
            return _Presolved(c, a_ub, b_ub, a_eq, b_eq,
                              keep_cols, keep_ub, keep_eq,
                              verdict=INFEASIBLE)

    return _Presolved(
        c=c[keep_cols],
        a_ub=a_ub[np.ix_(keep_ub, keep_cols)],
        b_ub=b_ub[keep_ub],
        a_eq=a_eq[np.ix_(keep_eq, keep_cols)],
        b_eq=b_eq[keep_eq],
        keep_cols=keep_cols, keep_ub=keep_ub, keep_eq=keep_eq,
    )


class _RevisedSimplex:
    """Mutable state for one solve; not reusable across calls."""

    def __init__(self, c, a_ub, b_ub, a_eq, b_eq, max_iterations, bland_after):
        self.n = c.shape[0]
        self.k_ub = a_ub.shape[0]
        self.k_eq = a_eq.shape[0]
        self.m = self.k_ub + self.k_eq
        self.max_iterations = max_iterations
        self.bland_after = bland_after
        self.iterations = 0
        self.degenerate_pivots = 0
        self.bland = False

        # rows: inequality block first, then equality block (sign-flipped to
        # nonnegative rhs; flips recorded for dual recovery)
        eq_flip = np.where(b_eq < 0, -1.0, 1.0)
        a_eq = a_eq * eq_flip[:, None]
        b_eq = b_eq * eq_flip
        self.eq_flip = eq_flip

        violated = np.flatnonzero(b_ub < 0)
        n_art = self.k_eq + (1 if violated.size else 0)
        n_tot = self.n + self.k_ub + n_art
        A = np.zeros((self.m, n_tot))
        A[:self.k_ub, :self.n] = a_ub
        A[self.k_ub:, :self.n] = a_eq
        A[:self.k_ub, self.n:self.n + self.k_ub] = np.eye(self.k_ub)
        b = np.concatenate([b_ub, b_eq])

        self.n_tot = n_tot
        self.n_real = self.n + self.k_ub  # columns allowed in phase 2
        self.A = A
        self.b = b

        basis = np.empty(self.m, dtype=np.intp)
        basis[:self.k_ub] = self.n + np.arange(self.k_ub)
        art = self.n_real
        if violated.size:
            A[violated, art] = -1.0
            r = violated[np.argmin(b_ub[violated])]
            basis[r] = art
            art += 1
        for i in range(self.k_eq):
            A[self.k_ub + i, art] = 1.0
            basis[self.k_ub + i] = art
            art += 1
        self.basis = basis
        self.in_basis = np.zeros(n_tot, dtype=bool)
        self.in_basis[basis] = True

        # initial basis matrix is the identity except for the shared
        # artificial column; its inverse has the same one-column structure
        Binv = np.eye(self.m)
        if violated.size:
            Binv[:, r] = A[:, self.n_real]
        self.Binv = Binv
        self.x_B = Binv @ b
        # construction guarantees feasibility; clip roundoff
        np.clip(self.x_B, 0.0, None, out=self.x_B)

        self.phase1_cost = np.zeros(n_tot)
        self.phase1_cost[self.n_real:] = 1.0
        self.cost = np.concatenate([c, np.zeros(n_tot - self.n)])
        self.pivots_since_refactor = 0

    # -- core pivoting ----------------------------------------------------

    def _refactor(self):
        B = self.A[:, self.basis]
        self.Binv = np.linalg.inv(B)
        self.x_B = self.Binv @ self.b
        np.clip(self.x_B, 0.0, None, out=self.x_B)
        self.pivots_since_refactor = 0

    def _pivot(self, j: int, d: np.ndarray, leave_pos: int, theta: float):
        piv = d[leave_pos]
        row = self.Binv[leave_pos] / piv
        self.Binv -= np.outer(d, row)
        self.Binv[leave_pos] = row
        self.x_B -= theta * d
        self.x_B[leave_pos] = theta
        np.clip(self.x_B, 0.0, None, out=self.x_B)
        self.in_basis[self.basis[leave_pos]] = False
        self.basis[leave_pos] = j
        self.in_basis[j] = True
        self.pivots_since_refactor += 1
        if self.pivots_since_refactor >= _REFACTOR_EVERY:
            self._refactor()

    def _ratio_test(self, d: np.ndarray) -> tuple[int, float] | None:
        pos = np.flatnonzero(d > PIVOT_TOL)
        if pos.size == 0:
            return None
        ratios = self.x_B[pos] / d[pos]
        theta = ratios.min()
        ties = pos[ratios <= theta + 1e-10 * (1.0 + abs(theta))]
        leave_pos = ties[np.argmin(self.basis[ties])]
        return int(leave_pos), float(max(self.x_B[leave_pos] / d[leave_pos], 0.0))

    def _run_phase(self, cost: np.ndarray, n_allowed: int) -> tuple[str, int, np.ndarray | None]:
        """Iterate to optimality of ``cost`` over columns [0, n_allowed).

        Returns (status, entering_col, direction) where the last two describe
        the certified ray when status is "unbounded".
        """
        while True:
            if self.iterations >= self.max_iterations:
                raise IterationLimitError(
                    f"simplex exceeded {self.max_iterations} iterations")
            y = cost[self.basis] @ self.Binv
            red = cost[:n_allowed] - y @ self.A[:, :n_allowed]
            red[self.in_basis[:n_allowed]] = 0.0
            if self.bland:
                eligible = np.flatnonzero(red < -OPT_TOL)
                if eligible.size == 0:
                    return OPTIMAL, -1, None
                j = int(eligible[0])
            else:
                j = int(np.argmin(red))
                if red[j] >= -OPT_TOL:
                    return OPTIMAL, -1, None
            d = self.Binv @ self.A[:, j]
            hit = self._ratio_test(d)
            if hit is None:
                return UNBOUNDED, j, d
            leave_pos, theta = hit
            if theta <= _DEGEN_TOL:
                self.degenerate_pivots += 1
                if self.degenerate_pivots > self.bland_after:
                    self.bland = True
            self._pivot(j, d, leave_pos, theta)
            self.iterations += 1

    # -- two phases --------------------------------------------------------

    def solve(self) -> tuple[str, np.ndarray | None, np.ndarray | None, int]:
        """Returns (status, x_structural, row_multipliers, iterations)."""
        if self.n_tot > self.n_real:  # artificials present: phase 1
            status, _, _ = self._run_phase(self.phase1_cost, self.n_tot)
            if status is not OPTIMAL:  # phase-1 objective is bounded below by 0
                raise AssertionError("phase 1 cannot be unbounded")
            infeas = float(self.x_B[self.basis >= self.n_real].sum())
            if infeas > FEAS_TOL:
                return INFEASIBLE, None, None, self.iterations
            self._drive_out_artificials()
            self.degenerate_pivots = 0
            self.bland = False

        status, j, d = self._run_phase(self.cost, self.n_real)
        if status is UNBOUNDED:
            if not self._certify_ray(j, d):
                self._refactor()
                status, j, d = self._run_phase(self.cost, self.n_real)
            if status is UNBOUNDED:
                return UNBOUNDED, None, None, self.iterations

        x = np.zeros(self.n_real)
        sel = self.basis < self.n_real
        x[self.basis[sel]] = self.x_B[sel]
        y = self.cost[self.basis] @ self.Binv
        return OPTIMAL, x[:self.n], y, self.iterations

    def _drive_out_artificials(self):
        """Pivot basic artificials to zero-valued real columns when possible.

        A basic artificial whose row has no usable real pivot marks a
        redundant row; it stays basic at value zero and is harmless because
        every future direction has a zero entry in that row.
        """
        for pos in range(self.m):
            if self.basis[pos] < self.n_real:
                continue
            row = self.Binv[pos] @ self.A[:, :self.n_real]
            row[self.in_basis[:self.n_real]] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) <= PIVOT_TOL:
                continue
            d = self.Binv @ self.A[:, j]
            self._pivot(j, d, pos, float(max(self.x_B[pos], 0.0)))

    def _certify_ray(self, j: int, d: np.ndarray) -> bool:
        ray = np.zeros(self.n_tot)
        ray[j] = 1.0
        ray[self.basis] = -d
        if (ray < -1e-7).any():
            return False
        resid = self.A @ ray
        scale = 1.0 + np.abs(self.A[:, j]).max()
        return bool(np.abs(resid).max() <= 1e-6 * scale)


def _try_kernel(pre: _Presolved, problem: LpProblem,
                max_iterations: int, bland_after: int) -> LpSolution | None:
    """Run the compiled inequality-only path; None means fall back."""
    a_ub = np.ascontiguousarray(pre.a_ub)
    a_t = np.ascontiguousarray(pre.a_ub.T)
    b = np.ascontiguousarray(pre.b_ub)
    c = np.ascontiguousarray(pre.c)
    status, iterations, basis, x_B, y, enter_j, ray_d = _kernel._solve_ub_kernel(
        a_ub, a_t, b, c, max_iterations, bland_after)

    n_s = c.shape[0]
    m = b.shape[0]
    if status == _kernel.KERNEL_NUMERICAL:
        return None
    if status == _kernel.KERNEL_ITERLIMIT:
        raise IterationLimitError(
            f"simplex exceeded {max_iterations} iterations")
    if status == _kernel.KERNEL_INFEASIBLE:
        return LpSolution(INFEASIBLE, None, float("nan"), None, int(iterations))
    if status == _kernel.KERNEL_UNBOUNDED:
        ray = np.zeros(n_s + m + 1)
        ray[enter_j] = 1.0
        ray[basis] = -ray_d
        if (ray < -1e-7).any():
            return None
        resid = a_ub @ ray[:n_s] + ray[n_s:n_s + m]
        if np.abs(resid).max() > 1e-6 * (1.0 + np.abs(a_ub).max()):
            return None
        return LpSolution(UNBOUNDED, None, float("-inf"), None, int(iterations))

    x_full = np.zeros(n_s + m + 1)
    x_full[basis] = x_B
    x_red = x_full[:n_s]
    scale = 1.0 + np.abs(b).max()
    if (a_ub @ x_red - b).max() > 1e-9 * scale:
        return None
    lam = np.clip(-y, 0.0, None)
    rc = c - y @ a_ub
    if rc.min() < -1e-8 or (-y).min() < -1e-8:
        return None
    slack = b - a_ub @ x_red
    if np.abs(lam * slack).max() > 1e-7 * scale:
        return None
    if np.abs(rc * x_red).max() > 1e-7 * (1.0 + np.abs(c).max()):
        return None

    x = np.zeros(problem.n_vars)
    x[pre.keep_cols] = x_red
    np.clip(x, 0.0, None, out=x)
    dual = np.zeros(problem.n_ub + problem.n_eq)
    dual_ub = np.zeros(problem.n_ub)
    dual_ub[pre.keep_ub] = lam
    dual[:problem.n_ub] = dual_ub
    value = float(problem.objective @ x)
    return LpSolution(OPTIMAL, x, value, dual, int(iterations))


def solve_lp(problem: LpProblem, max_iterations: int | None = None) -> LpSolution:
    """Solve a standard-form LP by the two-phase revised simplex method.

    Raises IterationLimitError when the pivot count exceeds
    ``max_iterations`` (default ``50 * (n_vars + n_rows)``).
    """
    n_rows = problem.n_ub + problem.n_eq
    if max_iterations is None:
        max_iterations = 50 * (problem.n_vars + n_rows)
    bland_after = 2 * (problem.n_vars + n_rows)

    pre = _presolve(problem)
    if pre.verdict == INFEASIBLE:
        return LpSolution(INFEASIBLE, None, float("nan"), None, 0)
    if pre.verdict == UNBOUNDED:
        return LpSolution(UNBOUNDED, None, float("-inf"), None, 0)

    if pre.c.shape[0] == 0 or pre.b_ub.shape[0] + pre.b_eq.shape[0] == 0:
        # no remaining constraints: each variable sits at its bound
        if (pre.c < -OPT_TOL).any():
            return LpSolution(UNBOUNDED, None, float("-inf"), None, 0)
        x = np.zeros(problem.n_vars)
        dual = np.zeros(n_rows)
        return LpSolution(OPTIMAL, x, 0.0, dual, 0)

    if _kernel.NUMBA_AVAILABLE and pre.b_eq.shape[0] == 0:
        solution = _try_kernel(pre, problem, max_iterations, bland_after)
        if solution is not None:
            return solution

    core = _RevisedSimplex(pre.c, pre.a_ub, pre.b_ub, pre.a_eq, pre.b_eq,
                           max_iterations, bland_after)
    status, x_red, y_red, iterations = core.solve()
    if status == INFEASIBLE:
        return LpSolution(INFEASIBLE, None, float("nan"), None, iterations)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, None, float("-inf"), None, iterations)

    x = np.zeros(problem.n_vars)
    x[pre.keep_cols] = x_red
    np.clip(x, 0.0, None, out=x)
    dual = np.zeros(n_rows)
    k_ub_red = pre.b_ub.shape[0]
    dual_ub = np.zeros(problem.n_ub)
    dual_ub[pre.keep_ub] = -y_red[:k_ub_red]
    dual_eq = np.zeros(problem.n_eq)
    dual_eq[pre.keep_eq] = y_red[k_ub_red:] * core.eq_flip
    dual[:problem.n_ub] = np.clip(dual_ub, 0.0, None)
    dual[problem.n_ub:] = dual_eq
    value = float(problem.objective @ x)
    return LpSolution(OPTIMAL, x, value, dual, iterations)


# -- exhaustive oracle ------------------------------------------------------


def _independent_rows(M: np.ndarray, rhs: np.ndarray, tol: float = 1e-9):
    """Row-reduce [M | rhs]; returns (row indices kept, consistent flag)."""
    work = np.hstack([M, rhs[:, None]]).astype(float)
    nrows, ncols = work.shape
    kept: list[int] = []
    rows = list(range(nrows))
    col = 0
    scale = max(np.abs(work).max(), 1.0)
    while rows and col < ncols - 1:
        pivot_row = max(rows, key=lambda r: abs(work[r, col]))
        if abs(work[pivot_row, col]) <= tol * scale:
            col += 1
            continue
        kept.append(pivot_row)
        rows.remove(pivot_row)
        for r in rows:
            f = work[r, col] / work[pivot_row, col]
            work[r] -= f * work[pivot_row]
        col += 1
    consistent = all(abs(work[r, -1]) <= 1e-7 * scale for r in rows)
    return sorted(kept), consistent


def _enumerate_min(c, a_ub, b_ub, a_eq, b_eq):
    """Best vertex of the region; (status, x, value). No ray check here."""
    n = c.shape[0]
    k_ub = a_ub.shape[0]
    M = np.zeros((k_ub + a_eq.shape[0], n + k_ub))
    M[:k_ub, :n] = a_ub
    M[:k_ub, n:] = np.eye(k_ub)
    M[k_ub:, :n] = a_eq
    rhs = np.concatenate([b_ub, b_eq])
    kept, consistent = _independent_rows(M, rhs)
    if not consistent:
        return INFEASIBLE, None, float("nan")
    M, rhs = M[kept], rhs[kept]
    rank, ncols = M.shape
    if rank == 0:
        return OPTIMAL, np.zeros(n), 0.0

    best_x, best_val = None, np.inf
    cost_full = np.concatenate([c, np.zeros(k_ub)])
    subsets = np.array(list(itertools.combinations(range(ncols), rank)))
    for chunk in np.array_split(subsets, max(1, len(subsets) // 65536)):
        batch = np.moveaxis(M[:, chunk], 0, 1)  # (n_sub, rank, rank)
        dets = np.linalg.det(batch)
        hadamard = np.prod(np.linalg.norm(batch, axis=2), axis=1)
        ok = np.abs(dets) > 1e-12 * np.maximum(hadamard, 1e-30)
        if not ok.any():
            continue
        sols = np.linalg.solve(batch[ok], rhs)
        resid = np.abs(np.einsum("ijk,ik->ij", batch[ok], sols) - rhs).max(axis=1)
        scale = 1.0 + np.abs(rhs).max()
        feas = (sols.min(axis=1) >= -1e-9) & (resid <= 1e-7 * scale)
        for sub, sol in zip(chunk[ok][feas], sols[feas]):
            x_full = np.zeros(ncols)
            x_full[sub] = sol
            val = float(cost_full @ x_full)
            if val < best_val - 1e-12 or best_x is None:
                best_x, best_val = x_full[:n], val
    if best_x is None:
        return INFEASIBLE, None, float("nan")
    return OPTIMAL, np.clip(best_x, 0.0, None), best_val


def enumerate_vertices_oracle(problem: LpProblem) -> LpSolution:
    """Exact optimum by exhaustive basis enumeration (test oracle).

    Guarded to ``n_vars + n_rows <= 24``. Unboundedness is certified by
    enumerating the normalized recession directions (feasible rays) and
    checking for one with negative cost.
    """
    n_rows = problem.n_ub + problem.n_eq
    if problem.n_vars + n_rows > _ORACLE_SIZE_GUARD:
        raise ValueError(
            f"oracle limited to n_vars + n_rows <= {_ORACLE_SIZE_GUARD}")
    c = problem.objective
    status, x, value = _enumerate_min(c, problem.a_ub, problem.b_ub,
                                      problem.a_eq, problem.b_eq)
    if status == INFEASIBLE:
        return LpSolution(INFEASIBLE, None, float("nan"), None, 0)

    # recession directions, normalized onto the simplex sum(d) == 1
    ray_status, _, ray_val = _enumerate_min(
        c,
        problem.a_ub, np.zeros(problem.n_ub),
        np.vstack([problem.a_eq, np.ones((1, problem.n_vars))]),
        np.concatenate([np.zeros(problem.n_eq), [1.0]]),
    )
    if ray_status == OPTIMAL and ray_val < -1e-9:
        return LpSolution(UNBOUNDED, None, float("-inf"), None, 0)
    return LpSolution(OPTIMAL, x, value, None, 0)
