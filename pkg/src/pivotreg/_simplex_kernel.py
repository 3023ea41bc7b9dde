"""Compiled hot path for the revised simplex on inequality-only problems.

Same algorithm as the reference implementation in ``lp``: two-phase with a
shared phase-1 artificial column, Dantzig pricing with lowest-index ties,
Bland's rule after repeated degenerate pivots, identical tolerances. The
basis inverse is kept in product form (eta vectors) on top of the structured
initial basis, with a dense refactorization when the eta file fills up.
Slack columns are implicit, so pricing streams only the structural matrix.

The kernel returns raw basis data; the caller reassembles the solution and
independently verifies it, falling back to the reference path on any
numerical doubt.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is an optional accelerator
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap

KERNEL_OPTIMAL = 0
KERNEL_INFEASIBLE = 1
KERNEL_UNBOUNDED = 2
KERNEL_ITERLIMIT = 3
KERNEL_NUMERICAL = 4

_PIVOT_TOL = 1e-10
_OPT_TOL = 1e-9
_FEAS_TOL = 1e-9
_DEGEN_TOL = 1e-11
_ETA_CAP = 1200


@njit(cache=True)
def _ftran(v, acol, r0, has_art, eta_pos, eta_vec, n_eta, binv0, has_dense):
    """v <- B^{-1} v in place (start-basis factor, then eta file)."""
    m = v.shape[0]
    if has_dense:
        v[:] = binv0 @ v
    elif has_art:
        tmp = v[r0]
        if tmp != 0.0:
            for i in range(m):
                v[i] += tmp * acol[i]
            v[r0] -= tmp
    for t in range(n_eta):
        r = eta_pos[t]
        tmp = v[r]
        if tmp != 0.0:
            eta = eta_vec[t]
            for i in range(m):
                v[i] += tmp * eta[i]
            v[r] -= tmp


@njit(cache=True)
def _btran(y, acol, r0, has_art, eta_pos, eta_vec, n_eta, binv0, has_dense):
    """y <- y B^{-1} in place (eta file in reverse, then start-basis factor)."""
    m = y.shape[0]
    for t in range(n_eta - 1, -1, -1):
        r = eta_pos[t]
        eta = eta_vec[t]
        acc = 0.0
        for i in range(m):
            acc += y[i] * eta[i]
        y[r] = acc
    if has_dense:
        y[:] = y @ binv0
    elif has_art:
        acc = 0.0
        for i in range(m):
            acc += y[i] * acol[i]
        y[r0] = acc


@njit(cache=True)
def _solve_ub_kernel(S, St, b, c, max_iter, bland_after):
    """Two-phase Dantzig/Bland revised simplex for: min c@x, S@x <= b, x >= 0.

    Column ids: [0, n_s) structural, [n_s, n_s + m) slacks, n_s + m the shared
    phase-1 artificial. Returns (status, iterations, basis, x_B, y, enter_j,
    ray_d); y holds the equality-form row multipliers at termination, and
    (enter_j, ray_d) describe the improving direction when unbounded.
    """
    m, n_s = S.shape
    art = n_s + m
    basis = np.empty(m, dtype=np.int64)
    in_basis = np.zeros(n_s + m + 1, dtype=np.bool_)
    for i in range(m):
        basis[i] = n_s + i
        in_basis[n_s + i] = True

    acol = np.zeros(m)
    r0 = 0
    has_art = False
    for i in range(m):
        if b[i] < 0.0:
            acol[i] = -1.0
            has_art = True
    x_B = b.copy()
    if has_art:
        bmin = 0.0
        for i in range(m):
            if b[i] < bmin:
                bmin = b[i]
                r0 = i
        in_basis[basis[r0]] = False
        basis[r0] = art
        in_basis[art] = True
        for i in range(m):
            if i != r0:
                x_B[i] = b[i] + acol[i] * b[r0]
        x_B[r0] = -b[r0]

    eta_pos = np.empty(_ETA_CAP, dtype=np.int64)
    eta_vec = np.empty((_ETA_CAP, m))
    n_eta = 0
    binv0 = np.empty((0, 0))
    has_dense = False

    y = np.zeros(m)
    red = np.zeros(n_s)
    d = np.zeros(m)
    work = np.zeros(m)
    iterations = 0
    degenerate = 0
    bland = False
    phase = 1 if has_art else 2

    while True:
        if iterations >= max_iter:
            return KERNEL_ITERLIMIT, iterations, basis, x_B, y, -1, d

        if n_eta >= _ETA_CAP:
            # collapse start factor + eta file into one dense inverse
            Bmat = np.empty((m, m))
            for pos in range(m):
                v = basis[pos]
                if v < n_s:
                    for i in range(m):
                        Bmat[i, pos] = St[v, i]
                elif v < art:
                    for i in range(m):
                        Bmat[i, pos] = 0.0
                    Bmat[v - n_s, pos] = 1.0
                else:
                    for i in range(m):
                        Bmat[i, pos] = acol[i]
            binv0 = np.linalg.inv(Bmat)
            has_dense = True
            has_art = False
            n_eta = 0
            for i in range(m):
                work[i] = b[i]
            _ftran(work, acol, r0, has_art, eta_pos, eta_vec, n_eta,
                   binv0, has_dense)
            for i in range(m):
                x_B[i] = work[i] if work[i] > 0.0 else 0.0

        # row multipliers for the current phase cost
        for i in range(m):
            v = basis[i]
            if phase == 1:
                y[i] = 1.0 if v == art else 0.0
            else:
                y[i] = c[v] if v < n_s else 0.0
        _btran(y, acol, r0, has_art, eta_pos, eta_vec, n_eta, binv0, has_dense)

        # reduced costs: structural block streamed, slack block is -y
        if phase == 1:
            for j in range(n_s):
                red[j] = 0.0
        else:
            for j in range(n_s):
                red[j] = c[j]
        for i in range(m):
            yi = y[i]
            if yi != 0.0:
                row = S[i]
                for j in range(n_s):
                    red[j] -= yi * row[j]

        enter = -1
        if bland:
            for j in range(n_s):
                if not in_basis[j] and red[j] < -_OPT_TOL:
                    enter = j
                    break
            if enter == -1:
                for i in range(m):
                    jj = n_s + i
                    if not in_basis[jj] and -y[i] < -_OPT_TOL:
                        enter = jj
                        break
        else:
            best = -_OPT_TOL
            for j in range(n_s):
                if red[j] < best and not in_basis[j]:
                    best = red[j]
                    enter = j
            for i in range(m):
                jj = n_s + i
                if not in_basis[jj] and -y[i] < best:
                    best = -y[i]
                    enter = jj

        if enter == -1:
            if phase == 1:
                infeas = 0.0
                for i in range(m):
                    if basis[i] == art:
                        infeas += x_B[i]
                if infeas > _FEAS_TOL:
                    return KERNEL_INFEASIBLE, iterations, basis, x_B, y, -1, d
                # pivot a residual basic artificial onto a real column so it
                # cannot grow during phase 2; if its row has no usable pivot
                # the row is redundant and the artificial stays pinned at 0
                for pos in range(m):
                    if basis[pos] != art:
                        continue
                    for i in range(m):
                        work[i] = 0.0
                    work[pos] = 1.0
                    _btran(work, acol, r0, has_art, eta_pos, eta_vec, n_eta,
                           binv0, has_dense)
                    pick = -1
                    pbest = _PIVOT_TOL
                    for j in range(n_s):
                        if in_basis[j]:
                            continue
                        acc = 0.0
                        for i in range(m):
                            acc += work[i] * S[i, j]
                        if abs(acc) > pbest:
                            pbest = abs(acc)
                            pick = j
                    if pick == -1:
                        for i in range(m):
                            jj = n_s + i
                            if not in_basis[jj] and abs(work[i]) > pbest:
                                pbest = abs(work[i])
                                pick = jj
                    if pick == -1:
                        break
                    if n_eta >= _ETA_CAP:
                        return (KERNEL_NUMERICAL, iterations, basis, x_B, y,
                                -1, d)
                    if pick < n_s:
                        for i in range(m):
                            d[i] = St[pick, i]
                    else:
                        for i in range(m):
                            d[i] = 0.0
                        d[pick - n_s] = 1.0
                    _ftran(d, acol, r0, has_art, eta_pos, eta_vec, n_eta,
                           binv0, has_dense)
                    if abs(d[pos]) <= _PIVOT_TOL:
                        return (KERNEL_NUMERICAL, iterations, basis, x_B, y,
                                -1, d)
                    piv = d[pos]
                    eta_pos[n_eta] = pos
                    for i in range(m):
                        eta_vec[n_eta, i] = -d[i] / piv
                    eta_vec[n_eta, pos] = 1.0 / piv
                    n_eta += 1
                    theta = x_B[pos] / piv if piv > 0.0 else 0.0
                    if theta < 0.0:
                        theta = 0.0
                    for i in range(m):
                        x_B[i] -= theta * d[i]
                        if x_B[i] < 0.0:
                            x_B[i] = 0.0
                    x_B[pos] = theta
                    in_basis[art] = False
                    basis[pos] = pick
                    in_basis[pick] = True
                    break
                phase = 2
                degenerate = 0
                bland = False
                continue
            return KERNEL_OPTIMAL, iterations, basis, x_B, y, -1, d

        if enter < n_s:
            for i in range(m):
                d[i] = St[enter, i]
        else:
            for i in range(m):
                d[i] = 0.0
            d[enter - n_s] = 1.0
        _ftran(d, acol, r0, has_art, eta_pos, eta_vec, n_eta, binv0, has_dense)

        theta = 1e300
        for i in range(m):
            if d[i] > _PIVOT_TOL:
                ratio = x_B[i] / d[i]
                if ratio < theta:
                    theta = ratio
        if theta >= 1e300:
            if phase == 1:
                return KERNEL_NUMERICAL, iterations, basis, x_B, y, enter, d
            return KERNEL_UNBOUNDED, iterations, basis, x_B, y, enter, d
        leave = -1
        best_var = np.int64(1) << 62
        tie = theta + 1e-10 * (1.0 + abs(theta))
        for i in range(m):
            if d[i] > _PIVOT_TOL and x_B[i] / d[i] <= tie:
                if basis[i] < best_var:
                    best_var = basis[i]
                    leave = i
        theta = x_B[leave] / d[leave]
        if theta < 0.0:
            theta = 0.0
        if theta <= _DEGEN_TOL:
            degenerate += 1
            if degenerate > bland_after:
                bland = True

        piv = d[leave]
        eta_pos[n_eta] = leave
        for i in range(m):
            eta_vec[n_eta, i] = -d[i] / piv
        eta_vec[n_eta, leave] = 1.0 / piv
        n_eta += 1

        for i in range(m):
            x_B[i] -= theta * d[i]
            if x_B[i] < 0.0:
                x_B[i] = 0.0
        x_B[leave] = theta
        in_basis[basis[leave]] = False
        basis[leave] = enter
        in_basis[enter] = True
        iterations += 1
