"""Dense two-phase simplex for small LPs over free variables.

Solves max c^T x subject to A x <= b with x unrestricted, via the split
x = u - v and slack variables. Pivoting uses Dantzig's rule and falls back
to Bland's rule after an iteration threshold to guarantee termination.
Problem sizes here are tiny (tens of rows, <= 10 structural variables), so
a dense tableau is the fastest dependency-free option.
"""

from __future__ import annotations

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIV_TOL = 1e-10


def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] = T[r] / T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    T[:, c] = 0.0
    T[r, c] = 1.0


def _choose_entering(obj: np.ndarray, ncols: int, bland: bool, tol: float) -> int:
    if bland:
        for j in range(ncols):
            if obj[j] > tol:
                return j
        return -1
    j = int(np.argmax(obj[:ncols]))
    return j if obj[j] > tol else -1


def _choose_leaving(T: np.ndarray, col: int, m: int, basis: list[int]) -> int:
    best = -1
    best_ratio = np.inf
    for i in range(m):
        a = T[i, col]
        if a > _PIV_TOL:
            ratio = T[i, -1] / a
            if ratio < best_ratio - 1e-12 or (
                abs(ratio - best_ratio) <= 1e-12
                and (best < 0 or basis[i] < basis[best])
            ):
                best_ratio = ratio
                best = i
    return best


def solve_lp(A, b, c, tol: float = 1e-9, max_iter: int | None = None):
    """Maximize c^T x s.t. A x <= b (x free).

    Returns (status, x, value); x and value are None unless optimal.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    m, p = A.shape if A.size else (0, c.size)

    # Rows with an all-zero normal are vacuous or contradictory.
    if m:
        norms = np.abs(A).sum(axis=1)
        zero = norms <= _PIV_TOL
        if np.any(zero):
            if np.any(b[zero] < -tol):
                return INFEASIBLE, None, None
            keep = ~zero
            A, b = A[keep], b[keep]
            m = A.shape[0]
    if m == 0:
        if np.all(np.abs(c) <= tol):
            return OPTIMAL, np.zeros(p), 0.0
        return UNBOUNDED, None, None

    neg = b < 0.0
    A2 = np.where(neg[:, None], -A, A)
    b2 = np.where(neg, -b, b)
    slack_sign = np.where(neg, -1.0, 1.0)

    art_rows = np.flatnonzero(neg)
    n_art = art_rows.size
    n_struct = 2 * p
    n_cols = n_struct + m + n_art

    nrows = m + 2
    T = np.zeros((nrows, n_cols + 1))
    T[:m, :p] = A2
    T[:m, p : 2 * p] = -A2
    T[np.arange(m), n_struct + np.arange(m)] = slack_sign
    if n_art:
        T[art_rows, n_struct + m + np.arange(n_art)] = 1.0
    T[:m, -1] = b2

    basis = [0] * m
    for i in range(m):
        basis[i] = n_struct + i
    for k, i in enumerate(art_rows):
        basis[i] = n_struct + m + k

    # Phase-2 objective row (reduced costs for maximization).
    T[m, :p] = c
    T[m, p : 2 * p] = -c
    # Phase-1 objective: drive artificial variables to zero.
    if n_art:
        T[m + 1, :] = T[art_rows].sum(axis=0)
        T[m + 1, n_struct + m : -1] = 0.0

    if max_iter is None:
        max_iter = 200 * (m + p + 2)
    bland_after = 5 * (m + p + 2)

    def run(obj_row: int, active_cols: int) -> str:
        it = 0
        while True:
            it += 1
            if it > max_iter:
                return "limit"
            col = _choose_entering(
                T[obj_row], active_cols, it > bland_after, tol
            )
            if col < 0:
                return "done"
            row = _choose_leaving(T, col, m, basis)
            if row < 0:
                return "unbounded"
            _pivot(T, row, col)
            basis[row] = col

    if n_art:
        res = run(m + 1, n_cols)
        if res == "unbounded":  # cannot happen: phase-1 objective is bounded
            return INFEASIBLE, None, None
        if T[m + 1, -1] > tol:
            return INFEASIBLE, None, None
        # Drive out any artificial still basic at zero level.
        for i in range(m):
            if basis[i] >= n_struct + m:
                pivot_col = -1
                for j in range(n_struct + m):
                    if abs(T[i, j]) > _PIV_TOL:
                        pivot_col = j
                        break
                if pivot_col >= 0:
                    _pivot(T, i, pivot_col)
                    basis[i] = pivot_col
                else:
                    T[i, :] = 0.0  # redundant row
        T[:, n_struct + m : -1] = 0.0

    res = run(m, n_struct + m)
    if res == "unbounded":
        return UNBOUNDED, None, None

    x = np.zeros(p)
    for i in range(m):
        j = basis[i]
        if j < p:
            x[j] += T[i, -1]
        elif j < 2 * p:
            x[j - p] -= T[i, -1]
    return OPTIMAL, x, float(c @ x)


def lp_feasible(A, b, tol: float = 1e-9) -> bool:
    """Phase-1 feasibility of {x : A x <= b}."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    status, _, _ = solve_lp(A, b, np.zeros(A.shape[1]), tol=tol)
    return status != INFEASIBLE
