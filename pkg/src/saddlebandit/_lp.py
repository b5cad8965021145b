"""Small dense two-phase simplex for standard-form LPs.

Solves ``min c @ x  s.t.  A @ x == b, x >= 0`` with a full tableau and
Bland's anti-cycling rule.  Intended for the audit paths only (gauge norms,
polytope feasibility), where problems have a handful of rows and at most a
few thousand columns.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SolverError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: str
    x: Optional[np.ndarray] = None
    objective: float = float("nan")
    basis: Optional[np.ndarray] = None  # column indices, one per kept row
    iterations: int = 0


def _pivot(T, row, col):
    T[row] /= T[row, col]
    colvals = T[:, col].copy()
    colvals[row] = 0.0
    T -= np.outer(colvals, T[row])


def _run_phase(T, basis, n_cols, tol, max_iter, it0):
    """Iterate on tableau ``T`` (last row = reduced costs, last col = rhs).

    Only columns ``< n_cols`` may enter.  Returns (status, iterations).
    """
    m = T.shape[0] - 1
    it = it0
    while True:
        reduced = T[-1, :n_cols]
        candidates = np.flatnonzero(reduced < -tol)
        if candidates.size == 0:
            return OPTIMAL, it
        col = int(candidates[0])  # Bland: lowest index entering
        column = T[:m, col]
        positive = column > tol
        if not positive.any():
            return UNBOUNDED, it
        ratios = np.full(m, np.inf)
        ratios[positive] = T[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        # Bland: among ties leave the row whose basic variable has lowest index
        row = int(ties[np.argmin(basis[ties])])
        _pivot(T, row, col)
        basis[row] = col
        it += 1
        if it > max_iter:
            raise SolverError(f"simplex exceeded {max_iter} pivots")


def linprog_eq(c, A, b, tol=1e-11, max_iter=50_000):
    """Two-phase simplex on ``min c@x, A@x = b, x >= 0``."""
    A = np.array(A, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    scale = max(1.0, float(np.abs(A).max(initial=0.0)), float(np.abs(b).max(initial=0.0)))
    # phase 1: artificials in columns n..n+m-1
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    status, it = _run_phase(T, basis, n, tol * scale, max_iter, 0)
    if -T[-1, -1] > 1e-9 * scale:
        return LPResult(INFEASIBLE, iterations=it)

    # drive remaining artificials out of the basis, dropping redundant rows
    keep = np.ones(m, dtype=bool)
    for row in range(m):
        if basis[row] >= n:
            nz = np.flatnonzero(np.abs(T[row, :n]) > 1e-9 * scale)
            if nz.size:
                _pivot(T, row, int(nz[0]))
                basis[row] = int(nz[0])
            else:
                keep[row] = False
    rows = np.flatnonzero(keep)
    T2 = np.zeros((rows.size + 1, n + 1))
    T2[:-1, :n] = T[rows, :n]
    T2[:-1, -1] = T[rows, -1]
    basis = basis[rows].copy()
    T2[-1, :n] = c
    T2[-1, -1] = 0.0
    for r, j in enumerate(basis):
        T2[-1] -= c[j] * T2[r]
    status, it = _run_phase(T2, basis, n, tol * max(scale, float(np.abs(c).max(initial=0.0))), max_iter, it)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, basis=basis, iterations=it)
    x = np.zeros(n)
    x[basis] = np.maximum(T2[:-1, -1], 0.0)
    return LPResult(OPTIMAL, x=x, objective=float(c @ x), basis=basis, iterations=it)
