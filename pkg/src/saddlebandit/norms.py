"""Set-induced primal/dual norm pair.

The dual norm is ``||z||_* = max_{x in X} |<x, z>|``; the primal norm is the
gauge of ``K = conv(X u -X)``, which is its dual.  The gauge is read off a
closed form for the simplex and for origin-centered boxes and balls, and is
otherwise the value of the linear program

    min sum(mu)  s.t.  W mu = z,  mu >= 0

over the symmetrized vertex list ``W``.  Optimal bases are cached: a cached
basis whose dual vector is feasible and whose primal solution ``B^-1 z`` is
nonnegative certifies optimality for a new ``z`` without re-solving.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import geometry as geo
from ._lp import OPTIMAL, linprog_eq
from .errors import DimensionError, SolverError, UnsupportedError

L1_DUAL_LINF = "l1_dual_linf"
SCALED_LINF_DUAL_L1 = "scaled_linf_dual_l1"
L2_SCALED = "l2_scaled"

MAX_LP_COLUMNS = 1 << 14


def _nnls(A, b, tol=1e-12, max_iter=None):
    """Lawson-Hanson active set; returns (x, residual norm)."""
    m, n = A.shape
    max_iter = max_iter or 3 * n
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    scale = max(1.0, float(np.abs(A).max()) * float(np.abs(b).max(initial=1.0)))
    w = A.T @ b
    it = 0
    while (~passive).any() and w[~passive].max() > tol * scale and it < max_iter:
        it += 1
        cand = np.where(passive, -np.inf, w)
        passive[int(np.argmax(cand))] = True
        while True:
            idx = np.flatnonzero(passive)
            sol = np.linalg.lstsq(A[:, idx], b, rcond=None)[0]
            if sol.min() > 0:
                x[:] = 0.0
                x[idx] = sol
                break
            xi = x[idx]
            neg = sol <= 0
            alpha = np.min(xi[neg] / (xi[neg] - sol[neg]))
            x[idx] = xi + alpha * (sol - xi)
            passive &= x > tol
            x[~passive] = 0.0
            if not passive.any():
                break
        w = A.T @ (b - A @ x)
    return x, float(np.linalg.norm(b - A @ x))


class _GaugeLP:
    """Gauge of conv(columns of W) with a facet cache.

    Every solved LP yields a dual vector ``y`` with ``|<w_i, y>| <= 1``, i.e. a
    facet of K.  For a new ``z`` the best cached facet gives the lower bound
    ``<y, z>``; it is exact when ``z`` lies in the cone spanned by the facet's
    tight columns.  That is checked against cached bases of the facet first
    (``B^-1 z >= 0``), then by nonnegative least squares.
    """

    def __init__(self, W):
        self.W = np.asarray(W, dtype=float)  # (d, N)
        self.duals = np.zeros((0, self.W.shape[0]))
        self.tight: List[np.ndarray] = []
        self.bases: List[np.ndarray] = []  # per facet: stacked B^-1, (k, d, d)
        self.solves = 0

    def _add_basis(self, j, cols):
        B = self.W[:, cols]
        if np.linalg.matrix_rank(B) < B.shape[0]:
            return
        Binv = np.linalg.inv(B)[None]
        self.bases[j] = np.concatenate([self.bases[j], Binv]) if self.bases[j].size else Binv

    def _certify(self, z):
        if not self.tight:
            return None
        d = z.size
        lower = self.duals @ z
        best = lower.max()
        zn = float(np.abs(z).max())
        for j in np.flatnonzero(lower >= best - 1e-12 * max(1.0, abs(best))):
            if self.bases[j].size:
                mu = self.bases[j] @ z
                if (mu.min(axis=1) >= -1e-13 * max(1.0, zn)).any():
                    return float(lower[j])
            cols = self.tight[j]
            mu, resid = _nnls(self.W[:, cols], z)
            if resid <= 1e-11 * max(1.0, zn):
                support = cols[mu > 0]
                if support.size == d:
                    self._add_basis(j, support)
                return float(lower[j])
        return None

    def __call__(self, z):
        val = self._certify(z)
        if val is not None:
            return val
        d, N = self.W.shape
        res = linprog_eq(np.ones(N), self.W, z)
        self.solves += 1
        if res.status != OPTIMAL or res.basis.size != d:
            raise SolverError(f"gauge LP failed ({res.status})")
        B = self.W[:, res.basis]
        y = np.linalg.solve(B.T, np.ones(d))
        # reduced costs >= 0  <=>  |<w_i, y>| <= 1 for the symmetric list
        vals = self.W.T @ y
        if vals.max() <= 1.0 + 1e-9:
            self.duals = np.vstack([self.duals, y])
            self.tight.append(np.flatnonzero(vals >= 1.0 - 1e-9))
            self.bases.append(np.zeros((0, d, d)))
            self._add_basis(len(self.tight) - 1, res.basis)
        return float(res.objective)


@dataclass(eq=False)
class NormContext:
    set: geo.ConvexSet
    symmetrized_vertices: Optional[np.ndarray] = None  # rows, closed under negation
    closed_form: Optional[str] = None
    _lp: Optional[_GaugeLP] = field(default=None, repr=False)

    @property
    def supports_primal(self) -> bool:
        return self.closed_form is not None or self.symmetrized_vertices is not None


def norm_context(cset: geo.ConvexSet) -> NormContext:
    closed = None
    if cset.kind == geo.SIMPLEX:
        closed = L1_DUAL_LINF
    elif cset.kind == geo.BOX and cset.is_centered:
        closed = SCALED_LINF_DUAL_L1
    elif cset.kind == geo.BALL and cset.is_centered:
        closed = L2_SCALED
    sym = None
    if cset.has_vertices:
        if 2 * geo.vertex_count(cset) <= MAX_LP_COLUMNS:
            V = geo.vertices(cset)
            sym = np.unique(np.vstack([V, -V]), axis=0)
    return NormContext(set=cset, symmetrized_vertices=sym, closed_form=closed)


def _check(ctx, z):
    z = np.asarray(z, dtype=float)
    if z.shape != (ctx.set.dim,):
        raise DimensionError(f"vector has shape {z.shape}, expected ({ctx.set.dim},)")
    return z


def dual_norm(ctx: NormContext, z, method: str = "lmo") -> float:
    """max_{x in X} |<x, z>|.

    ``method="lmo"`` (default) uses two oracle calls; ``"closed"`` uses the
    tagged closed form.
    """
    z = _check(ctx, z)
    if method == "closed":
        tag = ctx.closed_form
        if tag == L1_DUAL_LINF:
            return float(np.abs(z).max())
        if tag == SCALED_LINF_DUAL_L1:
            return float(ctx.set.upper @ np.abs(z))
        if tag == L2_SCALED:
            return ctx.set.radius * float(np.linalg.norm(z))
        raise UnsupportedError(f"no closed-form dual norm for {ctx.set!r}")
    if method != "lmo":
        raise ValueError(f"unknown method {method!r}")
    cset = ctx.set
    a = z @ geo.lmo(cset, z)
    b = -z @ geo.lmo(cset, -z)
    return float(max(a, b, 0.0))


def primal_norm(ctx: NormContext, z, method: str = "auto") -> float:
    """Gauge of K = conv(X u -X) at ``z``.

    ``method`` is ``"auto"`` (closed form when tagged, else LP), ``"closed"``
    or ``"lp"``.
    """
    z = _check(ctx, z)
    if not np.any(z):
        return 0.0
    if method == "auto":
        method = "closed" if ctx.closed_form is not None else "lp"
    if method == "closed":
        tag = ctx.closed_form
        if tag == L1_DUAL_LINF:
            return float(np.abs(z).sum())
        if tag == SCALED_LINF_DUAL_L1:
            return float((np.abs(z) / ctx.set.upper).max())
        if tag == L2_SCALED:
            return float(np.linalg.norm(z)) / ctx.set.radius
        raise UnsupportedError(f"no closed-form gauge for {ctx.set!r}")
    if method != "lp":
        raise ValueError(f"unknown method {method!r}")
    if ctx.symmetrized_vertices is None:
        raise UnsupportedError(
            f"primal norm of {ctx.set!r} needs a closed form or a vertex list"
        )
    if ctx._lp is None:
        ctx._lp = _GaugeLP(ctx.symmetrized_vertices.T)
    return ctx._lp(z)


def norm_duality_check(ctx: NormContext, x, z) -> float:
    """||x||_X * ||z||_{*,X} - |<x, z>|; nonnegative up to round-off."""
    x = _check(ctx, x)
    z = _check(ctx, z)
    return primal_norm(ctx, x) * dual_norm(ctx, z) - abs(float(x @ z))
