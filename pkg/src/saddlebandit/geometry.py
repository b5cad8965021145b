"""Compact convex action sets exposed through a linear maximization oracle.

Four kinds are supported: the probability simplex, axis-aligned boxes,
Euclidean balls and V-polytopes (convex hull of a vertex list).  Every set
must span its ambient space; degenerate descriptors are rejected when the
set is built.
"""

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, InvalidSetError, UnsupportedError

SIMPLEX = "simplex"
BOX = "box"
BALL = "ball"
VPOLYTOPE = "vpolytope"
KINDS = (SIMPLEX, BOX, BALL, VPOLYTOPE)

MAX_BOX_VERTEX_DIM = 20


@dataclass(frozen=True, eq=False)
class ConvexSet:
    """An immutable compact convex set in R^dim.

    Build instances with :func:`simplex`, :func:`box`, :func:`ball` or
    :func:`vpolytope` rather than calling the constructor directly.
    """

    dim: int
    kind: str
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    radius: Optional[float] = None
    vertex_array: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def has_vertices(self) -> bool:
        if self.kind == BOX:
            return self.dim <= MAX_BOX_VERTEX_DIM
        return self.kind in (SIMPLEX, VPOLYTOPE)

    @property
    def is_centered(self) -> bool:
        """True when the set is symmetric about the origin (X = -X)."""
        if self.kind == BOX:
            return bool(np.all(self.lower == -self.upper))
        if self.kind == BALL:
            return bool(np.all(self.center == 0.0))
        return False

    @property
    def has_closed_form_gauge(self) -> bool:
        return self.kind == SIMPLEX or (self.kind in (BOX, BALL) and self.is_centered)

    @property
    def has_closed_form_regularizer(self) -> bool:
        return self.has_closed_form_gauge

    @property
    def has_exact_reg_argmax(self) -> bool:
        # exact Euclidean-type projections exist for these kinds; whether they
        # apply also depends on the regularizer's structure (see oftrl)
        return self.kind in (SIMPLEX, BOX, BALL)

    def describe(self) -> dict:
        d = {"kind": self.kind, "dim": self.dim}
        if self.kind == BOX:
            d.update(lower=self.lower.tolist(), upper=self.upper.tolist())
        elif self.kind == BALL:
            d.update(center=self.center.tolist(), radius=self.radius)
        elif self.kind == VPOLYTOPE:
            d.update(vertices=self.vertex_array.tolist())
        return d

    def __repr__(self):
        return f"ConvexSet(kind={self.kind!r}, dim={self.dim})"


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def simplex(dim: int) -> ConvexSet:
    if int(dim) < 1:
        raise InvalidSetError("simplex dimension must be >= 1")
    return ConvexSet(dim=int(dim), kind=SIMPLEX)


def box(lower, upper) -> ConvexSet:
    lo = np.atleast_1d(np.asarray(lower, dtype=float))
    hi = np.atleast_1d(np.asarray(upper, dtype=float))
    if lo.shape != hi.shape or lo.ndim != 1:
        raise InvalidSetError("box bounds must be 1-d arrays of equal length")
    if not np.all(lo < hi):
        raise InvalidSetError("box needs lower < upper in every coordinate")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise InvalidSetError("box bounds must be finite")
    # lo < hi everywhere already guarantees n linearly independent corners
    return ConvexSet(dim=lo.size, kind=BOX, lower=_frozen(lo), upper=_frozen(hi))


def ball(center, radius: float) -> ConvexSet:
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.ndim != 1:
        raise InvalidSetError("ball center must be a vector")
    if not (radius > 0 and np.isfinite(radius)):
        raise InvalidSetError("ball radius must be > 0")
    return ConvexSet(dim=c.size, kind=BALL, center=_frozen(c), radius=float(radius))


def vpolytope(vertices) -> ConvexSet:
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    if V.ndim != 2 or V.shape[0] == 0:
        raise InvalidSetError("vertices must be a non-empty (k, dim) array")
    dim = V.shape[1]
    if V.shape[0] < dim or np.linalg.matrix_rank(V) < dim:
        raise InvalidSetError(
            f"vertex list spans a proper subspace of R^{dim}; the set must span the ambient space"
        )
    return ConvexSet(dim=dim, kind=VPOLYTOPE, vertex_array=_frozen(V))


def _check(cset: ConvexSet, v, name="vector"):
    v = np.asarray(v, dtype=float)
    if v.shape != (cset.dim,):
        raise DimensionError(f"{name} has shape {v.shape}, expected ({cset.dim},)")
    return v


def lmo(cset: ConvexSet, c) -> np.ndarray:
    """Return argmax_{x in set} <c, x> with deterministic tie-breaking.

    Simplex and V-polytope pick the lowest-index maximizing vertex; a box
    maps ``c_i >= 0`` to the upper bound; a ball maps ``c = 0`` to its center.
    """
    c = _check(cset, c, "direction")
    kind = cset.kind
    if kind == SIMPLEX:
        x = np.zeros(cset.dim)
        x[int(np.argmax(c))] = 1.0
        return x
    if kind == BOX:
        return np.where(c >= 0.0, cset.upper, cset.lower)
    if kind == BALL:
        nrm = float(np.linalg.norm(c))
        if nrm == 0.0:
            return np.array(cset.center)
        return cset.center + cset.radius * (c / nrm)
    V = cset.vertex_array
    return np.array(V[int(np.argmax(V @ c))])


def support(cset: ConvexSet, c) -> float:
    """max_{x in set} <c, x>."""
    c = _check(cset, c, "direction")
    if cset.kind == SIMPLEX:
        return float(c.max())
    if cset.kind == BOX:
        return float(np.where(c >= 0.0, cset.upper, cset.lower) @ c)
    if cset.kind == BALL:
        return float(cset.center @ c + cset.radius * np.linalg.norm(c))
    return float((cset.vertex_array @ c).max())


def vertices(cset: ConvexSet) -> np.ndarray:
    """Finite point list (rows) whose convex hull is the set."""
    if cset.kind == SIMPLEX:
        return np.eye(cset.dim)
    if cset.kind == BOX:
        if cset.dim > MAX_BOX_VERTEX_DIM:
            raise UnsupportedError(
                f"box vertex enumeration is capped at dim <= {MAX_BOX_VERTEX_DIM}"
            )
        bits = np.array(list(itertools.product((0, 1), repeat=cset.dim)), dtype=bool)
        return np.where(bits, cset.upper, cset.lower)
    if cset.kind == VPOLYTOPE:
        return np.array(cset.vertex_array)
    raise UnsupportedError("a ball has no finite vertex list; sample directions through lmo")


def vertex_count(cset: ConvexSet) -> int:
    if cset.kind == SIMPLEX:
        return cset.dim
    if cset.kind == BOX:
        return 2 ** cset.dim
    if cset.kind == VPOLYTOPE:
        return cset.vertex_array.shape[0]
    raise UnsupportedError("a ball has no finite vertex list")


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, n + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def min_norm_point(P, tol=1e-12, max_iter=10_000):
    """Wolfe's algorithm: the point of conv(rows of P) closest to the origin.

    Returns (point, weights).
    """
    P = np.asarray(P, dtype=float)
    k = P.shape[0]
    sq = np.einsum("ij,ij->i", P, P)
    scale = max(1.0, float(sq.max()))
    i0 = int(np.argmin(sq))
    S = [i0]
    w = np.array([1.0])
    x = P[i0].copy()
    for _ in range(max_iter):
        j = int(np.argmin(P @ x))
        if x @ x - x @ P[j] <= tol * scale or j in S:
            break
        S.append(j)
        w = np.append(w, 0.0)
        while True:
            Q = P[S]
            G = Q @ Q.T
            m = len(S)
            K = np.zeros((m + 1, m + 1))
            K[:m, :m] = G
            K[:m, m] = 1.0
            K[m, :m] = 1.0
            rhs = np.zeros(m + 1)
            rhs[m] = 1.0
            sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
            v = sol[:m]
            if np.all(v > tol):
                w = v
                break
            mask = v <= tol
            denom = w[mask] - v[mask]
            theta = np.min(np.where(denom > 0, w[mask] / np.where(denom > 0, denom, 1.0), 1.0))
            theta = min(max(theta, 0.0), 1.0)
            w = w + theta * (v - w)
            keep = w > tol
            S = [s for s, kp in zip(S, keep) if kp]
            w = w[keep]
            w = w / w.sum()
        x = w @ P[S]
    weights = np.zeros(k)
    weights[S] = w
    return x, weights


def distance(cset: ConvexSet, x) -> float:
    """Euclidean distance from ``x`` to the set."""
    x = _check(cset, x, "point")
    if cset.kind == SIMPLEX:
        return float(np.linalg.norm(x - project_simplex(x)))
    if cset.kind == BOX:
        return float(np.linalg.norm(x - np.clip(x, cset.lower, cset.upper)))
    if cset.kind == BALL:
        return max(0.0, float(np.linalg.norm(x - cset.center)) - cset.radius)
    p, _ = min_norm_point(cset.vertex_array - x)
    return float(np.linalg.norm(p))


def membership(cset: ConvexSet, x, tol: float = 0.0) -> bool:
    """True iff ``x`` lies in the set inflated by ``tol`` (Euclidean)."""
    x = _check(cset, x, "point")
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if cset.kind == SIMPLEX and tol == 0.0:
        return bool(np.all(x >= 0.0) and x.sum() == 1.0)
    if cset.kind == BOX and tol == 0.0:
        return bool(np.all(x >= cset.lower) and np.all(x <= cset.upper))
    if cset.kind == VPOLYTOPE:
        # feasibility of convex-combination weights first, exact-distance fallback
        from ._lp import OPTIMAL, linprog_eq

        V = cset.vertex_array
        A = np.vstack([V.T, np.ones(V.shape[0])])
        res = linprog_eq(np.zeros(V.shape[0]), A, np.append(x, 1.0))
        if res.status == OPTIMAL and np.linalg.norm(V.T @ res.x - x) <= max(tol, 1e-12):
            return True
        if tol == 0.0:
            return False
    return distance(cset, x) <= tol


def sample_points(cset: ConvexSet, rng: np.random.Generator, k: int) -> np.ndarray:
    """Draw ``k`` random points of the set (rows); not uniform for polytopes."""
    d = cset.dim
    if cset.kind == SIMPLEX:
        return rng.dirichlet(np.ones(d), size=k)
    if cset.kind == BOX:
        return cset.lower + rng.random((k, d)) * (cset.upper - cset.lower)
    if cset.kind == BALL:
        g = rng.standard_normal((k, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = rng.random(k) ** (1.0 / d)
        return cset.center + cset.radius * g * r[:, None]
    V = cset.vertex_array
    nv = V.shape[0]
    out = np.empty((k, d))
    support_size = min(nv, d + 1)
    for i in range(k):
        idx = rng.choice(nv, size=support_size, replace=False)
        w = rng.dirichlet(np.ones(support_size))
        out[i] = w @ V[idx]
    return out


def boundary_points(cset: ConvexSet, rng: np.random.Generator, k: int) -> np.ndarray:
    """LMO responses to ``k`` random Gaussian directions (extreme points)."""
    dirs = rng.standard_normal((k, cset.dim))
    return np.array([lmo(cset, u) for u in dirs])


def symmetrized_lmo(cset: ConvexSet, c) -> np.ndarray:
    """LMO of K = conv(X u -X)."""
    p = lmo(cset, c)
    q = -lmo(cset, -np.asarray(c, dtype=float))
    return p if p @ c >= q @ c else q
