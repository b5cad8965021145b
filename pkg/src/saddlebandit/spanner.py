"""Exploration design: a C-approximate barycentric spanner built from the LMO.

For the basis matrix M (columns = design points) the determinant ratio after
replacing column i by x is |(M^-1 x)_i|, a linear function of x, so the
best replacement is one LMO call in direction +-row_i(M^-1).  A swap is made
whenever that ratio exceeds C.  At termination every x in X has barycentric
coordinates |M^-1 x|_inf <= C, hence

    x^T V^-1 x = n ||M^-1 x||^2 <= C^2 n^2,     V = (1/n) M M^T.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import CertificationError, InvalidSetError

DEFAULT_C = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class SpannerDesign:
    points: np.ndarray  # (n, n); row i is design point x_i
    V: np.ndarray
    V_inv: np.ndarray
    C: float
    certified_bound: float
    coefficient_bound: float  # max_i sup_x |(M^-1 x)_i|, from the LMO
    swaps: int

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def design_bound(self) -> float:
        """The target 2 n^2."""
        return 2.0 * self.n ** 2


def _best_replacement(cset, row):
    xp = geo.lmo(cset, row)
    xm = geo.lmo(cset, -row)
    vp, vm = abs(row @ xp), abs(row @ xm)
    return (xp, vp) if vp >= vm else (xm, vm)


def _replace_column(Minv, i, x):
    """Sherman-Morrison update of M^-1 after setting column i of M to x."""
    u = Minv @ x  # coordinates of x in the current basis
    piv = u[i]
    new = Minv.copy()
    new[i] = Minv[i] / piv
    others = np.arange(Minv.shape[0]) != i
    new[others] -= np.outer(u[others], new[i])
    return new


def default_max_swaps(cset, C=DEFAULT_C):
    """ceil(n^2 log_C(n * diameter_ratio) + n^2) with a crude ratio estimate."""
    n = cset.dim
    eye = np.eye(n)
    widths = np.array([geo.support(cset, e) + geo.support(cset, -e) for e in eye])
    reach = max(max(abs(geo.support(cset, e)), abs(geo.support(cset, -e))) for e in eye)
    ratio = max(2.0, math.sqrt(n) * reach / max(widths.min(), 1e-300))
    return int(math.ceil(n * n * math.log(n * ratio) / math.log(C) + n * n))


def build_spanner(cset: geo.ConvexSet, C: float = DEFAULT_C, max_swaps=None,
                  n_samples: int = 256, seed: int = 0) -> SpannerDesign:
    if not C > 1.0:
        raise ValueError("C must be > 1")
    n = cset.dim
    if max_swaps is None:
        max_swaps = default_max_swaps(cset, C)
    M = np.eye(n)
    Minv = np.eye(n)
    # determinant-maximizing pass seeded with the identity, fixed coordinate order
    for i in range(n):
        x, val = _best_replacement(cset, Minv[i])
        if val <= 1e-12 * max(1.0, np.abs(x).max()):
            raise InvalidSetError("set does not span its ambient space")
        M[:, i] = x
        Minv = _replace_column(Minv, i, x)
    Minv = np.linalg.inv(M)

    swaps = 0
    changed = True
    while changed:
        changed = False
        for i in range(n):
            x, val = _best_replacement(cset, Minv[i])
            if val > C:
                if swaps >= max_swaps:
                    raise CertificationError(f"spanner swap budget {max_swaps} exhausted")
                M[:, i] = x
                swaps += 1
                if swaps % n == 0:
                    Minv = np.linalg.inv(M)
                else:
                    Minv = _replace_column(Minv, i, x)
                changed = True
    Minv = np.linalg.inv(M)
    coef = max(_best_replacement(cset, Minv[i])[1] for i in range(n))

    V = (M @ M.T) / n
    V = 0.5 * (V + V.T)
    V_inv = n * (Minv.T @ Minv)
    V_inv = 0.5 * (V_inv + V_inv.T)
    eig = np.linalg.eigvalsh(V)
    if eig[0] <= 1e-12 * eig[-1]:
        raise CertificationError("design matrix V is numerically singular")

    design = SpannerDesign(points=M.T.copy(), V=V, V_inv=V_inv, C=C,
                           certified_bound=float("nan"), coefficient_bound=float(coef),
                           swaps=swaps)
    bound = certify_design(design, cset, n_samples, rng=np.random.default_rng(seed))
    design = SpannerDesign(points=design.points, V=V, V_inv=V_inv, C=C,
                           certified_bound=bound, coefficient_bound=float(coef), swaps=swaps)
    if bound > design.design_bound * (1.0 + 1e-9):
        raise CertificationError(
            f"sup x^T V^-1 x = {bound:.6g} exceeds 2n^2 = {design.design_bound:.6g}"
        )
    return design


def certify_design(design: SpannerDesign, cset: geo.ConvexSet, n_samples: int = 1000,
                   rng=None) -> float:
    """Max of x^T V^-1 x over vertices (when enumerable), random feasible
    points and LMO points in random directions."""
    rng = np.random.default_rng(0) if rng is None else rng
    blocks = [design.points]
    if cset.has_vertices and geo.vertex_count(cset) <= 1 << 16:
        blocks.append(geo.vertices(cset))
    if n_samples > 0:
        blocks.append(geo.sample_points(cset, rng, n_samples))
        blocks.append(geo.boundary_points(cset, rng, n_samples))
    P = np.vstack(blocks)
    vals = np.einsum("ij,jk,ik->i", P, design.V_inv, P)
    return float(vals.max())


def exploration_mean(design: SpannerDesign) -> np.ndarray:
    return design.points.mean(axis=0)
