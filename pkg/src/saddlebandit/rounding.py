"""Ellipsoidal rounding of K = conv(X u -X) and the quadratic regularizer.

The regularizer is phi(x) = x^T H x / 2 where E = {x : x^T H x <= 1} obeys
E subset K subset alpha E.  Closed forms cover the simplex and centered
boxes/balls.  Otherwise H comes from the origin-centered minimum-volume
enclosing ellipsoid of the symmetrized vertices: with Khachiyan weights u and
M = sum_i u_i p_i p_i^T,

    {x : x^T M^-1 x <= 1}  subset  K  subset  {x : x^T M^-1 x <= max_i p_i^T M^-1 p_i}

(the inner inclusion holds for any weights since sqrt(y^T M y) <= max_i |<p_i, y>|),
so H = M^-1 and alpha = sqrt(max_i p_i^T H p_i) <= sqrt(d (1 + eps)).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import CertificationError, InvalidSetError, SolverError

DEFAULT_EPS = 1e-7
MVEE_MAX_ITER = 100_000
MAX_MVEE_POINTS = 1 << 15


def _khachiyan(P, eps, max_iter):
    """Origin-centered MVEE weights with Wolfe-Atwood away steps.

    Returns (M^-1, weights, iterations, max_i p_i^T M^-1 p_i).
    """
    k, d = P.shape
    u = np.full(k, 1.0 / k)
    M = P.T @ (u[:, None] * P)
    Minv = np.linalg.inv(M)
    g = np.einsum("ij,jk,ik->i", P, Minv, P)
    for it in range(1, max_iter + 1):
        j = int(np.argmax(g))
        g_plus = g[j]
        if g_plus <= d * (1.0 + eps):
            return Minv, u, it - 1, float(g_plus)
        active = np.flatnonzero(u > 0)
        kk = int(active[np.argmin(g[active])])
        g_minus = g[kk]
        if g_plus / d - 1.0 >= 1.0 - g_minus / d:
            idx, gi = j, g_plus
            tau = (gi - d) / (d * (gi - 1.0))
        else:
            idx, gi = kk, g_minus
            tau_max = u[kk] / (1.0 - u[kk]) if u[kk] < 1.0 else 0.0
            tau = (d - gi) / (d * (gi - 1.0)) if gi > 1.0 else tau_max
            tau = -min(tau, tau_max)
        p = P[idx]
        Mp = Minv @ p
        denom = (1.0 - tau) + tau * gi
        Minv = (Minv - (tau / denom) * np.outer(Mp, Mp)) / (1.0 - tau)
        PMp = P @ Mp
        g = (g - (tau / denom) * PMp ** 2) / (1.0 - tau)
        u *= (1.0 - tau)
        u[idx] += tau
        if tau < 0:
            u[u < 1e-16] = 0.0
        if it % 200 == 0:
            M = P.T @ (u[:, None] * P)
            Minv = np.linalg.inv(M)
            g = np.einsum("ij,jk,ik->i", P, Minv, P)
    raise SolverError(f"MVEE did not reach eps={eps} within {max_iter} iterations")


def mvee(points, eps: float = DEFAULT_EPS, max_iter: int = MVEE_MAX_ITER) -> np.ndarray:
    """Origin-centered minimum-volume enclosing ellipsoid of ``points``.

    Returns ``H_out`` with ``p^T H_out p <= 1 + eps`` for every point; the
    ellipsoid {x : x^T H_out x <= 1} is (1+eps)-optimal in volume.  The input
    should be closed under negation.
    """
    P = np.asarray(points, dtype=float)
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 0.5)")
    if np.linalg.matrix_rank(P) < P.shape[1]:
        raise InvalidSetError("MVEE needs a point set spanning R^d")
    Minv, _, _, _ = _khachiyan(P, eps, max_iter)
    d = P.shape[1]
    H = Minv / d
    return 0.5 * (H + H.T)


@dataclass(frozen=True, eq=False)
class Regularizer:
    H: np.ndarray
    H_inv: np.ndarray
    chol: np.ndarray  # lower-triangular L with H = L L^T
    alpha_eff: float
    eps_mvee: float
    source: str  # "closed_form" or "mvee"

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def is_scalar(self) -> bool:
        off = self.H - np.diag(np.diag(self.H))
        diag = np.diag(self.H)
        return not np.any(off) and bool(np.all(diag == diag[0]))

    @property
    def is_diagonal(self) -> bool:
        return not np.any(self.H - np.diag(np.diag(self.H)))


def _cholesky(H):
    L = np.linalg.cholesky(H)
    piv = np.diag(L) ** 2
    if piv.min() < 1e-12 * piv.max():
        raise CertificationError("regularizer matrix is not safely positive definite")
    return L


def _make(H, alpha, eps, source):
    H = 0.5 * (H + H.T)
    L = _cholesky(H)
    H_inv = np.linalg.inv(H)
    return Regularizer(H=H, H_inv=0.5 * (H_inv + H_inv.T), chol=L, alpha_eff=float(alpha),
                       eps_mvee=eps, source=source)


def _k_points(cset, d, rng):
    if cset.has_vertices and geo.vertex_count(cset) <= MAX_MVEE_POINTS:
        V = geo.vertices(cset)
        return np.unique(np.vstack([V, -V]), axis=0), True
    # LMO-only: 4 d^2 boundary points of K
    dirs = rng.standard_normal((4 * d * d, d))
    return np.array([geo.symmetrized_lmo(cset, u) for u in dirs]), False


def _sup_h_norm(cset, H):
    """Upper bound on max_{x in X} sqrt(x^T H x) for LMO-only sets."""
    if cset.kind == geo.BALL:
        c = cset.center
        return math.sqrt(c @ H @ c) + cset.radius * math.sqrt(np.linalg.eigvalsh(H)[-1])
    if cset.kind == geo.BOX:
        mid = 0.5 * (cset.lower + cset.upper)
        half = 0.5 * (cset.upper - cset.lower)
        lam = np.linalg.eigvalsh(half[:, None] * H * half[None, :])[-1]
        return math.sqrt(mid @ H @ mid) + math.sqrt(lam * cset.dim)
    raise ValueError(f"no norm bound for {cset!r}")


def build_regularizer(cset: geo.ConvexSet, eps: float = DEFAULT_EPS, certify: bool = True,
                      n_directions: int = 1000, seed: int = 0) -> Regularizer:
    d = cset.dim
    if cset.kind == geo.SIMPLEX:
        reg = _make(d * np.eye(d), math.sqrt(d), eps, "closed_form")
    elif cset.kind == geo.BOX and cset.is_centered:
        # inscribed ellipsoid of [-u, u] touches every facet; corners sit at sqrt(d)
        reg = _make(np.diag(1.0 / cset.upper ** 2), math.sqrt(d), eps, "closed_form")
    elif cset.kind == geo.BALL and cset.is_centered:
        reg = _make(np.eye(d) / cset.radius ** 2, 1.0, eps, "closed_form")
    else:
        rng = np.random.default_rng(seed)
        P, exact_hull = _k_points(cset, d, rng)
        H = d * mvee(P, eps)
        alpha2 = float(np.einsum("ij,jk,ik->i", P, H, P).max())
        if not exact_hull:
            # sampled points only approximate K; use a rigorous bound on sup_X ||x||_H
            alpha2 = max(alpha2, _sup_h_norm(cset, H) ** 2)
        reg = _make(H, math.sqrt(alpha2), eps, "mvee")
    if certify:
        report = certify_sandwich(reg, cset, n_directions=n_directions, seed=seed)
        if not report["ok"]:
            raise CertificationError(f"ellipsoid sandwich failed: {report}")
    return reg


def certify_sandwich(reg: Regularizer, cset: geo.ConvexSet, n_directions: int = 1000,
                     seed: int = 0) -> dict:
    """Vertex (outer) and support-function (inner) checks of E subset K subset alpha E."""
    d = cset.dim
    rng = np.random.default_rng(seed)
    if cset.has_vertices and geo.vertex_count(cset) <= MAX_MVEE_POINTS:
        V = geo.vertices(cset)
    else:
        V = geo.boundary_points(cset, rng, n_directions)
    vmax = float(np.einsum("ij,jk,ik->i", V, reg.H, V).max())
    U = rng.standard_normal((n_directions, d))
    hk = np.array([max(geo.support(cset, u), geo.support(cset, -u)) for u in U])
    ell = np.sqrt(np.einsum("ij,jk,ik->i", U, reg.H_inv, U))
    inner_ratio = float((ell / hk).max())
    alpha_cap = math.sqrt(d * (d + 1))
    ok = (vmax <= reg.alpha_eff ** 2 + 1e-9 and inner_ratio <= 1.0 + 1e-6
          and reg.alpha_eff <= alpha_cap)
    return {"ok": bool(ok), "vertex_max": vmax, "alpha_eff": reg.alpha_eff,
            "alpha_cap": alpha_cap, "inner_ratio": inner_ratio}


def phi(reg: Regularizer, x) -> float:
    x = np.asarray(x, dtype=float)
    return 0.5 * float(x @ reg.H @ x)


def grad_phi(reg: Regularizer, x) -> np.ndarray:
    return reg.H @ np.asarray(x, dtype=float)


def bregman(reg: Regularizer, u, v) -> float:
    diff = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    return 0.5 * float(diff @ reg.H @ diff)


def argmin_phi(reg: Regularizer, cset: geo.ConvexSet) -> np.ndarray:
    from .oftrl import solve_reg_argmax

    return solve_reg_argmax(np.zeros(cset.dim), 1.0, reg, cset)
