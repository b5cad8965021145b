"""Optimistic FTRL with a quadratic regularizer, and the RVU audit.

The step solves

    argmax_{x in X}  <g, x> - phi(x) / eta,      phi(x) = x^T H x / 2,

which is the H-metric projection of ``eta H^-1 g`` onto X.  Euclidean-type
projections are used when H has matching structure (scalar H on the simplex
or a ball, diagonal H on a box); everything else goes through Frank-Wolfe
with exact line search, using away steps on polytopes so the gap
certificate reaches 1e-10 even when the optimum sits on a face.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import geometry as geo
from .errors import DimensionError, SolverError
from .norms import NormContext, dual_norm, primal_norm
from .rounding import Regularizer, argmin_phi, bregman

DEFAULT_ETA = 1.0 / 6.0
DEFAULT_MAX_ITERS = 100_000
REFRESH_EVERY = 64


def default_tol(g) -> float:
    return 1e-10 * (1.0 + float(np.abs(g).max(initial=0.0)))


@dataclass
class SolveInfo:
    iterations: int
    gap: float
    method: str


def _objective(g, H, eta, x):
    return float(g @ x) - 0.5 * float(x @ H @ x) / eta


def _exact(g, eta, reg, cset):
    """Closed-form projection when H matches the set's geometry, else None."""
    kind = cset.kind
    if kind == geo.SIMPLEX and reg.is_scalar:
        return geo.project_simplex(eta * g / reg.H[0, 0])
    if kind == geo.BOX and reg.is_diagonal:
        return np.clip(eta * g / np.diag(reg.H), cset.lower, cset.upper)
    if kind == geo.BALL and reg.is_scalar:
        p = eta * g / reg.H[0, 0]
        off = p - cset.center
        nrm = float(np.linalg.norm(off))
        if nrm <= cset.radius:
            return p
        return cset.center + off * (cset.radius / nrm)
    return None


def _fw_gap(g, H, eta, cset, x):
    grad = g - (H @ x) / eta
    s = geo.lmo(cset, grad)
    return float(grad @ (s - x)), grad, s


def _vanilla_fw(g, H, eta, cset, x, tol, max_iters):
    for it in range(max_iters + 1):
        gap, grad, s = _fw_gap(g, H, eta, cset, x)
        if gap <= tol:
            return x, it, gap
        d = s - x
        curv = float(d @ H @ d)
        gamma = 1.0 if curv <= 0 else min(1.0, eta * float(grad @ d) / curv)
        x = x + gamma * d
    raise SolverError(f"Frank-Wolfe gap {gap:.3e} above tol {tol:.3e} after {max_iters} iterations")


def _away_fw(g, H, eta, cset, x0, tol, max_iters):
    atoms = [np.array(x0, dtype=float)]
    weights = [1.0]
    x = atoms[0].copy()
    for it in range(max_iters + 1):
        gap, grad, s = _fw_gap(g, H, eta, cset, x)
        if gap <= tol:
            return x, it, gap
        scores = [float(grad @ a) for a in atoms]
        j = int(np.argmin(scores))
        away_gain = float(grad @ x) - scores[j]
        if gap >= away_gain:
            d = s - x
            gmax = 1.0
            step = "fw"
        else:
            d = x - atoms[j]
            w = weights[j]
            gmax = w / (1.0 - w) if w < 1.0 else np.inf
            step = "away"
        curv = float(d @ H @ d)
        gamma = eta * float(grad @ d) / curv if curv > 0 else gmax
        gamma = min(max(gamma, 0.0), gmax)
        if step == "fw":
            weights = [w * (1.0 - gamma) for w in weights]
            for i, a in enumerate(atoms):
                if np.array_equal(a, s):
                    weights[i] += gamma
                    break
            else:
                atoms.append(s)
                weights.append(gamma)
        else:
            weights = [w * (1.0 + gamma) for w in weights]
            weights[j] -= gamma
        keep = [i for i, w in enumerate(weights) if w > 1e-15]
        atoms = [atoms[i] for i in keep]
        tot = sum(weights[i] for i in keep)
        weights = [weights[i] / tot for i in keep]
        if it % REFRESH_EVERY == 0 or step == "away":
            x = np.asarray(weights) @ np.asarray(atoms)
        else:
            x = x + gamma * d
    raise SolverError(f"away-step Frank-Wolfe gap {gap:.3e} above tol {tol:.3e} after {max_iters} iterations")


def solve_reg_argmax(g, eta: float, reg: Regularizer, cset: geo.ConvexSet, tol: Optional[float] = None,
                     max_iters: int = DEFAULT_MAX_ITERS, x0=None, info: bool = False):
    """Maximize ``<g, x> - phi(x)/eta`` over ``cset``.

    Returns the maximizer, or ``(x, SolveInfo)`` when ``info`` is true.
    Iterative paths stop once the Frank-Wolfe gap is at most ``tol``
    (default ``1e-10 * (1 + max|g|)``) and raise :class:`SolverError` if the
    iteration cap is hit first.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (cset.dim,):
        raise DimensionError(f"g has shape {g.shape}, expected ({cset.dim},)")
    if not eta > 0:
        raise ValueError("eta must be positive")
    tol = default_tol(g) if tol is None else float(tol)
    if not tol > 0:
        raise ValueError("tol must be positive")
    H = reg.H
    x = None if x0 is not None else _exact(g, eta, reg, cset)
    if x is not None:
        out = (x, SolveInfo(0, 0.0, "exact"))
    else:
        start = geo.lmo(cset, g) if x0 is None else np.asarray(x0, dtype=float)
        if cset.kind == geo.BALL:
            x, it, gap = _vanilla_fw(g, H, eta, cset, start, tol, max_iters)
            out = (x, SolveInfo(it, gap, "fw"))
        else:
            x, it, gap = _away_fw(g, H, eta, cset, start, tol, max_iters)
            out = (x, SolveInfo(it, gap, "away_fw"))
    return out if info else out[0]


@dataclass
class OftrlState:
    eta: float
    cum_utility: np.ndarray
    last_utility: np.ndarray
    iterate: np.ndarray  # x~_{t+1}, the point to play next
    audit: bool = False
    history: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    max_tol: float = 0.0
    steps: int = 0


def init_oftrl(reg: Regularizer, cset: geo.ConvexSet, eta: float = DEFAULT_ETA,
               audit: bool = False) -> OftrlState:
    d = cset.dim
    x1 = argmin_phi(reg, cset)
    return OftrlState(eta=float(eta), cum_utility=np.zeros(d), last_utility=np.zeros(d),
                      iterate=x1, audit=audit, max_tol=default_tol(np.zeros(d)))


def oftrl_step(state: OftrlState, u, reg: Regularizer, cset: geo.ConvexSet) -> np.ndarray:
    """Feed utility u_t; returns x~_{t+1} = argmax <x, sum_{l<=t} u_l + u_t> - phi(x)/eta."""
    u = np.asarray(u, dtype=float)
    if state.audit:
        state.history.append((state.iterate.copy(), u.copy()))
    state.cum_utility = state.cum_utility + u
    state.last_utility = u.copy()
    g = state.cum_utility + u
    tol = default_tol(g)
    state.max_tol = max(state.max_tol, tol)
    state.iterate = solve_reg_argmax(g, state.eta, reg, cset, tol=tol)
    state.steps += 1
    return state.iterate


def audit_tol(T: int, solver_tol: float) -> float:
    return 10.0 * T * solver_tol


def rvu_terms(history, x, reg: Regularizer, norm_ctx: NormContext, eta: float) -> dict:
    if not history:
        raise ValueError("RVU audit needs a non-empty history")
    x = np.asarray(x, dtype=float)
    x1 = history[0][0]
    prev_u = np.zeros_like(x1)
    prev_x = x1
    regret = variation = movement = 0.0
    for xt, ut in history:
        regret += float(ut @ (x - xt))
        variation += dual_norm(norm_ctx, ut - prev_u) ** 2
        movement += primal_norm(norm_ctx, xt - prev_x) ** 2
        prev_u, prev_x = ut, xt
    bound = bregman(reg, x, x1) / eta + eta * variation - movement / (4.0 * eta)
    return {"regret": regret, "bound": bound, "variation": variation, "movement": movement,
            "slack": bound - regret}


def rvu_audit(history, x, reg: Regularizer, norm_ctx: NormContext, eta: float = DEFAULT_ETA) -> float:
    """RHS minus LHS of the RVU inequality against comparator ``x``.

    ``history`` holds pairs (x~_t, u_t) with u_0 = 0 and x~_0 = x~_1.
    """
    return rvu_terms(history, x, reg, norm_ctx, eta)["slack"]
