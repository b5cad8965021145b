"""Bilinear zero-sum game instances and payoff normalization.

Only the referee and the diagnostics import this module; player code must
not (the uncoupling contract is checked by a dependency test).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .geometry import ConvexSet, lmo, support, vertex_count, vertices

EPS_GUARD = float(np.finfo(float).eps)
ALTERNATING_STARTS = 16
SAFETY_FACTOR = 2.0


@dataclass(frozen=True, eq=False)
class GameInstance:
    setX: ConvexSet
    setY: ConvexSet
    A: np.ndarray
    scale: float
    A_scaled: np.ndarray

    @property
    def n(self) -> int:
        return self.setX.dim

    @property
    def m(self) -> int:
        return self.setY.dim


def _dual(cset, z):
    return max(support(cset, z), support(cset, -z))


def _alternating_bound(setX, setY, A, rng):
    best = 0.0
    for _ in range(ALTERNATING_STARTS):
        for sign in (1.0, -1.0):
            y = lmo(setY, rng.standard_normal(setY.dim))
            val = -np.inf
            for _ in range(200):
                x = lmo(setX, sign * (A @ y))
                y = lmo(setY, sign * (A.T @ x))
                new = sign * float(x @ A @ y)
                if new <= val + 1e-15 * max(1.0, abs(val)):
                    val = max(val, new)
                    break
                val = new
            best = max(best, val)
    return best


def payoff_scale(setX: ConvexSet, setY: ConvexSet, A) -> float:
    """An upper bound s >= sup_{x,y} |x^T A y| (never below machine epsilon).

    Exact whenever one side has a vertex list (the inner supremum is a dual
    norm evaluated by two LMO calls); otherwise a factor-2 inflated
    alternating-ascent estimate.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (setX.dim, setY.dim):
        raise DimensionError(f"A has shape {A.shape}, expected ({setX.dim}, {setY.dim})")
    if not np.any(A):
        return EPS_GUARD
    candidates = []
    if setX.has_vertices:
        candidates.append((vertex_count(setX), "x"))
    if setY.has_vertices:
        candidates.append((vertex_count(setY), "y"))
    if candidates:
        _, side = min(candidates)
        if side == "x":
            s = max(_dual(setY, A.T @ v) for v in vertices(setX))
        else:
            s = max(_dual(setX, A @ w) for w in vertices(setY))
    else:
        rng = np.random.default_rng(0)
        s = SAFETY_FACTOR * _alternating_bound(setX, setY, A, rng)
    return max(float(s), EPS_GUARD)


def make_game(setX: ConvexSet, setY: ConvexSet, A) -> GameInstance:
    A = np.array(A, dtype=float)
    s = payoff_scale(setX, setY, A)
    A_scaled = A / s
    A.setflags(write=False)
    A_scaled.setflags(write=False)
    return GameInstance(setX=setX, setY=setY, A=A, scale=s, A_scaled=A_scaled)

