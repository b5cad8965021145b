"""Phase schedule, exploration sampling and the least-squares phase estimate.

Within phase t a player either plays its base action xbar_t (fair coin) or
the mixture (1 - lam_t) xbar_t + lam_t x_i for a uniform spanner index i.
Pairing the i-th explore reward r' with a base reward r gives the
transformed reward (r' - (1 - lam) r) / lam, an unbiased sample of
<x_i, theta>.  Tags are encoded as ints: -1 for base, i >= 0 for explore(i).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SolverError
from .spanner import SpannerDesign

BASE = -1

NONE = "none"
SMALL_BATCH = "small_batch"
COUNT_FAILURE = "count_failure"


def log_term(t: int, delta: float) -> float:
    """ln(8 t^2 / delta)."""
    return math.log(8.0 * t * t / delta)


@dataclass(frozen=True)
class PhaseSchedule:
    t: int
    B: int
    lam: float
    delta: float
    batch_c: float = 1.0
    fallback_c: float = 1.0

    def fallback_threshold(self, n: int) -> float:
        """fallback_c * 32 n^2 ln(8 t^2 / delta)."""
        return self.fallback_c * 32.0 * n * n * log_term(self.t, self.delta)


def schedule(t: int, delta: float, batch_c: float = 1.0, fallback_c: float = 1.0) -> PhaseSchedule:
    if t < 1:
        raise ValueError("phase index must be >= 1")
    if not 0.0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 1/2]")
    if not (batch_c > 0 and fallback_c > 0):
        raise ValueError("batch_c and fallback_c must be positive")
    B = max(1, math.ceil(batch_c * log_term(t, delta) * t ** 3))
    return PhaseSchedule(t=t, B=B, lam=1.0 / (t * t), delta=delta, batch_c=batch_c,
                         fallback_c=fallback_c)


def draw_tags(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    """Fair coin per round, then a uniform spanner index for explore rounds."""
    coins = rng.random(size) < 0.5
    idx = rng.integers(0, n, size=size)
    return np.where(coins, BASE, idx)


def action_table(xbar, sched: PhaseSchedule, design: SpannerDesign) -> np.ndarray:
    """Row 0 is xbar; row i + 1 is (1 - lam) xbar + lam x_i."""
    xbar = np.asarray(xbar, dtype=float)
    explore = (1.0 - sched.lam) * xbar + sched.lam * design.points
    return np.vstack([xbar, explore])


def choose_action(xbar, sched: PhaseSchedule, design: SpannerDesign, rng=None, tag=None):
    """Return (action, tag).  Pass ``tag`` to replay a pre-drawn choice."""
    if tag is None:
        tag = int(draw_tags(rng, design.n, 1)[0])
    xbar = np.asarray(xbar, dtype=float)
    if tag == BASE:
        return xbar.copy(), BASE
    return (1.0 - sched.lam) * xbar + sched.lam * design.points[tag], int(tag)


class PhaseBuffer:
    """Tags and rewards of one phase, indexed by round within the phase."""

    def __init__(self, tags):
        self.tags = np.asarray(tags, dtype=np.int64)
        self.rewards = np.full(self.tags.size, np.nan)
        self.filled = 0

    @property
    def size(self) -> int:
        return self.tags.size

    @property
    def complete(self) -> bool:
        return self.filled == self.tags.size

    def record(self, r: float):
        if self.complete:
            raise IndexError("phase buffer already full")
        if not -1.0 - 1e-12 <= r <= 1.0 + 1e-12:
            raise ValueError(f"reward {r} outside [-1, 1]")
        self.rewards[self.filled] = r
        self.filled += 1

    @property
    def base_rewards(self):
        idx = np.flatnonzero(self.tags[: self.filled] == BASE)
        return list(zip(idx.tolist(), self.rewards[idx].tolist()))

    def explore_rewards(self, i: int):
        idx = np.flatnonzero(self.tags[: self.filled] == i)
        return list(zip(idx.tolist(), self.rewards[idx].tolist()))


@dataclass
class Estimate:
    theta_hat: np.ndarray
    fallback: str
    n0: int
    counts: np.ndarray  # N_{t,i}
    transformed: Optional[np.ndarray] = None  # r-hat_j over the balanced multiset
    z_index: Optional[np.ndarray] = None  # spanner index of each pair

    @property
    def min_count(self) -> int:
        return int(self.counts.min())


def estimate(buffer: PhaseBuffer, sched: PhaseSchedule, design: SpannerDesign) -> Estimate:
    if not buffer.complete:
        raise ValueError("estimate needs a complete phase buffer")
    n = design.n
    B = buffer.size
    tags, rewards = buffer.tags, buffer.rewards
    base_idx = np.flatnonzero(tags == BASE)
    counts = np.bincount(tags[tags >= 0], minlength=n)
    zero = np.zeros(n)
    if B < sched.fallback_threshold(n):
        return Estimate(zero, SMALL_BATCH, base_idx.size, counts)
    q = max(1, B // (4 * n))
    if base_idx.size < max(math.ceil(B / 4), n * q) or counts.min() < q:
        return Estimate(zero, COUNT_FAILURE, base_idx.size, counts)

    # first q explore rounds of each index, merged back into round order
    picks = np.sort(np.concatenate([np.flatnonzero(tags == i)[:q] for i in range(n)]))
    base = base_idx[: n * q]
    lam = sched.lam
    r_hat = (rewards[picks] - (1.0 - lam) * rewards[base]) / lam
    zi = tags[picks]
    Z = design.points[zi]
    gram = Z.T @ Z
    try:
        theta = np.linalg.solve(gram, Z.T @ r_hat)
    except np.linalg.LinAlgError as exc:
        raise SolverError("singular Gram matrix in phase estimate") from exc
    return Estimate(theta, NONE, base_idx.size, counts, transformed=r_hat, z_index=zi)


def phase_utility(theta_t, theta_prev, t: int) -> np.ndarray:
    """u_t = t theta_t - (t - 1) theta_{t-1}."""
    return t * np.asarray(theta_t, dtype=float) - (t - 1) * np.asarray(theta_prev, dtype=float)
