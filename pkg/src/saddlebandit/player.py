"""One player's state machine.

A player is built from its own action set and scalar parameters only; it
never sees the payoff matrix, the opponent's set or the opponent's actions.
The referee drives it through ``next_action`` / ``observe``.
"""

from typing import List, Optional

import numpy as np

from . import estimator as est
from .errors import ProtocolError, SolverError
from .geometry import ConvexSet
from .oftrl import DEFAULT_ETA, OftrlState, init_oftrl, oftrl_step
from .rounding import Regularizer, build_regularizer
from .spanner import SpannerDesign, build_spanner

DRIFT_CHECK_EVERY = 32
DRIFT_TOL = 1e-10


def player_rng(seed: int, label: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(label,)))


class PlayerState:
    def __init__(self, cset: ConvexSet, design: SpannerDesign, reg: Regularizer, delta: float,
                 eta: float = DEFAULT_ETA, rng: Optional[np.random.Generator] = None,
                 batch_c: float = 1.0, fallback_c: float = 1.0, audit: bool = False):
        self.set = cset
        self.design = design
        self.reg = reg
        self.delta = float(delta)
        self.batch_c = float(batch_c)
        self.fallback_c = float(fallback_c)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.oftrl: OftrlState = init_oftrl(reg, cset, eta, audit=audit)
        self.theta_prev = np.zeros(cset.dim)
        self.tilde_history: List[np.ndarray] = []
        self.xbar = np.zeros(cset.dim)
        self.t = 0
        self.last_estimate: Optional[est.Estimate] = None
        self.last_utility = np.zeros(cset.dim)
        self._pending = False
        self._start_phase()

    @property
    def dim(self) -> int:
        return self.set.dim

    def _start_phase(self):
        self.t += 1
        x_tilde = self.oftrl.iterate
        self.tilde_history.append(x_tilde.copy())
        if self.t == 1:
            self.xbar = x_tilde.copy()
        else:
            self.xbar = self.xbar + (x_tilde - self.xbar) / self.t
        if self.t % DRIFT_CHECK_EVERY == 0:
            exact = np.mean(self.tilde_history, axis=0)
            drift = float(np.abs(exact - self.xbar).max())
            if drift > DRIFT_TOL:
                raise SolverError(f"running average drifted by {drift:.3e} at phase {self.t}")
            self.xbar = exact
        self.phase = est.schedule(self.t, self.delta, self.batch_c, self.fallback_c)
        self.buffer = est.PhaseBuffer(est.draw_tags(self.rng, self.design.n, self.phase.B))
        self._table = est.action_table(self.xbar, self.phase, self.design)

    def next_action(self) -> np.ndarray:
        if self._pending:
            raise ProtocolError("next_action called twice without an observe")
        self._pending = True
        tag = self.buffer.tags[self.buffer.filled]
        return self._table[tag + 1].copy()

    @property
    def current_tag(self) -> int:
        return int(self.buffer.tags[self.buffer.filled])

    def observe(self, r: float) -> bool:
        """Record the reward of the pending action; True when a phase just ended."""
        if not self._pending:
            raise ProtocolError("observe called without a pending action")
        self._pending = False
        self.buffer.record(float(r))
        if self.buffer.complete:
            self._end_phase()
            return True
        return False

    def _end_phase(self):
        e = est.estimate(self.buffer, self.phase, self.design)
        u = est.phase_utility(e.theta_hat, self.theta_prev, self.t)
        self.theta_prev = e.theta_hat
        self.last_estimate = e
        self.last_utility = u
        oftrl_step(self.oftrl, u, self.reg, self.set)
        self.finished_buffer = self.buffer
        self.finished_phase = self.phase
        self._start_phase()


def make_player(cset: ConvexSet, delta: float, eta: float = DEFAULT_ETA, seed: int = 0,
                label: int = 0, batch_c: float = 1.0, fallback_c: float = 1.0,
                audit: bool = False) -> PlayerState:
    """Build a player from its own set and scalar parameters only."""
    design = build_spanner(cset)
    reg = build_regularizer(cset)
    return PlayerState(cset, design, reg, delta, eta, player_rng(seed, label), batch_c,
                       fallback_c, audit)
