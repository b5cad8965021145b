"""The referee and the lockstep round loop for two players.

Both players run the same phased algorithm; since the batch size depends
only on (t, delta), a shared delta keeps their phases aligned, which is
asserted every phase.  The referee owns the game, scales payoffs and hands
each player only its own scalar reward.
"""

import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import geometry as geo
from . import metrics as mx
from .errors import ProtocolError
from .estimator import NONE
from .game import GameInstance, make_game
from .norms import dual_norm, norm_context, primal_norm
from .oftrl import DEFAULT_ETA, audit_tol, rvu_audit
from .player import PlayerState, make_player

ROW, COL = 0, 1


@dataclass
class RunConfig:
    setX: geo.ConvexSet
    setY: geo.ConvexSet
    A: np.ndarray
    delta: float = 0.1
    eta: float = DEFAULT_ETA
    max_phases: int = 10
    batch_c: float = 1.0
    fallback_c: float = 1.0
    seed: int = 0
    audit_enabled: bool = True
    round_log_stride: int = 100
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        if not 0.0 < self.delta <= 0.5:
            raise ValueError(f"delta = {self.delta} must lie in (0, 1/2]")
        if int(self.max_phases) < 1:
            raise ValueError("max_phases must be >= 1")
        if self.round_log_stride < 1:
            raise ValueError("round_log_stride must be >= 1")
        if not self.eta > 0:
            raise ValueError("eta must be positive")

    def fingerprint(self) -> str:
        blob = json.dumps({
            "setX": self.setX.describe(), "setY": self.setY.describe(), "A": self.A.tolist(),
            "delta": self.delta, "eta": self.eta, "max_phases": self.max_phases,
            "batch_c": self.batch_c, "fallback_c": self.fallback_c, "seed": self.seed,
            "audit_enabled": self.audit_enabled, "round_log_stride": self.round_log_stride,
        }, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


class Referee:
    """Computes r = <x, A_scaled y>, paying +r to the row and -r to the column."""

    def __init__(self, game: GameInstance):
        self.game = game
        self.k = 0
        self.last_pair = None

    def play_round(self, row: PlayerState, col: PlayerState) -> float:
        x = row.next_action()
        y = col.next_action()
        r = float(x @ (self.game.A_scaled @ y))
        r = min(1.0, max(-1.0, r))
        self.k += 1
        self.last_pair = (x, y)
        row.observe(r)
        col.observe(-r)
        return r


def _estimate_diag(player, ctx, theta_bar, n, t):
    e = player.last_estimate
    delta = e.theta_hat - theta_bar
    dn = dual_norm(ctx, delta)
    bound = mx.concentration_bound(n, t)
    resid = None
    if e.transformed is not None:
        resid = float(np.abs(e.transformed - player.design.points[e.z_index] @ theta_bar).max())
    return e, delta, dn, bound, resid


def run(config: RunConfig, progress: Optional[Callable[[dict], None]] = None) -> mx.Trace:
    started = time.perf_counter()
    game = make_game(config.setX, config.setY, config.A)
    row = make_player(config.setX, config.delta, config.eta, config.seed, ROW, config.batch_c,
                      config.fallback_c, audit=config.audit_enabled)
    col = make_player(config.setY, config.delta, config.eta, config.seed, COL, config.batch_c,
                      config.fallback_c, audit=config.audit_enabled)
    ctx_x, ctx_y = norm_context(config.setX), norm_context(config.setY)
    n, m = game.n, game.m
    A = game.A_scaled
    ref = Referee(game)
    trace = mx.Trace()
    stride = int(config.round_log_stride)
    sum_sq = {"x": 0.0, "y": 0.0}

    for t in range(1, int(config.max_phases) + 1):
        if row.t != t or col.t != t or row.phase.B != col.phase.B:
            raise ProtocolError(f"players out of lockstep at phase {t}")
        B, lam = row.phase.B, row.phase.lam
        xbar, ybar = row.xbar.copy(), col.xbar.copy()
        gap_avg = mx.duality_gap(game, xbar, ybar)
        theta_bar_x = mx.true_phase_theta(game, col, t, "row")
        theta_bar_y = mx.true_phase_theta(game, row, t, "col")
        x_t, y_t = row.tilde_history[-1], col.tilde_history[-1]
        x_prev = row.tilde_history[-2] if t > 1 else x_t
        y_prev = col.tilde_history[-2] if t > 1 else y_t

        for s in range(B):
            r = ref.play_round(row, col)
            if ref.k % stride == 0:
                x, y = ref.last_pair
                trace.rounds.append({"k": ref.k, "t": t, "s": s + 1, "reward": r,
                                     "gap_played": mx.duality_gap(game, x, y)})
        gap_last = mx.duality_gap(game, *ref.last_pair)

        ex, dx, dnx, bx, resx = _estimate_diag(row, ctx_x, theta_bar_x, n, t)
        ey, dy, dny, by, resy = _estimate_diag(col, ctx_y, theta_bar_y, m, t)
        rec = {
            "t": t, "B_t": B, "lambda_t": lam, "gap_avg": gap_avg, "gap_last": gap_last,
            "fallback_x": ex.fallback, "fallback_y": ey.fallback,
            "n0_x": ex.n0, "min_ni_x": ex.min_count, "n0_y": ey.n0, "min_ni_y": ey.min_count,
            "delta_dual_x": dnx, "delta_dual_y": dny, "conc_bound_x": bx, "conc_bound_y": by,
            "conc_ok_x": dnx <= bx, "conc_ok_y": dny <= by,
            "max_resid_x": resx, "max_resid_y": resy,
            # u^x_t = A y~_t and u^y_t = -A^T x~_t, with y~_0 = y~_1, x~_0 = x~_1
            "uinc_lhs_x": dual_norm(ctx_x, A @ (y_t - y_prev)),
            "uinc_rhs_x": primal_norm(ctx_y, y_t - y_prev) if ctx_y.supports_primal else None,
            "uinc_lhs_y": dual_norm(ctx_y, A.T @ (x_t - x_prev)),
            "uinc_rhs_y": primal_norm(ctx_x, x_t - x_prev) if ctx_x.supports_primal else None,
        }
        for side, d, ctx in (("x", dx, ctx_x), ("y", dy, ctx_y)):
            td = t * dual_norm(ctx, d)
            sum_sq[side] += td * td
            rec[f"tdelta_{side}"] = td
            rec[f"sum_tdelta_sq_{side}"] = sum_sq[side]
        for side, p, ctx in (("x", row, ctx_x), ("y", col, ctx_y)):
            slack = tol = None
            if config.audit_enabled and ctx.supports_primal:
                comp = geo.lmo(p.set, p.oftrl.cum_utility)
                slack = rvu_audit(p.oftrl.history, comp, p.reg, ctx, p.oftrl.eta)
                tol = audit_tol(len(p.oftrl.history), p.oftrl.max_tol)
            rec[f"rvu_slack_{side}"] = slack
            rec[f"rvu_tol_{side}"] = tol
        for side, e, dn, bnd, theta_bar, p in (("x", ex, dnx, bx, theta_bar_x, row),
                                               ("y", ey, dny, by, theta_bar_y, col)):
            if e.fallback == NONE and dn > bnd:
                trace.violations.append({
                    "kind": "concentration", "side": side, "t": t, "B_t": B,
                    "delta_dual": dn, "bound": bnd, "theta_hat": e.theta_hat.tolist(),
                    "theta_bar": theta_bar.tolist(), "n0": e.n0, "counts": e.counts.tolist(),
                    "xbar": (xbar if side == "x" else ybar).tolist(),
                })
        trace.phases.append(rec)
        if progress is not None:
            progress(rec)

    trace.meta = {
        "config_hash": config.fingerprint(), "seed": config.seed, "rounds": ref.k,
        "payoff_scale": game.scale, "n": n, "m": m,
        "alpha_eff_x": row.reg.alpha_eff, "alpha_eff_y": col.reg.alpha_eff,
        "spanner_bound_x": row.design.certified_bound, "spanner_bound_y": col.design.certified_bound,
        "seconds": time.perf_counter() - started,
    }
    return trace
