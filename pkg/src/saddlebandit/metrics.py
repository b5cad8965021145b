"""Referee-side diagnostics: duality gaps, true phase utilities, traces and CSV output.

Everything here may look at the payoff matrix; none of it is visible to the
players.
"""

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from . import geometry as geo
from .errors import InsufficientDataError
from .game import GameInstance

SCHEMA_VERSION = 1

PHASE_COLUMNS = (
    "t", "B_t", "lambda_t", "gap_avg", "gap_last",
    "fallback_x", "fallback_y", "n0_x", "min_ni_x", "n0_y", "min_ni_y",
    "delta_dual_x", "delta_dual_y", "conc_bound_x", "conc_bound_y", "conc_ok_x", "conc_ok_y",
    "max_resid_x", "max_resid_y",
    "uinc_lhs_x", "uinc_rhs_x", "uinc_lhs_y", "uinc_rhs_y",
    "tdelta_x", "tdelta_y", "sum_tdelta_sq_x", "sum_tdelta_sq_y",
    "rvu_slack_x", "rvu_slack_y", "rvu_tol_x", "rvu_tol_y",
)
ROUND_COLUMNS = ("k", "t", "s", "reward", "gap_played")


def duality_gap(game: GameInstance, x, y) -> float:
    """max_x' <x', A y> - min_y' <x, A y'> on the scaled matrix, via two LMO calls."""
    A = game.A_scaled
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    Ay = A @ y
    xA = A.T @ x
    best_x = geo.lmo(game.setX, Ay)
    best_y = geo.lmo(game.setY, -xA)
    return float(best_x @ Ay) - float(xA @ best_y)


def vertex_gap(game: GameInstance, x, y) -> float:
    """Duality gap by vertex enumeration (both sets must have vertex lists)."""
    A = game.A_scaled
    Ay = A @ np.asarray(y, dtype=float)
    xA = A.T @ np.asarray(x, dtype=float)
    return float((geo.vertices(game.setX) @ Ay).max() - (geo.vertices(game.setY) @ xA).min())


def expected_action(xbar, lam: float, design) -> np.ndarray:
    """Mean action over one phase: (1/2)((1 - lam) xbar + lam zbar) + (1/2) xbar."""
    xbar = np.asarray(xbar, dtype=float)
    zbar = design.points.mean(axis=0)
    return 0.5 * ((1.0 - lam) * xbar + lam * zbar) + 0.5 * xbar


def true_phase_theta(game: GameInstance, opponent_state, t: int, side: str = "row") -> np.ndarray:
    """theta-bar_t for ``side`` given the opponent's phase-t state.

    ``opponent_state`` needs ``xbar`` (its running average) and ``design``.
    Row utilities are A y-hat; column utilities are -A^T x-hat.
    """
    lam = 1.0 / (t * t)
    hat = expected_action(opponent_state.xbar, lam, opponent_state.design)
    if side == "row":
        return game.A_scaled @ hat
    if side == "col":
        return -(game.A_scaled.T @ hat)
    raise ValueError(f"side must be 'row' or 'col', not {side!r}")


def concentration_bound(n: int, t: int) -> float:
    """48 sqrt(n^3 / t^3)."""
    return 48.0 * math.sqrt(n ** 3 / t ** 3)


@dataclass
class Trace:
    phases: List[Dict] = field(default_factory=list)
    rounds: List[Dict] = field(default_factory=list)
    meta: Dict = field(default_factory=dict)
    violations: List[Dict] = field(default_factory=list)

    def column(self, name: str, table: str = "phase") -> np.ndarray:
        rows = self.phases if table == "phase" else self.rounds
        return np.array([r[name] for r in rows], dtype=float)


def slope_fit(trace, field_name: str, t_min: float, t_max: float, x_field: str = "t",
              table: str = "phase"):
    """Least-squares fit of log(field) against log(x_field) over t in [t_min, t_max].

    ``trace`` is a :class:`Trace` or a list of record dicts.  Returns
    ``(slope, intercept)``; raises InsufficientDataError with fewer than 3
    usable points.
    """
    rows = trace if isinstance(trace, list) else (trace.phases if table == "phase" else trace.rounds)
    xs, ys = [], []
    for r in rows:
        v = r[field_name]
        if t_min <= r["t"] <= t_max and v is not None and v > 0 and r[x_field] > 0:
            xs.append(math.log(r[x_field]))
            ys.append(math.log(v))
    if len(xs) < 3:
        raise InsufficientDataError(f"need >= 3 positive points of {field_name!r}, got {len(xs)}")
    slope, intercept = np.polyfit(np.array(xs), np.array(ys), 1)
    return float(slope), float(intercept)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(columns, rows, header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def write_csv(path, columns, rows, append: bool = False):
    """Write rows; when appending, the existing header must match ``columns``."""
    if append and os.path.exists(path) and os.path.getsize(path) > 0:
        with open(path, newline="") as fh:
            existing = next(csv.reader(fh))
        if tuple(existing) != tuple(columns):
            raise ValueError(f"{path}: header mismatch, cannot append (schema v{SCHEMA_VERSION})")
        with open(path, "a", newline="") as fh:
            fh.write(csv_text(columns, rows, header=False))
        return
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(columns, rows))


def _safe_slope(trace, field_name, t_min, t_max, **kw):
    try:
        return slope_fit(trace, field_name, t_min, t_max, **kw)[0]
    except InsufficientDataError:
        return None


def summary(trace: Trace) -> dict:
    T = len(trace.phases)
    last = trace.phases[-1] if trace.phases else {}
    nonfb = [p for p in trace.phases if p["fallback_x"] == "none"] + \
        [p for p in trace.phases if p["fallback_y"] == "none"]
    conc_viol = sum(1 for p in trace.phases if p["fallback_x"] == "none" and not p["conc_ok_x"]) + \
        sum(1 for p in trace.phases if p["fallback_y"] == "none" and not p["conc_ok_y"])
    uinc_viol = sum(1 for p in trace.phases
                    for s in ("x", "y") if p[f"uinc_lhs_{s}"] > p[f"uinc_rhs_{s}"] + 1e-8)
    rvu_viol = sum(1 for p in trace.phases for s in ("x", "y")
                   if p[f"rvu_slack_{s}"] is not None and p[f"rvu_slack_{s}"] < -p[f"rvu_tol_{s}"])
    resid_viol = sum(1 for p in trace.phases for s in ("x", "y")
                     if p[f"max_resid_{s}"] is not None and p[f"max_resid_{s}"] > 4.0 + 1e-12)
    return {
        "schema_version": SCHEMA_VERSION,
        "phases": T,
        "rounds": trace.meta.get("rounds"),
        "final_avg_gap": last.get("gap_avg"),
        "final_last_gap": last.get("gap_last"),
        "slope_avg_gap": _safe_slope(trace, "gap_avg", max(1, T // 5), T),
        "slope_played_gap_rounds": _safe_slope(trace, "gap_played", max(1, T // 5), T,
                                               x_field="k", table="round"),
        "nonfallback_estimates": len(nonfb),
        "concentration_violations": conc_viol,
        "uincrement_violations": uinc_viol,
        "rvu_violations": rvu_viol,
        "residual_violations": resid_viol,
        "violation_details": trace.violations,
        "meta": trace.meta,
    }


def write_summary(path, trace: Trace, extra=None):
    data = summary(trace)
    if extra:
        data.update(extra)
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return data
