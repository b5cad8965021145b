import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from saddlebandit import geometry as geo
from saddlebandit.errors import SolverError
from saddlebandit.norms import dual_norm, norm_context
from saddlebandit.oftrl import (audit_tol, init_oftrl, oftrl_step, rvu_audit, rvu_terms,
                                solve_reg_argmax)
from saddlebandit.rounding import argmin_phi, build_regularizer

import oracles

BALL = geo.ball([0, 0], 1)
S2 = geo.simplex(2)


def test_ball_examples():
    r = build_regularizer(BALL)
    assert np.allclose(solve_reg_argmax([0.3, 0.4], 1.0, r, BALL), [0.3, 0.4])
    assert np.allclose(solve_reg_argmax([3, 4], 1.0, r, BALL), [0.6, 0.8])


def test_simplex_symmetric_example():
    r = build_regularizer(S2)
    assert np.allclose(solve_reg_argmax([0, 0], 1 / 6, r, S2), [0.5, 0.5])


def _describe(cset):
    if cset.kind == geo.SIMPLEX:
        return {"dim": cset.dim}
    if cset.kind == geo.BOX:
        return {"lower": cset.lower, "upper": cset.upper}
    if cset.kind == geo.BALL:
        return {"center": cset.center, "radius": cset.radius}
    return {"V": cset.vertex_array}


CASES = [geo.simplex(4), geo.box([-1, 0, -2], [1, 2, 0]), geo.ball([0.2, 0.1, -0.3], 1.2),
         geo.vpolytope(np.random.default_rng(1).standard_normal((12, 3)))]
CASE_IDS = ["simplex", "offbox", "offball", "vpoly"]


@pytest.mark.parametrize("cset", CASES, ids=CASE_IDS)
def test_solver_matches_conic_oracle(cset):
    r = build_regularizer(cset)
    rng = np.random.default_rng(4)
    for _ in range(8):
        g = rng.standard_normal(cset.dim) * rng.choice([0.1, 1, 10])
        x = solve_reg_argmax(g, 1 / 6, r, cset)
        ref = oracles.reg_argmax_cvxpy(g, 1 / 6, r.H, cset.kind, **_describe(cset))
        assert np.allclose(x, ref, atol=1e-5)
        assert geo.membership(cset, x, 1e-8)


@pytest.mark.parametrize("cset", CASES, ids=CASE_IDS)
def test_fw_gap_certificate(cset):
    r = build_regularizer(cset)
    rng = np.random.default_rng(5)
    for _ in range(10):
        g = rng.standard_normal(cset.dim) * 5
        x, info = solve_reg_argmax(g, 1 / 6, r, cset, info=True)
        tol = 1e-10 * (1 + np.abs(g).max())
        grad = g - 6 * r.H @ x
        gap = grad @ (geo.lmo(cset, grad) - x)
        assert gap <= tol * 1.01 + 1e-15


@pytest.mark.parametrize("cset", CASES[1:], ids=CASE_IDS[1:])
def test_uniqueness_from_different_starts(cset):
    r = build_regularizer(cset)
    rng = np.random.default_rng(6)
    g = rng.standard_normal(cset.dim) * 3
    a, b = (solve_reg_argmax(g, 1 / 6, r, cset, x0=p) for p in geo.sample_points(cset, rng, 2))
    assert np.sqrt((a - b) @ r.H @ (a - b)) <= 1e-6


def test_exact_ball_kkt():
    r = build_regularizer(BALL)
    g = np.array([3.0, -7.0])
    x = solve_reg_argmax(g, 1.0, r, BALL)
    # at a boundary optimum the gradient g - x is a nonnegative multiple of x
    resid = g - x
    mu = resid @ x
    assert mu >= 0
    assert np.abs(resid - mu * x).max() <= 1e-12


def test_iteration_cap_surfaces():
    cset = geo.vpolytope(np.random.default_rng(2).standard_normal((30, 5)))
    r = build_regularizer(cset)
    with pytest.raises(SolverError):
        solve_reg_argmax(np.ones(5), 1 / 6, r, cset, tol=1e-300, max_iters=3)


def test_zero_utilities_keep_iterate():
    for cset in (S2, BALL, geo.box([-1, -1], [1, 1])):
        r = build_regularizer(cset)
        s = init_oftrl(r, cset)
        x1 = s.iterate.copy()
        for _ in range(5):
            assert np.allclose(oftrl_step(s, np.zeros(2), r, cset), x1)


def test_optimism_unrolled_against_grid():
    r = build_regularizer(S2)
    s = init_oftrl(r, S2)
    g = np.array([0.9, -0.4])
    grid = np.linspace(0, 1, 1001)
    pts = np.c_[grid, 1 - grid]

    def brute(c):
        vals = pts @ c - 0.5 * np.einsum("ij,jk,ik->i", pts, r.H, pts) * 6
        return pts[np.argmax(vals)]

    x2 = oftrl_step(s, g, r, S2)
    assert np.abs(x2 - brute(2 * g)).max() <= 1e-3
    x3 = oftrl_step(s, np.zeros(2), r, S2)
    assert np.abs(x3 - brute(g)).max() <= 1e-3
    x4 = oftrl_step(s, np.zeros(2), r, S2)
    assert np.allclose(x3, x4)


def test_rvu_zero_utilities():
    r = build_regularizer(S2)
    s = init_oftrl(r, S2, audit=True)
    for _ in range(4):
        oftrl_step(s, np.zeros(2), r, S2)
    ctx = norm_context(S2)
    t = rvu_terms(s.history, np.array([1.0, 0.0]), r, ctx, s.eta)
    assert t["regret"] == 0.0
    assert t["slack"] >= 0


def test_rvu_history_required():
    with pytest.raises(ValueError):
        rvu_audit([], np.zeros(2), build_regularizer(S2), norm_context(S2))


def test_rvu_alternating_ball():
    r = build_regularizer(BALL)
    ctx = norm_context(BALL)
    s = init_oftrl(r, BALL, audit=True)
    g = np.array([0.6, 0.8])
    for t in range(60):
        oftrl_step(s, g if t % 2 == 0 else -g, r, BALL)
    for comp in (s.history[0][0], np.array([1.0, 0.0]), geo.lmo(BALL, s.cum_utility)):
        assert rvu_audit(s.history, comp, r, ctx) >= -audit_tol(60, s.max_tol)


@pytest.mark.parametrize("cset", [geo.simplex(3), geo.box(-np.ones(3), np.ones(3)), geo.ball(np.zeros(3), 1)],
                         ids=["simplex", "box", "ball"])
def test_rvu_comparator_first_iterate(cset):
    r = build_regularizer(cset)
    ctx = norm_context(cset)
    rng = np.random.default_rng(8)
    s = init_oftrl(r, cset, audit=True)
    for _ in range(50):
        u = rng.standard_normal(3)
        oftrl_step(s, u / dual_norm(ctx, u), r, cset)
    assert rvu_audit(s.history, s.history[0][0], r, ctx) >= -audit_tol(50, s.max_tol)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=3, max_size=3), st.floats(0.01, 5))
def test_solver_objective_not_below_feasible_points(g, eta):
    cset = geo.vpolytope([[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, -1, 0], [0, 0, -1]])
    r = build_regularizer(cset)
    g = np.asarray(g)
    x = solve_reg_argmax(g, eta, r, cset)

    def f(p):
        return g @ p - 0.5 * p @ r.H @ p / eta

    others = geo.sample_points(cset, np.random.default_rng(0), 50)
    assert all(f(x) >= f(p) - 1e-9 * (1 + np.abs(g).max()) for p in others)
