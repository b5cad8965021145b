import numpy as np
import pytest

from saddlebandit import geometry as geo
from saddlebandit import metrics as mx
from saddlebandit.dynamics import Referee, RunConfig, run
from saddlebandit.errors import ProtocolError
from saddlebandit.game import make_game
from saddlebandit.player import make_player

MP = np.array([[1.0, -1.0], [-1.0, 1.0]])
S2 = geo.simplex(2)


def test_single_phase_matching_pennies_faithful():
    trace = run(RunConfig(S2, S2, MP, max_phases=1, seed=0))
    assert trace.meta["rounds"] == 5
    rec = trace.phases[0]
    assert rec["B_t"] == 5 and rec["lambda_t"] == 1.0
    assert rec["fallback_x"] == "small_batch" and rec["fallback_y"] == "small_batch"
    assert rec["gap_avg"] == pytest.approx(0.0, abs=1e-12)


def test_fallback_keeps_uniform_iterate():
    row = make_player(S2, 0.1, seed=0, label=0)
    col = make_player(S2, 0.1, seed=0, label=1)
    ref = Referee(make_game(S2, S2, MP))
    for _ in range(5):
        ref.play_round(row, col)
    assert row.t == 2
    assert np.array_equal(row.last_utility, np.zeros(2))
    assert np.allclose(row.tilde_history[-1], [0.5, 0.5])


def test_zero_matrix_has_zero_gap():
    trace = run(RunConfig(S2, geo.box([-1, -1, -1], [1, 1, 1]), np.zeros((2, 3)), max_phases=3,
                          fallback_c=1e-3))
    for rec in trace.phases:
        assert rec["gap_avg"] == 0.0 and rec["gap_last"] == 0.0


def test_deterministic_given_seed():
    cfg = dict(setX=S2, setY=geo.simplex(3), A=[[0.2, -0.5, 1.0], [0.7, 0.1, -0.4]], max_phases=5,
               fallback_c=1e-3)
    a = run(RunConfig(seed=4, **cfg))
    b = run(RunConfig(seed=4, **cfg))
    c = run(RunConfig(seed=5, **cfg))
    strip = lambda t: mx.csv_text(mx.PHASE_COLUMNS, t.phases)
    assert strip(a) == strip(b)
    assert strip(a) != strip(c)


def test_zero_sum_bookkeeping_and_feasibility():
    X, Y = geo.box([-1, 0], [1, 1]), geo.ball([0, 0, 0], 1.0)
    game = make_game(X, Y, np.random.default_rng(0).uniform(-1, 1, (2, 3)))
    row = make_player(X, 0.1, seed=1, label=0, fallback_c=1e-3)
    col = make_player(Y, 0.1, seed=1, label=1, fallback_c=1e-3)
    ref = Referee(game)
    got_row, got_col = [], []
    orig_r, orig_c = row.observe, col.observe
    row.observe = lambda r: (got_row.append(r), orig_r(r))[1]
    col.observe = lambda r: (got_col.append(r), orig_c(r))[1]
    for _ in range(200):
        r = ref.play_round(row, col)
        x, y = ref.last_pair
        assert geo.membership(X, x, 1e-8) and geo.membership(Y, y, 1e-8)
        assert abs(r) <= 1.0
        assert r == pytest.approx(x @ game.A_scaled @ y, abs=1e-15)
    assert all(a == -b for a, b in zip(got_row, got_col))


def test_lockstep_violation_detected(monkeypatch):
    import saddlebandit.dynamics as dyn
    real = dyn.make_player

    def skewed(cset, delta, eta, seed, label, *a, **kw):
        return real(cset, delta if label == 0 else 0.05, eta, seed, label, *a, **kw)

    monkeypatch.setattr(dyn, "make_player", skewed)
    with pytest.raises(ProtocolError):
        run(RunConfig(S2, S2, MP, max_phases=2))


def test_phase_log_fields_and_uincrement():
    trace = run(RunConfig(S2, geo.box(-np.ones(3), np.ones(3)), [[0.3, -1, 0.5], [-0.2, 0.4, 0.9]],
                          max_phases=6, fallback_c=1e-3, seed=2))
    for rec in trace.phases:
        assert set(rec) == set(mx.PHASE_COLUMNS)
        assert rec["uinc_lhs_x"] <= rec["uinc_rhs_x"] + 1e-8
        assert rec["uinc_lhs_y"] <= rec["uinc_rhs_y"] + 1e-8
        assert rec["rvu_slack_x"] >= -rec["rvu_tol_x"]
        assert rec["rvu_slack_y"] >= -rec["rvu_tol_y"]
        if rec["max_resid_x"] is not None:
            assert rec["max_resid_x"] <= 4 + 1e-12
    assert trace.meta["rounds"] == sum(r["B_t"] for r in trace.phases)


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(S2, S2, MP, delta=0.7)
    with pytest.raises(ValueError):
        RunConfig(S2, S2, MP, max_phases=0)
