import ast
import pathlib

import numpy as np
import pytest

import saddlebandit
from saddlebandit import geometry as geo
from saddlebandit.errors import ProtocolError
from saddlebandit.player import make_player

PKG = pathlib.Path(saddlebandit.__file__).parent
PLAYER_SIDE = ("player", "estimator", "oftrl", "rounding", "spanner", "norms", "geometry", "_lp", "errors")
REFEREE_ONLY = {"game", "metrics", "dynamics", "cli", "config", "svg"}


def _imports(module):
    tree = ast.parse((PKG / f"{module}.py").read_text())
    found = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            if node.level and node.module:
                found.add(node.module.split(".")[0])
            elif node.level:
                found.update(a.name for a in node.names)
            elif node.module and node.module.startswith("saddlebandit"):
                found.add(node.module.split(".")[1] if "." in node.module else "")
        elif isinstance(node, ast.Import):
            found.update(a.name.split(".")[1] for a in node.names if a.name.startswith("saddlebandit."))
    return found


@pytest.mark.parametrize("module", PLAYER_SIDE)
def test_player_side_never_imports_referee_modules(module):
    assert not (_imports(module) & REFEREE_ONLY)


def test_player_built_from_own_set_only():
    p = make_player(geo.simplex(3), delta=0.1, eta=1 / 6, seed=0)
    assert p.dim == 3
    names = set(vars(p))
    assert not any("opponent" in n or n in ("A", "game", "m") for n in names)


def test_protocol_violations():
    p = make_player(geo.simplex(2), 0.1, seed=0)
    with pytest.raises(ProtocolError):
        p.observe(0.0)
    p.next_action()
    with pytest.raises(ProtocolError):
        p.next_action()


def test_phase_rollover_after_exactly_B_observations():
    p = make_player(geo.simplex(2), 0.1, seed=0)
    for t in (1, 2, 3):
        B = p.phase.B
        for s in range(B):
            assert p.t == t
            p.next_action()
            ended = p.observe(0.0)
            assert ended == (s == B - 1)
    assert p.t == 4


def test_actions_feasible_and_mixing_identity():
    cset = geo.box([-1, 0], [1, 2])
    p = make_player(cset, 0.1, seed=3, fallback_c=1e-3)
    rng = np.random.default_rng(0)
    for _ in range(3):
        xbar, lam = p.xbar.copy(), p.phase.lam
        for _ in range(p.phase.B):
            tag = p.current_tag
            x = p.next_action()
            assert geo.membership(cset, x, 1e-8)
            expect = xbar if tag < 0 else (1 - lam) * xbar + lam * p.design.points[tag]
            assert np.abs(x - expect).max() <= 1e-12
            p.observe(float(rng.uniform(-1, 1)))


def test_running_average_matches_history():
    p = make_player(geo.simplex(3), 0.1, seed=1, batch_c=0.05, fallback_c=1e-4)
    rng = np.random.default_rng(2)
    for _ in range(40):
        for _ in range(p.phase.B):
            x = p.next_action()
            p.observe(float(np.clip(x @ np.array([0.3, -0.5, 0.1]) + rng.normal(0, 0.1), -1, 1)))
        assert np.abs(p.xbar - np.mean(p.tilde_history, axis=0)).max() <= 1e-10


def test_replay_reproduces_iterates():
    """A lone player fed a recorded opponent stream reproduces its iterates."""
    from saddlebandit.dynamics import RunConfig, run
    from saddlebandit.game import make_game

    A = np.array([[0.5, -1.0, 0.2], [-0.3, 0.8, -0.6]])
    X, Y = geo.simplex(2), geo.simplex(3)
    cfg = RunConfig(X, Y, A, max_phases=6, fallback_c=1e-3, seed=11, audit_enabled=False)
    game = make_game(X, Y, A)
    row = make_player(X, 0.1, seed=11, label=0, fallback_c=1e-3)
    col = make_player(Y, 0.1, seed=11, label=1, fallback_c=1e-3)
    ys = []
    for _ in range(6):
        for _ in range(row.phase.B):
            x, y = row.next_action(), col.next_action()
            ys.append(y)
            r = float(x @ game.A_scaled @ y)
            row.observe(r)
            col.observe(-r)
    lone = make_player(X, 0.1, seed=11, label=0, fallback_c=1e-3)
    for y in ys:
        x = lone.next_action()
        lone.observe(float(x @ game.A_scaled @ y))
    assert all(np.array_equal(a, b) for a, b in zip(lone.tilde_history, row.tilde_history))
    assert run(cfg).phases[-1]["gap_avg"] >= 0
