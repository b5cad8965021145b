import math

import numpy as np
import pytest

from saddlebandit import geometry as geo
from saddlebandit.errors import InvalidSetError
from saddlebandit.norms import norm_context, primal_norm
from saddlebandit.rounding import (argmin_phi, bregman, build_regularizer, certify_sandwich, grad_phi, mvee,
                                   phi)

import oracles

CROSS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=float)
CORNERS = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)


def test_mvee_cross_polytope():
    assert np.allclose(mvee(CROSS, 1e-7), np.eye(2), atol=1e-5)


def test_mvee_box_corners():
    assert np.allclose(mvee(CORNERS, 1e-7), 0.5 * np.eye(2), atol=1e-5)


def test_mvee_circle_samples():
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    assert np.allclose(mvee(np.c_[np.cos(th), np.sin(th)], 1e-7), np.eye(2), atol=1e-3)


@pytest.mark.parametrize("seed", range(5))
def test_mvee_matches_conic_oracle(seed):
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((12, 3))
    P = np.vstack([P, -P])
    H = mvee(P, 1e-9)
    ref = oracles.mvee_cvxpy(P)
    assert np.allclose(H, ref, rtol=1e-4, atol=1e-5)
    # first-order optimality
    assert np.einsum("ij,jk,ik->i", P, H, P).max() <= 1 + 1e-9


def test_mvee_rejects_rank_deficient():
    with pytest.raises(InvalidSetError):
        mvee([[1, 1], [-1, -1], [2, 2], [-2, -2]])


def test_closed_forms():
    r = build_regularizer(geo.simplex(2))
    assert np.array_equal(r.H, 2 * np.eye(2))
    assert r.alpha_eff == pytest.approx(math.sqrt(2))
    r = build_regularizer(geo.ball([0, 0], 2))
    assert np.allclose(r.H, np.eye(2) / 4)
    assert r.alpha_eff == 1.0
    r = build_regularizer(geo.box([-1, -1, -1], [1, 1, 1]))
    assert r.alpha_eff <= math.sqrt(12)


def test_general_path_box_vertices():
    r = build_regularizer(geo.vpolytope(CORNERS))
    assert r.source == "mvee"
    assert np.allclose(r.H, np.eye(2), atol=1e-6)
    assert r.alpha_eff == pytest.approx(math.sqrt(2), rel=1e-6)


def test_phi_grad_bregman_examples():
    r = build_regularizer(geo.simplex(2))
    assert bregman(r, [1, 0], [0, 1]) == pytest.approx(2.0)
    assert bregman(r, [0.3, 0.7], [0.3, 0.7]) == 0.0
    rb = build_regularizer(geo.ball([0, 0], 1))
    assert phi(rb, [0.6, 0.8]) == pytest.approx(0.5)
    assert np.allclose(grad_phi(r, [1, 2]), [2, 4])


def test_argmin_phi_examples():
    assert np.allclose(argmin_phi(build_regularizer(geo.ball([0, 0], 1)), geo.ball([0, 0], 1)), 0)
    s = geo.simplex(2)
    assert np.allclose(argmin_phi(build_regularizer(s), s), [0.5, 0.5])
    b = geo.box([-1, -1], [1, 1])
    assert np.allclose(argmin_phi(build_regularizer(b), b), [0, 0])


SETS = [geo.simplex(3), geo.simplex(5), geo.box(-np.ones(3), np.ones(3)), geo.box([0, -1, 2], [1, 3, 4]),
        geo.ball(np.zeros(3), 2.0), geo.ball([0.3, -0.2, 0.5], 1.0),
        geo.vpolytope(np.random.default_rng(0).standard_normal((15, 4)))]
IDS = ["simplex3", "simplex5", "box", "offbox", "ball", "offball", "vpoly"]


@pytest.mark.parametrize("cset", SETS, ids=IDS)
def test_sandwich_certified(cset):
    r = build_regularizer(cset)
    rep = certify_sandwich(r, cset, n_directions=1000, seed=1)
    assert rep["ok"], rep
    assert r.alpha_eff <= math.sqrt(cset.dim * (cset.dim + 1))
    assert np.allclose(r.chol @ r.chol.T, r.H)


@pytest.mark.parametrize("cset", SETS, ids=IDS)
def test_bregman_diameter_and_strong_convexity(cset):
    r = build_regularizer(cset)
    d = cset.dim
    rng = np.random.default_rng(2)
    U = geo.sample_points(cset, rng, 500)
    W = np.vstack([geo.boundary_points(cset, rng, 500)])
    ctx = norm_context(cset)
    for u, v in zip(U, W):
        D = bregman(r, u, v)
        assert D <= 2 * d * (d + 1) + 1e-9
        if ctx.supports_primal:
            assert D >= 0.5 * primal_norm(ctx, u - v) ** 2 - 1e-9


@pytest.mark.parametrize("cset", [s for s in SETS if norm_context(s).supports_primal],
                         ids=[i for s, i in zip(SETS, IDS) if norm_context(s).supports_primal])
def test_primal_norm_dominated_by_H_norm(cset):
    r = build_regularizer(cset)
    ctx = norm_context(cset)
    rng = np.random.default_rng(3)
    for z in rng.standard_normal((300, cset.dim)):
        assert primal_norm(ctx, z) <= math.sqrt(z @ r.H @ z) + 1e-9
