import numpy as np
import pytest
from scipy.optimize import linprog

from saddlebandit._lp import INFEASIBLE, OPTIMAL, UNBOUNDED, linprog_eq


@pytest.mark.parametrize("seed", range(30))
def test_matches_scipy_on_random_feasible_lps(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(2, 6), rng.integers(6, 14)
    A = rng.standard_normal((m, n))
    b = A @ rng.random(n)
    c = rng.random(n)
    ours = linprog_eq(c, A, b)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    assert ours.status == OPTIMAL
    assert ours.objective == pytest.approx(ref.fun, rel=1e-9, abs=1e-9)
    assert np.allclose(A @ ours.x, b, atol=1e-9)
    assert ours.x.min() >= -1e-12


def test_infeasible_and_unbounded():
    assert linprog_eq(np.ones(2), np.array([[1.0, 1.0]]), np.array([-1.0])).status == INFEASIBLE
    assert linprog_eq(np.array([-1.0, 0.0]), np.array([[1.0, -1.0]]), np.array([0.0])).status == UNBOUNDED


def test_redundant_rows():
    A = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
    b = np.array([1.0, 2.0, 1.0])
    c = np.array([1.0, 2.0, 0.5])
    res = linprog_eq(c, A, b)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(ref.fun)
