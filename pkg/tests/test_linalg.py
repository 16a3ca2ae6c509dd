"""Dense kernels against independent references: numpy for factorizations,
scipy.optimize.linprog for the simplex."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from mpqp.linalg import (chebyshev_center, chol_solve, cholesky, rank_of,
                         solve_lp)


def _spd(rng, n):
    M = rng.standard_normal((n, n))
    return M @ M.T + n * np.eye(n)


@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
@settings(max_examples=40, deadline=None)
def test_cholesky_matches_numpy(seed, n):
    rng = np.random.default_rng(seed)
    P = _spd(rng, n)
    L = cholesky(P).L
    assert np.allclose(L, np.linalg.cholesky(P), atol=1e-10)


@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
@settings(max_examples=40, deadline=None)
def test_chol_solve_matches_numpy(seed, n):
    rng = np.random.default_rng(seed)
    P = _spd(rng, n)
    rhs = rng.standard_normal((n, 3))
    assert np.allclose(chol_solve(cholesky(P), rhs), np.linalg.solve(P, rhs),
                       atol=1e-8)


def test_cholesky_flags_indefinite():
    fac = cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert not fac.ok and fac.pivot_min < 0


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_rank_matches_numpy(seed):
    rng = np.random.default_rng(seed)
    r = rng.integers(1, 4)
    M = rng.standard_normal((5, r)) @ rng.standard_normal((r, 4))
    assert rank_of(M) == np.linalg.matrix_rank(M)


def _random_lp(seed):
    # box plus random cuts: always feasible around the origin
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    m = int(rng.integers(n + 1, 2 * n + 4))
    G = np.vstack([np.eye(n), -np.eye(n), rng.standard_normal((m, n))])
    h = np.concatenate([np.full(2 * n, 5.0), rng.uniform(0.5, 3.0, m)])
    c = rng.standard_normal(n)
    return c, G, h


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_lp_optimal_value_matches_scipy(seed):
    c, G, h = _random_lp(seed)
    ours = solve_lp(c, G, h)
    ref = linprog(c, A_ub=G, b_ub=h, bounds=(None, None), method="highs")
    assert ours.status == "optimal" and ref.status == 0
    assert ours.x @ c == pytest.approx(ref.fun, abs=1e-7)
    assert np.all(G @ ours.x <= h + 1e-8)


def test_lp_detects_infeasible():
    # x <= -1 and x >= 0 cannot hold together
    G = np.array([[1.0], [-1.0]])
    h = np.array([-1.0, 0.0])
    assert solve_lp(np.array([1.0]), G, h).status == "infeasible"


def test_lp_detects_unbounded():
    res = solve_lp(np.array([-1.0, 0.0]),
                   np.array([[-1.0, 0.0], [0.0, -1.0], [0.0, 1.0]]),
                   np.array([0.0, 0.0, 1.0]))
    assert res.status == "unbounded"


def test_lp_with_equalities():
    # min x + y on x + y = 1, 0 <= x, y <= 1  ->  value 1
    c = np.array([1.0, 1.0])
    G = np.vstack([np.eye(2), -np.eye(2)])
    h = np.array([1.0, 1.0, 0.0, 0.0])
    E = np.array([[1.0, 1.0]])
    f = np.array([1.0])
    res = solve_lp(c, G, h, E, f)
    assert res.status == "optimal"
    assert res.x @ c == pytest.approx(1.0, abs=1e-9)
    assert res.x[0] + res.x[1] == pytest.approx(1.0, abs=1e-9)


def test_chebyshev_center_of_box():
    # [0,2] x [0,4]: radius 1, center (1, y) for any y in [1,3]
    G = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    h = np.array([2.0, 0.0, 4.0, 0.0])
    center, radius = chebyshev_center(G, h)
    assert radius == pytest.approx(1.0, abs=1e-8)
    assert center[0] == pytest.approx(1.0, abs=1e-8)
    assert 1.0 - 1e-8 <= center[1] <= 3.0 + 1e-8


def test_chebyshev_center_empty():
    G = np.array([[1.0], [-1.0]])
    h = np.array([-1.0, 0.0])
    assert chebyshev_center(G, h) is None


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_chebyshev_ball_fits(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    G = np.vstack([np.eye(n), -np.eye(n), rng.standard_normal((3, n))])
    h = np.concatenate([np.full(2 * n, 2.0), rng.uniform(1.0, 4.0, 3)])
    center, radius = chebyshev_center(G, h)
    norms = np.linalg.norm(G, axis=1)
    assert radius >= -1e-12
    assert np.all(G @ center + radius * norms <= h + 1e-7)
