"""Benchmark problem factories: published constants, seeded determinism,
and the Riccati fixed point."""

import numpy as np
import pytest

from mpqp.benchmarks import (dare_fixed_point, dare_residual,
                             hello_world_problem, monotone_problem,
                             mpc_problem, portfolio_problem, power_problem,
                             random_qp, sample_thetas)
from mpqp.model import validate
from mpqp.serialize import problem_hash


@pytest.mark.parametrize("factory,kw", [
    (monotone_problem, {"seed": 0}),
    (power_problem, {}),
    (mpc_problem, {"seed": 0}),
    (portfolio_problem, {"seed": 0}),
    (hello_world_problem, {"seed": 0}),
])
def test_factories_validate(factory, kw):
    qp, maps = factory(**kw)
    assert validate(qp).ok
    assert maps.p_user == maps.C.shape[1]
    assert len(maps.dual_names) == qp.m


@pytest.mark.parametrize("factory,kw", [
    (monotone_problem, {"seed": 7}),
    (mpc_problem, {"seed": 7}),
    (portfolio_problem, {"seed": 7}),
    (hello_world_problem, {"seed": 7}),
])
def test_same_seed_same_problem_bytes(factory, kw):
    h1 = problem_hash(factory(**kw)[0])
    h2 = problem_hash(factory(**kw)[0])
    assert h1 == h2


def test_different_seed_different_problem():
    assert problem_hash(mpc_problem(seed=0)[0]) != \
problem_hash(mpc_problem(seed=1)[0])


def test_monotone_dimensions():
    qp, _ = monotone_problem(seed=0)
    # d = 5 coefficients, q = 10 data points, d - 1 ordering constraints
    assert (qp.n, qp.m, qp.p) == (5, 4, 10)


def test_monotone_chain_rows():
    qp, _ = monotone_problem(seed=0)
    for i in range(qp.m):
        row = np.zeros(qp.n)
        row[i], row[i + 1] = 1.0, -1.0
        assert np.array_equal(qp.A[i], row)


def test_power_dimensions_and_balance_row():
    qp, maps = power_problem()
    assert (qp.n, qp.m, qp.me, qp.p) == (4, 7, 2, 4)
    assert np.array_equal(qp.E[0], [1.0, 1.0, 1.0, 0.0])
    assert maps.param_names == ("L", "S", "P", "q")


def test_mpc_spectral_radius_is_one():
    for seed in range(4):
        qp, _ = mpc_problem(seed=seed)
        n_z = 6
        # recover A from the dynamics rows: E z_t block is -A
        A_dyn = -qp.E[n_z:2 * n_z, :n_z]
        rho = np.max(np.abs(np.linalg.eigvals(A_dyn)))
        assert rho == pytest.approx(1.0, abs=1e-9)


def test_mpc_counts():
    qp, maps = mpc_problem(seed=0, n_z=6, n_u=1, horizon=5)
    assert qp.n == 6 * 6 + 5            # states + inputs
    assert qp.m == 2 * 5                # +-u per stage
    assert qp.me == 6 * 6               # pin + dynamics
    assert maps.var_names.count("z") == 36 and maps.var_names.count("u") == 5


def test_dare_fixed_point_residual():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((4, 4))
        A /= 1.1 * np.max(np.abs(np.linalg.eigvals(A)))
        B = rng.standard_normal((4, 2))
        Q = np.eye(4)
        R = 0.5 * np.eye(2)
        P = dare_fixed_point(A, B, Q, R)
        assert dare_residual(P, A, B, Q, R) <= 1e-8
        assert np.allclose(P, P.T)
        assert np.all(np.linalg.eigvalsh(P) > 0)


def test_mpc_terminal_weight_solves_riccati():
    qp, _ = mpc_problem(seed=0)
    n_z, horizon = 6, 5
    A_dyn = -qp.E[n_z:2 * n_z, :n_z]
    B_dyn = -qp.E[n_z:2 * n_z, 6 * n_z:6 * n_z + 1]
    t = slice(n_z * horizon, n_z * (horizon + 1))
    P_term = qp.P[t, t] / 2.0
    assert dare_residual(P_term, A_dyn, B_dyn, np.eye(n_z),
                         0.1 * np.eye(1)) <= 1e-8


def test_portfolio_structure():
    qp, maps = portfolio_problem(seed=0)
    assert (qp.n, qp.m, qp.me, qp.p) == (7, 7, 1, 7)
    assert np.array_equal(qp.E, np.ones((1, 7)))
    assert np.array_equal(qp.w, [1.0])
    # Sigma is SPD with annualized-scale variances
    Sigma = qp.P / 4.0    # P = 2 gamma Sigma with gamma = 2
    assert np.all(np.linalg.eigvalsh(Sigma) > 0)
    d = np.diag(Sigma)
    assert np.all(d >= 0.02 - 1e-12) and np.all(d <= 0.10 + 1e-12)


def test_sample_thetas_deterministic_and_in_box():
    qp, _ = power_problem()
    a = sample_thetas(qp, 64, seed=3)
    b = sample_thetas(qp, 64, seed=3)
    assert np.array_equal(a, b)
    assert np.all(a >= qp.theta_set.box_lo) and np.all(a <= qp.theta_set.box_hi)


def test_random_qp_is_buildable():
    qp, maps = random_qp(0)
    assert validate(qp).ok
    assert qp.m <= 12


def test_hello_world_example_point():
    # theta_user = (0.6, 0.8, 0.2): coefficients stay nonnegative, duals
    # complementary, and the oracle's objective matches the explicit one
    from mpqp.builder import build_explore
    from mpqp.evaluator import Evaluator, objective_value
    from mpqp.kkt import oracle_solve
    from mpqp.model import map_user_params
    from mpqp.tree import build_tree

    qp, maps = hello_world_problem(seed=0)
    solution = build_explore(qp, maps)
    ev = Evaluator(solution=solution, tree=build_tree(solution))
    theta_u = np.array([0.6, 0.8, 0.2])
    res = ev.eval_user(theta_u)
    assert res.status == "optimal"
    assert np.all(res.x >= -1e-10)
    theta = map_user_params(maps, theta_u)
    ref = oracle_solve(qp, theta)
    slack = qp.A @ ref.x - (qp.v + qp.V @ theta)
    assert np.max(np.abs(res.lam * slack)) <= 1e-8
    assert res.objective == pytest.approx(
        objective_value(qp, theta, ref.x), abs=1e-6)
