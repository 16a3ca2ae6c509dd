"""Hand-canonicalized benchmark problems.

Each builder returns (qp, maps) in the canonical form
min 0.5 x'Px + q(theta)'x  s.t.  Ax <= b(theta), Ex = f(theta), and is fully
seeded: the same seed gives bit-identical problem data. Least-squares
objectives are expanded directly (P = 2 M'M) instead of introducing the
residual as an auxiliary variable, so variable counts here are smaller than
a generic canonicalizer would produce; the region structure over Theta is
unaffected.
"""

from __future__ import annotations

import numpy as np

from .model import ParametricQP, UserMaps, make_qp, make_theta_set


def _dual_names(m: int) -> tuple[str, ...]:
    return tuple(f"d{i}" for i in range(m))


def _stacked_R(n: int, m: int, me: int, rows: np.ndarray | None = None):
    """R picking variable coordinates out of z = (x, lam, nu)."""
    if rows is None:
        rows = np.eye(n)
    R = np.zeros((rows.shape[0], n + m + me))
    R[:, :n] = rows
    return R


def clamp_problem():
    """Scalar saturation: min 0.5 x^2 - theta x s.t. 0 <= x <= 1,
    theta in [-5, 5]. Three regions; the smallest nontrivial partition."""
    theta = make_theta_set(np.array([-5.0]), np.array([5.0]))
    qp = make_qp(P=np.array([[1.0]]),
                 A=np.array([[1.0], [-1.0]]), u=np.zeros(1),
                 U=np.array([[-1.0]]),
                 v=np.array([1.0, 0.0]), V=np.zeros((2, 1)),
                 theta_set=theta)
    maps = UserMaps(np.eye(1), np.zeros(1), _stacked_R(1, 2, 0), np.zeros(1),
                    ("theta",), ("x",), _dual_names(2))
    return qp, maps


def hello_world_problem(seed: int = 0, d: int = 2, p: int = 3):
    """Nonnegative least squares with offset:
    min ||X beta + v 1 - y||^2 s.t. beta >= 0, y in [0, 1]^p.

    Canonical x = (beta, v); canonical theta is y reversed (a stand-in for
    the reordering a real canonicalizer performs), so the user map C is a
    permutation rather than the identity. Both inequality rows carry the
    dual label d0: one vector constraint, one dual array.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((p, d))
    M = np.hstack([X, np.ones((p, 1))])           # x = (beta, v)
    n = d + 1
    C = np.eye(p)[::-1].copy()                    # theta = reversed y
    theta = make_theta_set(np.zeros(p), np.ones(p))
    A = np.hstack([-np.eye(d), np.zeros((d, 1))])
    qp = make_qp(P=2.0 * M.T @ M, A=A, u=np.zeros(n),
                 U=-2.0 * M.T @ C,                 # q = -2 M'y, y = C^-1 theta = C theta
                 v=np.zeros(d), V=np.zeros((d, p)), theta_set=theta)
    maps = UserMaps(C, np.zeros(p), _stacked_R(n, d, 0), np.zeros(n),
                    ("y",) * p, ("beta",) * d + ("v",),
                    ("d0",) * d)
    return qp, maps


def monotone_problem(seed: int = 0, d: int = 5, q: int = 10):
    """Monotone regression: min ||A x - b||^2 s.t. x_1 <= ... <= x_d,
    b in [-1, 1]^q. A is seeded N(0,1); the parameter is b itself."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((q, d))
    m = d - 1
    A_ineq = np.zeros((m, d))
    for i in range(m):
        A_ineq[i, i] = 1.0
        A_ineq[i, i + 1] = -1.0
    theta = make_theta_set(-np.ones(q), np.ones(q))
    qp = make_qp(P=2.0 * A.T @ A, A=A_ineq, u=np.zeros(d),
                 U=-2.0 * A.T, v=np.zeros(m), V=np.zeros((m, q)),
                 theta_set=theta)
    maps = UserMaps(np.eye(q), np.zeros(q), _stacked_R(d, m, 0), np.zeros(d),
                    ("b",) * q, ("x",) * d, _dual_names(m))
    return qp, maps


# power-management constants (charge/discharge limits, period, capacity,
# charge target, objective weights)
POWER_C = 1.0
POWER_D = 1.0
POWER_H = 0.05
POWER_Q = 1.0
POWER_QTAR = 0.5
POWER_ALPHA = 0.1
POWER_BETA = 0.1


def power_problem():
    """Single-period power dispatch. Variables x = (s, b, g, q_next):
    PV power, battery power, grid power, next state of charge.
    Parameters theta = (L, S, P, q): load, available PV, grid price,
    current charge. The quadratic part is only PSD (s and g enter the cost
    linearly), so Tikhonov regularization is applied.

        min  P g h + alpha (q_next - q_tar)^2 + beta b^2
        s.t. s + b + g = L         (balance)
             q_next + h b = q      (battery update)
             0 <= s <= S, -C <= b <= D, g >= 0, 0 <= q_next <= Q
    """
    n = 4
    P = np.diag([0.0, 2.0 * POWER_BETA, 0.0, 2.0 * POWER_ALPHA])
    u = np.array([0.0, 0.0, 0.0, -2.0 * POWER_ALPHA * POWER_QTAR])
    U = np.zeros((n, 4))
    U[2, 2] = POWER_H                       # price enters the cost on g
    A = np.array([
        [-1.0, 0.0, 0.0, 0.0],              # -s <= 0
        [1.0, 0.0, 0.0, 0.0],               # s <= S
        [0.0, -1.0, 0.0, 0.0],              # -b <= C
        [0.0, 1.0, 0.0, 0.0],               # b <= D
        [0.0, 0.0, -1.0, 0.0],              # -g <= 0
        [0.0, 0.0, 0.0, -1.0],              # -q_next <= 0
        [0.0, 0.0, 0.0, 1.0],               # q_next <= Q
    ])
    v = np.array([0.0, 0.0, POWER_C, POWER_D, 0.0, 0.0, POWER_Q])
    V = np.zeros((7, 4))
    V[1, 1] = 1.0
    E = np.array([
        [1.0, 1.0, 1.0, 0.0],               # s + b + g = L
        [0.0, POWER_H, 0.0, 1.0],           # q_next + h b = q
    ])
    w = np.zeros(2)
    W = np.zeros((2, 4))
    W[0, 0] = 1.0
    W[1, 3] = 1.0
    theta = make_theta_set(np.array([0.0, 0.0, 1.0, 0.0]),
                           np.array([1.0, 0.5, 2.0, POWER_Q]))
    qp = make_qp(P=P, A=A, u=u, U=U, v=v, V=V, E=E, w=w, W=W,
                 theta_set=theta, regularize=True)
    maps = UserMaps(np.eye(4), np.zeros(4), _stacked_R(n, 7, 2), np.zeros(n),
                    ("L", "S", "P", "q"), ("s", "b", "g", "q_next"),
                    _dual_names(7))
    return qp, maps


def dare_fixed_point(A, B, Q, R, tol: float = 1e-12, max_iter: int = 500_000):
    """Discrete algebraic Riccati equation by value iteration:
    P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA until the update stalls."""
    P = Q.copy()
    for _ in range(max_iter):
        BtP = B.T @ P
        P_next = Q + A.T @ P @ A - A.T @ P @ B @ np.linalg.solve(R + BtP @ B, BtP @ A)
        if np.max(np.abs(P_next - P)) <= tol:
            return P_next
        P = P_next
    return P


def dare_residual(P, A, B, Q, R) -> float:
    BtP = B.T @ P
    rhs = Q + A.T @ P @ A - A.T @ P @ B @ np.linalg.solve(R + BtP @ B, BtP @ A)
    return float(np.max(np.abs(P - rhs)))


def mpc_problem(seed: int = 0, n_z: int = 6, n_u: int = 1, horizon: int = 5):
    """Input-constrained MPC for z+ = Az + Bu with |u| <= 1 and theta = z0.

    A has seeded N(0,1) diagonal and N(0,0.01) off-diagonal entries, scaled
    to spectral radius 1; B is N(0,0.001). Stage costs z'z + 0.1 u'u; the
    terminal weight solves the infinite-horizon Riccati equation. States are
    kept as variables and tied down with equality rows (exercises the
    equality path); x = (z_0..z_H, u_0..u_{H-1}).
    """
    rng = np.random.default_rng(seed)
    A_raw = 0.1 * rng.standard_normal((n_z, n_z))
    np.fill_diagonal(A_raw, rng.standard_normal(n_z))
    A_dyn = A_raw / np.max(np.abs(np.linalg.eigvals(A_raw)))
    B_dyn = np.sqrt(0.001) * rng.standard_normal((n_z, n_u))
    Q = np.eye(n_z)
    R = 0.1 * np.eye(n_u)
    P_term = dare_fixed_point(A_dyn, B_dyn, Q, R)

    n = n_z * (horizon + 1) + n_u * horizon
    me = n_z * (horizon + 1 - 1) + n_z      # z0 pin + horizon dynamics rows
    m = 2 * n_u * horizon

    def z_cols(t):
        return slice(n_z * t, n_z * (t + 1))

    def u_cols(t):
        return slice(n_z * (horizon + 1) + n_u * t,
                     n_z * (horizon + 1) + n_u * (t + 1))

    P_qp = np.zeros((n, n))
    for t in range(horizon):
        P_qp[z_cols(t), z_cols(t)] = 2.0 * Q
        P_qp[u_cols(t), u_cols(t)] = 2.0 * R
    P_qp[z_cols(horizon), z_cols(horizon)] = 2.0 * P_term

    E = np.zeros((me, n))
    W = np.zeros((me, n_z))
    E[:n_z, z_cols(0)] = np.eye(n_z)
    W[:n_z, :] = np.eye(n_z)                # z_0 = theta
    for t in range(horizon):
        rows = slice(n_z * (t + 1), n_z * (t + 2))
        E[rows, z_cols(t)] = -A_dyn
        E[rows, u_cols(t)] = -B_dyn
        E[rows, z_cols(t + 1)] = np.eye(n_z)
    w = np.zeros(me)

    A_ineq = np.zeros((m, n))
    for t in range(horizon):
        for k in range(n_u):
            A_ineq[2 * (n_u * t + k), u_cols(t)][k] = 1.0      # u <= 1
            A_ineq[2 * (n_u * t + k) + 1, u_cols(t)][k] = -1.0  # -u <= 1
    v = np.ones(m)

    theta = make_theta_set(-np.ones(n_z), np.ones(n_z))
    qp = make_qp(P=P_qp, A=A_ineq, u=np.zeros(n), U=np.zeros((n, n_z)),
                 v=v, V=np.zeros((m, n_z)), E=E, w=w, W=W, theta_set=theta)
    maps = UserMaps(np.eye(n_z), np.zeros(n_z), _stacked_R(n, m, me), np.zeros(n),
                    ("z_init",) * n_z,
                    ("z",) * (n_z * (horizon + 1)) + ("u",) * (n_u * horizon),
                    _dual_names(m))
    return qp, maps


def portfolio_problem(seed: int = 0, n_assets: int = 7, gamma: float = 2.0):
    """Markowitz weights: max mu'w - gamma w'Sigma w s.t. 1'w = 1, w >= 0,
    theta = mu in [-1, 1]^N.

    Sigma is seeded: annualized-scale variances uniform in [0.02, 0.10]
    around a random correlation matrix shrunk halfway to the identity.
    The all-weights-zero active set conflicts with 1'w = 1, so at most
    2^N - 1 active sets can appear.
    """
    rng = np.random.default_rng(seed)
    variances = rng.uniform(0.02, 0.10, n_assets)
    G = rng.standard_normal((n_assets, n_assets))
    S0 = G @ G.T
    dinv = 1.0 / np.sqrt(np.diag(S0))
    corr = 0.5 * (dinv[:, None] * S0 * dinv[None, :]) + 0.5 * np.eye(n_assets)
    sd = np.sqrt(variances)
    Sigma = sd[:, None] * corr * sd[None, :]

    n = n_assets
    theta = make_theta_set(-np.ones(n), np.ones(n))
    qp = make_qp(P=2.0 * gamma * Sigma, A=-np.eye(n), u=np.zeros(n),
                 U=-np.eye(n), v=np.zeros(n), V=np.zeros((n, n)),
                 E=np.ones((1, n)), w=np.ones(1), W=np.zeros((1, n)),
                 theta_set=theta)
    maps = UserMaps(np.eye(n), np.zeros(n), _stacked_R(n, n, 1), np.zeros(n),
                    ("mu",) * n, ("w",) * n, _dual_names(n))
    return qp, maps


def random_qp(seed: int, n: int = 3, m: int = 5, p: int = 2):
    """Small random strictly convex QP with a box parameter set; x = 0 is
    feasible near theta = 0, so the partition is nonempty. Used for
    cross-strategy and property tests."""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    P = G @ G.T + n * np.eye(n)
    A = rng.standard_normal((m, n))
    U = rng.standard_normal((n, p))
    u = rng.standard_normal(n)
    v = rng.uniform(0.5, 1.5, m)
    V = 0.3 * rng.standard_normal((m, p))
    theta = make_theta_set(-np.ones(p), np.ones(p))
    qp = make_qp(P=P, A=A, u=u, U=U, v=v, V=V, theta_set=theta)
    maps = UserMaps(np.eye(p), np.zeros(p), _stacked_R(n, m, 0), np.zeros(n),
                    ("theta",) * p, ("x",) * n, _dual_names(m))
    return qp, maps


def sample_thetas(qp: ParametricQP, count: int, seed: int = 0) -> np.ndarray:
    """Uniform samples over the parameter box."""
    rng = np.random.default_rng(seed)
    return rng.uniform(qp.theta_set.box_lo, qp.theta_set.box_hi,
                       (count, qp.p))


BENCHMARKS = {
    "clamp": lambda seed=0: clamp_problem(),
    "hello": hello_world_problem,
    "monotone": monotone_problem,
    "power": lambda seed=0: power_problem(),
    "mpc": mpc_problem,
    "portfolio": portfolio_problem,
}
