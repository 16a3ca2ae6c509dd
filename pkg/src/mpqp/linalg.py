"""Dense linear-algebra kernels: Cholesky, numerical rank, a small two-phase
simplex LP solver with Bland's anti-cycling rule, and Chebyshev centers.

All routines are pure functions on caller-owned numpy arrays (inputs are never
mutated), so concurrent use from multiple threads is safe. Sizes here are
small and dense by design; nothing is sparse-aware.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

# Pivot / feasibility tolerances shared across the offline pipeline.
CHOL_PIVOT_RTOL = 1e-12     # Cholesky pivot cutoff, relative to max diagonal
CHOL_RECON_RTOL = 1e-10     # ||L L^T - P||_inf <= tol * (1 + ||P||_inf)
RANK_RTOL = 1e-10           # elimination pivot cutoff, relative to largest pivot
LP_FEAS_TOL = 1e-8          # absolute feasibility tolerance for LP results
LP_PIVOT_TOL = 1e-9         # entries below this are not usable as simplex pivots
INTERIOR_TOL = 1e-9         # Chebyshev radius certifying a full-dimensional set
RADIUS_CAP = 1e6            # reported radius for unbounded inscribed balls


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular factor with the smallest pivot seen during elimination."""

    L: np.ndarray
    ok: bool
    pivot_min: float


def cholesky(P: np.ndarray) -> CholFactor:
    """Cholesky factor of a symmetric matrix, failing softly on indefinite input.

    ok is True iff every pivot (the diagonal value before its square root)
    stays above CHOL_PIVOT_RTOL times the largest diagonal entry of P.
    On failure the returned L is partial and must not be used for solves.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    L = np.zeros((n, n))
    if n == 0:
        return CholFactor(L, True, np.inf)
    thresh = CHOL_PIVOT_RTOL * float(np.max(np.diag(P)))
    pivot_min = np.inf
    for k in range(n):
        d = float(P[k, k] - L[k, :k] @ L[k, :k])
        pivot_min = min(pivot_min, d)
        if not d > thresh:  # also catches NaN
            return CholFactor(L, False, pivot_min)
        L[k, k] = np.sqrt(d)
        if k + 1 < n:
            L[k + 1:, k] = (P[k + 1:, k] - L[k + 1:, :k] @ L[k, :k]) / L[k, k]
    return CholFactor(L, True, pivot_min)


def chol_solve(factor: CholFactor, rhs: np.ndarray) -> np.ndarray:
    """Solve P z = rhs given P = L L^T. rhs may be a vector or a matrix."""
    y = solve_triangular(factor.L, rhs, lower=True)
    return solve_triangular(factor.L.T, y, lower=False)


def rank_of(M: np.ndarray, tol: float = RANK_RTOL) -> int:
    """Numerical rank via eliminination with full pivoting.

    Pivots below tol times the largest (first) pivot count as zero.
    """
    A = np.array(M, dtype=float, copy=True)
    if A.ndim != 2:
        A = np.atleast_2d(A)
    m, n = A.shape
    if A.size == 0:
        return 0
    r = 0
    largest = 0.0
    while r < m and r < n:
        sub = np.abs(A[r:, r:])
        i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
        p = float(sub[i, j])
        if r == 0:
            largest = p
        if p == 0.0 or p <= tol * largest:
            break
        if i:
            A[[r, r + i]] = A[[r + i, r]]
        if j:
            A[:, [r, r + j]] = A[:, [r + j, r]]
        A[r + 1:, r:] -= np.outer(A[r + 1:, r] / A[r, r], A[r, r:])
        r += 1
    return r


@dataclass(frozen=True)
class LpResult:
    """Outcome of solve_lp. x is a vertex when status == "optimal", else None.

    warning flags numerical trouble (stalled pivoting, singular-looking basis);
    such runs are reported as infeasible rather than trusted.
    """

    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float
    warning: bool = False


def _pivot(T: np.ndarray, z: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    cols = T[:, col].copy()
    cols[row] = 0.0
    T -= np.outer(cols, T[row])
    if z[col] != 0.0:
        z -= z[col] * T[row]
    basis[row] = col


def _reduced_costs(cost: np.ndarray, T: np.ndarray, basis: np.ndarray) -> np.ndarray:
    z = cost.astype(float).copy()
    for i, b in enumerate(basis):
        if z[b] != 0.0:
            z -= z[b] * T[i]
    return z


def _simplex(T: np.ndarray, basis: np.ndarray, cost: np.ndarray,
             max_pivots: int) -> tuple[str, np.ndarray]:
    """Run Bland-rule simplex on an already-feasible tableau (rhs in last column).

    Entering variable: lowest index with reduced cost < -LP_PIVOT_TOL.
    Leaving row: minimum ratio, ties broken by lowest basic variable index.
    Bland's rule guarantees termination; max_pivots is a hard safety stop.
    """
    m = T.shape[0]
    z = _reduced_costs(cost, T, basis)
    for _ in range(max_pivots):
        enter = -1
        for j in range(T.shape[1] - 1):
            if z[j] < -LP_PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            return "optimal", z
        leave = -1
        best = np.inf
        for i in range(m):
            a = T[i, enter]
            if a > LP_PIVOT_TOL:
                ratio = T[i, -1] / a
                if ratio < best - 1e-12:
                    best = ratio
                    leave = i
                elif abs(ratio - best) <= 1e-12 and leave >= 0 and basis[i] < basis[leave]:
                    leave = i
        if leave < 0:
            return "unbounded", z
        _pivot(T, z, basis, leave, enter)
        if not np.all(np.isfinite(T)):
            return "stalled", z
    return "stalled", z


def solve_lp(c: np.ndarray,
             G: np.ndarray | None = None,
             h: np.ndarray | None = None,
             G_eq: np.ndarray | None = None,
             h_eq: np.ndarray | None = None,
             max_pivots: int = 50000) -> LpResult:
    """Minimize c.x subject to G x <= h and G_eq x = h_eq, x free.

    Dense two-phase simplex. Free variables are split x = xp - xm, slack
    variables complete inequality rows, and phase 1 drives a set of artificial
    variables to zero. A phase-1 optimum above LP_FEAS_TOL means infeasible.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    if G is None:
        G = np.zeros((0, n))
        h = np.zeros(0)
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float).ravel()
    if G_eq is None:
        G_eq = np.zeros((0, n))
        h_eq = np.zeros(0)
    G_eq = np.atleast_2d(np.asarray(G_eq, dtype=float))
    h_eq = np.asarray(h_eq, dtype=float).ravel()
    mi, me = G.shape[0], G_eq.shape[0]
    m = mi + me

    if m == 0:
        # Feasible everywhere; optimal iff the objective is identically zero.
        if np.all(c == 0.0):
            return LpResult("optimal", np.zeros(n), 0.0)
        return LpResult("unbounded", None, -np.inf)

    # Rows scaled so every right-hand side is nonnegative.
    lhs = np.vstack([G, G_eq])
    rhs = np.concatenate([h, h_eq])
    flip = rhs < 0.0
    lhs[flip] *= -1.0
    rhs = np.abs(rhs)

    # Columns: xp (n) | xm (n) | slacks (mi) | artificials (m) | rhs.
    # Inequality rows keep a +-1 slack; every row gets an artificial so the
    # phase-1 start basis is trivially the identity.
    n_cols = 2 * n + mi + m
    T = np.zeros((m, n_cols + 1))
    T[:, :n] = lhs
    T[:, n:2 * n] = -lhs
    for i in range(mi):
        T[i, 2 * n + i] = -1.0 if flip[i] else 1.0
    for i in range(m):
        T[i, 2 * n + mi + i] = 1.0
    T[:, -1] = rhs
    basis = np.array([2 * n + mi + i for i in range(m)], dtype=int)

    cost1 = np.zeros(n_cols + 1)
    cost1[2 * n + mi:n_cols] = 1.0
    status, z = _simplex(T, basis, cost1, max_pivots)
    if status == "stalled":
        return LpResult("infeasible", None, np.inf, warning=True)
    p1_obj = float(sum(T[i, -1] for i in range(m) if basis[i] >= 2 * n + mi))
    if p1_obj > LP_FEAS_TOL:
        return LpResult("infeasible", None, np.inf)

    # Drive leftover (zero-valued) artificials out of the basis; rows that
    # cannot pivot are redundant and dropped.
    keep_rows = []
    for i in range(m):
        if basis[i] >= 2 * n + mi:
            piv = -1
            for j in range(2 * n + mi):
                if abs(T[i, j]) > LP_PIVOT_TOL:
                    piv = j
                    break
            if piv < 0:
                continue
            _pivot(T, z, basis, i, piv)
        keep_rows.append(i)
    if len(keep_rows) < m:
        T = T[keep_rows]
        basis = basis[keep_rows]
    T = np.hstack([T[:, :2 * n + mi], T[:, -1:]])

    cost2 = np.zeros(2 * n + mi + 1)
    cost2[:n] = c
    cost2[n:2 * n] = -c
    status, z = _simplex(T, basis, cost2, max_pivots)
    if status == "stalled":
        return LpResult("infeasible", None, np.inf, warning=True)
    if status == "unbounded":
        return LpResult("unbounded", None, -np.inf)

    x = np.zeros(n)
    for i, b in enumerate(basis):
        if b < n:
            x[b] += T[i, -1]
        elif b < 2 * n:
            x[b - n] -= T[i, -1]

    # Contract: optimal results satisfy every constraint to LP_FEAS_TOL.
    viol = 0.0
    if mi:
        viol = max(viol, float(np.max(G @ x - h, initial=0.0)))
    if me:
        viol = max(viol, float(np.max(np.abs(G_eq @ x - h_eq), initial=0.0)))
    if viol > 10 * LP_FEAS_TOL:
        return LpResult("infeasible", None, np.inf, warning=True)
    return LpResult("optimal", x, float(c @ x))


def chebyshev_center(G: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, float] | None:
    """Center and radius of the largest ball inscribed in {x : G x <= h}.

    Returns None when the set is empty. The radius is capped at RADIUS_CAP so
    unbounded sets report a finite value; a radius of exactly RADIUS_CAP means
    "at least this big". Zero rows of G act as constant constraints: they make
    the set empty when their h entry is negative and are inert otherwise.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float).ravel()
    p = G.shape[1]
    norms = np.linalg.norm(G, axis=1)
    zero_rows = norms <= 0.0
    if np.any(h[zero_rows] < -LP_FEAS_TOL):
        return None
    G_use = G[~zero_rows]
    h_use = h[~zero_rows]
    norms = norms[~zero_rows]

    G_ext = np.zeros((G_use.shape[0] + 1, p + 1))
    G_ext[:-1, :p] = G_use
    G_ext[:-1, p] = norms
    G_ext[-1, p] = 1.0  # r <= RADIUS_CAP keeps the LP bounded
    h_ext = np.concatenate([h_use, [RADIUS_CAP]])
    obj = np.zeros(p + 1)
    obj[p] = -1.0  # maximize r

    res = solve_lp(obj, G_ext, h_ext)
    if res.status != "optimal":
        return None
    center = res.x[:p]
    radius = float(res.x[p])
    if radius < 0.0:
        return None
    return center, radius
