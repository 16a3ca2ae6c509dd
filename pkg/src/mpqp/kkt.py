"""Active-set algebra for the parametric QP: KKT solves, per-active-set affine
laws, critical-region inequalities, optimality checking, and a brute-force
enumeration oracle used as the reference solver.

For an active set S of inequality rows, write Atil = [E; A_S] and
btil = [f; b_S]. The law solves the KKT block system

    [ P      Atil' ] [ x    ]   [ -q    ]
    [ Atil   0     ] [ duals ] = [ btil ]

whose solution is affine in theta. Solves go through a Schur complement on a
cached Cholesky factor of P when P is comfortably positive definite, and
through a factorization of the full block matrix otherwise (tiny Tikhonov
regularizations leave P too ill-conditioned for the Schur route in fp64).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import LicqFailure, OracleError, SizeLimit
from .linalg import CholFactor, cholesky, rank_of, solve_lp
from .model import ParametricQP, instantiate

KKT_TOL = 1e-8          # default optimality tolerance for check_kkt
LICQ_RTOL = 1e-10       # pivot tolerance for the active-set rank test
SCHUR_MIN_RATIO = 1e-8  # min pivot / max diagonal of P required for the Schur route
M_NAIVE = 25            # oracle / naive enumeration refuse more inequality rows


@dataclass(frozen=True)
class ActiveSet:
    """Subset of inequality rows as a fixed-width bit set (bit i = row i active)."""

    m: int
    bits: int

    @classmethod
    def from_indices(cls, m: int, indices) -> "ActiveSet":
        bits = 0
        for i in indices:
            if not 0 <= i < m:
                raise ValueError(f"constraint index {i} out of range")
            bits |= 1 << i
        return cls(m, bits)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.m) if self.bits >> i & 1)

    @property
    def size(self) -> int:
        return self.bits.bit_count()

    def contains(self, i: int) -> bool:
        return bool(self.bits >> i & 1)

    def added(self, i: int) -> "ActiveSet":
        return ActiveSet(self.m, self.bits | 1 << i)

    def removed(self, i: int) -> "ActiveSet":
        return ActiveSet(self.m, self.bits & ~(1 << i))

    def __str__(self) -> str:
        return format(self.bits, f"0{self.m}b") if self.m else ""


def _p_factor(qp: ParametricQP) -> CholFactor:
    fac = qp._chol_cache
    if fac is None:
        fac = cholesky(qp.P)
        qp._chol_cache = fac
    return fac


def _use_schur(qp: ParametricQP, fac: CholFactor) -> bool:
    if not fac.ok:
        return False
    max_diag = float(np.max(np.diag(qp.P))) if qp.n else 1.0
    return fac.pivot_min > SCHUR_MIN_RATIO * max(max_diag, 1e-300)


def _licq_rank_check(S: np.ndarray, na: int) -> None:
    if rank_of(S, LICQ_RTOL) < na:
        raise LicqFailure(f"active rows are rank deficient ({na} rows)")


def kkt_solve_many(qp: ParametricQP, active: ActiveSet,
                   rhs_q: np.ndarray, rhs_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve the KKT system for one or many right-hand sides.

    rhs_q is (n,) or (n, k); rhs_b stacks equality rows above active
    inequality rows. Returns (x, duals) with duals ordered (nu, lambda_S).
    Raises LicqFailure when the active rows are rank deficient (Schur
    complement rank below its row count) or the block system is singular.
    """
    idx = active.indices
    Atil = np.vstack([qp.E, qp.A[list(idx)]]) if idx else qp.E
    na = Atil.shape[0]
    rhs_q = np.asarray(rhs_q, dtype=float)
    rhs_b = np.asarray(rhs_b, dtype=float)
    single = rhs_q.ndim == 1
    Q = rhs_q.reshape(qp.n, -1)
    B = rhs_b.reshape(na, Q.shape[1]) if na else np.zeros((0, Q.shape[1]))

    fac = _p_factor(qp)
    if _use_schur(qp, fac):
        L = fac.L
        t = solve_triangular(L, -Q, lower=True)
        if na == 0:
            X = solve_triangular(L.T, t, lower=False)
            D = np.zeros((0, X.shape[1]))
        else:
            Y = solve_triangular(L, Atil.T, lower=True)  # L Y = Atil'
            S = Y.T @ Y
            try:
                Lc = np.linalg.cholesky(S)
            except np.linalg.LinAlgError:
                _licq_rank_check(S, na)
                raise LicqFailure("Schur complement is numerically singular")
            dS = np.diag(Lc)
            if float(np.min(dS)) ** 2 <= LICQ_RTOL * float(np.max(dS)) ** 2:
                _licq_rank_check(S, na)  # borderline: let the rank test decide
            rhs_s = Y.T @ t - B
            D = solve_triangular(Lc.T, solve_triangular(Lc, rhs_s, lower=True),
                                 lower=False)
            X = solve_triangular(L.T, t - Y @ D, lower=False)
    else:
        if not fac.ok and na == 0:
            raise LicqFailure("P alone is singular and no rows are active")
        M = np.zeros((qp.n + na, qp.n + na))
        M[:qp.n, :qp.n] = qp.P
        if na:
            M[:qp.n, qp.n:] = Atil.T
            M[qp.n:, :qp.n] = Atil
        rhs = np.vstack([-Q, B])
        try:
            Z = np.linalg.solve(M, rhs)
            Z += np.linalg.solve(M, rhs - M @ Z)  # one refinement step
        except np.linalg.LinAlgError:
            raise LicqFailure("KKT matrix is singular")
        resid = float(np.max(np.abs(M @ Z - rhs)))
        if not np.isfinite(resid) or resid > 1e-8 * (1.0 + float(np.max(np.abs(rhs)))):
            raise LicqFailure("KKT matrix is numerically singular")
        X, D = Z[:qp.n], Z[qp.n:]

    if single:
        return X.ravel(), D.ravel()
    return X, D


def kkt_solve(qp: ParametricQP, active: ActiveSet,
              rhs_q: np.ndarray, rhs_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Single right-hand-side KKT solve; see kkt_solve_many."""
    return kkt_solve_many(qp, active, rhs_q, rhs_b)


@dataclass(eq=False)
class AffineLaw:
    """Affine solution map z(theta) = F theta + g for one active set.

    Rows of F and g stack (x, nu, lambda_S): n primal rows, me equality
    multipliers, then one multiplier per active inequality in ascending
    constraint order.
    """

    F: np.ndarray
    g: np.ndarray
    active: ActiveSet
    n: int
    me: int

    @property
    def rows(self) -> int:
        return self.F.shape[0]

    def x_part(self, arr: np.ndarray) -> np.ndarray:
        return arr[:self.n]

    def nu_part(self, arr: np.ndarray) -> np.ndarray:
        return arr[self.n:self.n + self.me]

    def lam_part(self, arr: np.ndarray) -> np.ndarray:
        return arr[self.n + self.me:]

    def eval(self, theta: np.ndarray) -> np.ndarray:
        return self.F @ theta + self.g


def affine_law(qp: ParametricQP, active: ActiveSet) -> AffineLaw:
    """Solve the KKT system against (U, u) and (Vtil, vtil) columns jointly.

    F and g come from one multi-right-hand-side solve: the system is linear
    in theta, so applying the KKT inverse to the parameter blocks gives the
    complete affine law for this active set.
    """
    idx = list(active.indices)
    Vtil = np.vstack([qp.W, qp.V[idx]])
    vtil = np.concatenate([qp.w, qp.v[idx]])
    RQ = np.hstack([qp.U, qp.u[:, None]])
    RB = np.hstack([Vtil, vtil[:, None]]) if Vtil.size else np.zeros((0, qp.p + 1))
    X, D = kkt_solve_many(qp, active, RQ, RB)
    Z = np.vstack([X, D])
    return AffineLaw(np.ascontiguousarray(Z[:, :qp.p]), Z[:, qp.p].copy(),
                     active, qp.n, qp.me)


# Facet provenance markers used by the region rows.
ORIGIN_PRIMAL = "primal"   # inactive row i would become tight
ORIGIN_DUAL = "dual"       # multiplier of active row i would hit zero
ORIGIN_THETA = "theta"     # boundary of the parameter set


@dataclass(eq=False)
class RegionIneq:
    """Closed region {theta : H theta <= j} with per-row provenance."""

    H: np.ndarray
    j: np.ndarray
    origins: tuple[tuple[str, int], ...]

    @property
    def rows(self) -> int:
        return self.H.shape[0]


def region_ineq(qp: ParametricQP, law: AffineLaw) -> RegionIneq:
    """Inequalities carving the critical region out of parameter space.

    Primal rows keep every inactive constraint satisfied by x(theta); dual
    rows keep every active-inequality multiplier nonnegative. Equality
    multipliers are sign free and contribute no rows. Counting both blocks
    gives exactly m rows before redundancy removal.
    """
    act = list(law.active.indices)
    inact = [i for i in range(qp.m) if not law.active.contains(i)]
    Fx = law.x_part(law.F)
    gx = law.x_part(law.g)
    Fl = law.lam_part(law.F)
    gl = law.lam_part(law.g)

    H_primal = qp.A[inact] @ Fx - qp.V[inact]
    j_primal = qp.v[inact] - qp.A[inact] @ gx
    H_dual = -Fl
    j_dual = gl.copy()
    H = np.vstack([H_primal, H_dual])
    j = np.concatenate([j_primal, j_dual])
    origins = tuple([(ORIGIN_PRIMAL, i) for i in inact]
                    + [(ORIGIN_DUAL, i) for i in act])
    return RegionIneq(H, j, origins)


@dataclass(frozen=True)
class KktReport:
    """Worst-case violations of each optimality condition at a point."""

    primal_ineq: float
    primal_eq: float
    dual_sign: float
    stationarity: float
    complementarity: float
    tol: float

    @property
    def ok(self) -> bool:
        worst = max(self.primal_ineq, self.primal_eq, self.dual_sign,
                    self.stationarity, self.complementarity)
        return bool(worst <= self.tol)


def check_kkt(qp: ParametricQP, theta, x, lam, nu=None, tol: float = KKT_TOL) -> KktReport:
    """Evaluate KKT residuals for a candidate primal/dual pair at theta.

    lam must cover all m inequality rows (zeros where inactive); nu covers
    equality rows. Violations are reported as maxima, 0 for empty blocks.
    """
    inst = instantiate(qp, theta)
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    nu = np.zeros(qp.me) if nu is None else np.asarray(nu, dtype=float)
    slack = qp.A @ x - inst.b if qp.m else np.zeros(0)
    primal_ineq = float(np.max(slack, initial=0.0))
    primal_eq = float(np.max(np.abs(qp.E @ x - inst.f), initial=0.0))
    dual_sign = float(np.max(-lam, initial=0.0))
    grad = qp.P @ x + inst.q + qp.A.T @ lam + qp.E.T @ nu
    stationarity = float(np.max(np.abs(grad), initial=0.0))
    complementarity = float(np.max(np.abs(lam * slack), initial=0.0))
    return KktReport(primal_ineq, primal_eq, dual_sign, stationarity,
                     complementarity, tol)


@dataclass(frozen=True)
class OracleResult:
    status: str  # "optimal" | "infeasible"
    x: np.ndarray | None
    lam: np.ndarray | None
    nu: np.ndarray | None
    active: ActiveSet | None


def scatter_duals(m: int, active: ActiveSet, lam_active: np.ndarray) -> np.ndarray:
    """Expand multipliers of the active rows to a full m-vector (zeros elsewhere)."""
    lam = np.zeros(m)
    for pos, i in enumerate(active.indices):
        lam[i] = lam_active[pos]
    return lam


def oracle_solve(qp: ParametricQP, theta, tol: float = KKT_TOL,
                 m_limit: int = M_NAIVE) -> OracleResult:
    """Reference solve by exhaustive active-set enumeration.

    Visits candidate sets in increasing cardinality, lexicographic within each
    cardinality, and returns the first one whose KKT residuals pass check_kkt.
    Deliberately brute force: the point is independence from the explicit
    pipeline, not speed. Refuses problems with more than m_limit inequality
    rows. When nothing passes, a phase-1 LP decides between "infeasible" and a
    genuine numerical failure (OracleError).
    """
    if qp.m > m_limit:
        raise SizeLimit(f"oracle limited to {m_limit} inequality rows, got {qp.m}")
    inst = instantiate(qp, theta)
    max_card = max(qp.n - qp.me, 0)
    for k in range(0, min(qp.m, max_card) + 1):
        for combo in itertools.combinations(range(qp.m), k):
            active = ActiveSet.from_indices(qp.m, combo)
            rhs_b = np.concatenate([inst.f, inst.b[list(combo)]])
            try:
                x, duals = kkt_solve(qp, active, inst.q, rhs_b)
            except LicqFailure:
                continue
            nu = duals[:qp.me]
            lam = scatter_duals(qp.m, active, duals[qp.me:])
            if check_kkt(qp, theta, x, lam, nu, tol).ok:
                return OracleResult("optimal", x, lam, nu, active)
    lp = solve_lp(np.zeros(qp.n), qp.A, inst.b, qp.E, inst.f)
    if lp.status == "infeasible":
        return OracleResult("infeasible", None, None, None, None)
    raise OracleError("feasible problem but no active set passed the KKT check")
