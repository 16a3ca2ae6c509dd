"""Canonical parametric-QP model, parameter polyhedron, and user-space maps.

Canonical form:

    minimize    0.5 x' P x + q(theta)' x
    subject to  A x <= b(theta)
                E x  = f(theta)

with q = u + U theta, b = v + V theta, f = w + W theta, and theta restricted
to a polyhedron {theta : G theta <= h} that may carry per-coordinate box
bounds. All model objects are treated as immutable after construction; the
offline and online layers never write to them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import chebyshev_center, cholesky

M_LIMIT = 1024          # hard cap on inequality rows
SYM_RTOL = 1e-12        # symmetry tolerance for P, relative to ||P||_inf
REG_SCALE = 1e-8        # Tikhonov eps = REG_SCALE * trace(P) / n


def _arr(x, shape=None, name="array") -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if shape is not None and a.shape != shape:
        raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
    return a


@dataclass(eq=False)
class ParamPolyhedron:
    """Parameter set {theta : G theta <= h} with optional box bounds.

    Box bounds are stored per coordinate (+-inf where absent) and are always
    duplicated as rows of (G, h) so polyhedral operations see them.
    """

    G: np.ndarray
    h: np.ndarray
    box_lo: np.ndarray
    box_hi: np.ndarray

    def __post_init__(self):
        self.G = np.atleast_2d(_arr(self.G))
        self.h = _arr(self.h).ravel()
        p = self.G.shape[1]
        self.box_lo = _arr(self.box_lo, (p,), "box_lo")
        self.box_hi = _arr(self.box_hi, (p,), "box_hi")
        if self.G.shape[0] != self.h.size:
            raise ValueError("G and h row counts differ")

    @property
    def p(self) -> int:
        return self.G.shape[1]


def box_rows(box_lo: np.ndarray, box_hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inequality rows encoding finite box bounds, coordinate by coordinate."""
    p = len(box_lo)
    rows, rhs = [], []
    for i in range(p):
        if np.isfinite(box_lo[i]):
            e = np.zeros(p)
            e[i] = -1.0
            rows.append(e)
            rhs.append(-float(box_lo[i]))
        if np.isfinite(box_hi[i]):
            e = np.zeros(p)
            e[i] = 1.0
            rows.append(e)
            rhs.append(float(box_hi[i]))
    if rows:
        return np.array(rows), np.array(rhs)
    return np.zeros((0, p)), np.zeros(0)


def make_theta_set(box_lo=None, box_hi=None, G=None, h=None, p=None) -> ParamPolyhedron:
    """Assemble a parameter set from box bounds and/or general rows.

    Box rows come first (ascending coordinate, lower bound before upper),
    then the general rows. Missing bounds are +-inf.
    """
    if p is None:
        for cand in (box_lo, box_hi):
            if cand is not None:
                p = len(cand)
                break
        else:
            if G is None:
                raise ValueError("cannot infer parameter dimension")
            p = np.atleast_2d(np.asarray(G)).shape[1]
    lo = np.full(p, -np.inf) if box_lo is None else _arr(box_lo, (p,), "box_lo")
    hi = np.full(p, np.inf) if box_hi is None else _arr(box_hi, (p,), "box_hi")
    bG, bh = box_rows(lo, hi)
    if G is not None:
        G = np.atleast_2d(_arr(G))
        h = _arr(h).ravel()
        bG = np.vstack([bG, G])
        bh = np.concatenate([bh, h])
    return ParamPolyhedron(bG, bh, lo, hi)


@dataclass(eq=False)
class ParametricQP:
    """Validated canonical problem data. reg_eps records applied regularization."""

    P: np.ndarray
    A: np.ndarray
    u: np.ndarray
    U: np.ndarray
    v: np.ndarray
    V: np.ndarray
    E: np.ndarray
    w: np.ndarray
    W: np.ndarray
    theta_set: ParamPolyhedron
    reg_eps: float = 0.0
    _chol_cache: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.P = np.atleast_2d(_arr(self.P))
        n = self.P.shape[0]
        if self.P.shape != (n, n):
            raise ValueError("P must be square")
        self.A = _arr(self.A).reshape(-1, n) if np.size(self.A) else np.zeros((0, n))
        m = self.A.shape[0]
        p = self.theta_set.p
        self.u = _arr(self.u, (n,), "u")
        self.U = _arr(self.U, (n, p), "U")
        self.v = _arr(self.v, (m,), "v")
        self.V = _arr(self.V, (m, p), "V")
        self.E = _arr(self.E).reshape(-1, n) if np.size(self.E) else np.zeros((0, n))
        me = self.E.shape[0]
        self.w = _arr(self.w, (me,), "w")
        self.W = _arr(self.W, (me, p), "W")

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def me(self) -> int:
        return self.E.shape[0]

    @property
    def p(self) -> int:
        return self.theta_set.p


def make_qp(P, A, u, U, v, V, E=None, w=None, W=None, theta_set=None,
            regularize: bool = False) -> ParametricQP:
    """Build a ParametricQP, optionally adding Tikhonov regularization to P.

    With regularize=True, P becomes P + eps I with eps = 1e-8 trace(P) / n,
    and the applied eps is recorded on the instance. Shapes are checked here;
    softer conditions (definiteness, size limits, nonempty theta set) are
    reported by validate().
    """
    P = np.atleast_2d(_arr(P))
    n = P.shape[0]
    if theta_set is None:
        raise ValueError("theta_set is required")
    p = theta_set.p
    if E is None:
        E = np.zeros((0, n))
        w = np.zeros(0)
        W = np.zeros((0, p))
    eps = 0.0
    if regularize:
        eps = REG_SCALE * float(np.trace(P)) / max(n, 1)
        P = P + eps * np.eye(n)
    return ParametricQP(P, A, u, U, v, V, E, w, W, theta_set, reg_eps=eps)


@dataclass(frozen=True)
class QPInstance:
    """Plain QP obtained by freezing the parameter."""

    q: np.ndarray
    b: np.ndarray
    f: np.ndarray
    theta: np.ndarray


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def validate(qp: ParametricQP) -> ValidationReport:
    """Check model conditions that constructors cannot enforce.

    Reported violations: asymmetric P, P not positive definite (after any
    requested regularization), more than 1024 inequality rows, an empty
    parameter set, and box bounds missing from the parameter rows.
    """
    bad = []
    scale = max(1.0, float(np.max(np.abs(qp.P))) if qp.P.size else 0.0)
    if qp.P.size and float(np.max(np.abs(qp.P - qp.P.T))) > SYM_RTOL * scale:
        bad.append("P is not symmetric")
    else:
        fac = cholesky(qp.P)
        if not fac.ok:
            hint = "" if qp.reg_eps else " (regularize=True adds eps*I)"
            bad.append(f"P is not positive definite: pivot {fac.pivot_min:.3e}{hint}")
    if qp.m > M_LIMIT:
        bad.append(f"m = {qp.m} exceeds the {M_LIMIT} inequality-row limit")
    ts = qp.theta_set
    if chebyshev_center(ts.G, ts.h) is None:
        bad.append("parameter set is empty")
    bG, bh = box_rows(ts.box_lo, ts.box_hi)
    for row, rhs in zip(bG, bh):
        hit = np.any((np.abs(ts.G - row).max(axis=1) <= 1e-12)
                     & (np.abs(ts.h - rhs) <= 1e-12)) if ts.G.size else False
        if not hit:
            bad.append("box bound missing from parameter rows: "
                       f"coordinate {int(np.argmax(np.abs(row)))}")
    return ValidationReport(not bad, tuple(bad))


def instantiate(qp: ParametricQP, theta) -> QPInstance:
    """Freeze the parameter: q = u + U theta, b = v + V theta, f = w + W theta."""
    theta = _arr(theta, (qp.p,), "theta")
    return QPInstance(qp.u + qp.U @ theta, qp.v + qp.V @ theta,
                      qp.w + qp.W @ theta, theta)


@dataclass(eq=False)
class UserMaps:
    """Affine maps between user-facing and canonical spaces.

    theta = C theta_user + c maps user parameters in; x_user = R z + r maps
    the stacked canonical solution z = (x, lambda, nu) back out. Names are
    per-coordinate labels; consecutive runs of one label form an array field
    (e.g. var_names = [beta, beta, v] exposes array beta and scalar v).
    dual_names labels the m inequality rows the same way.
    """

    C: np.ndarray
    c: np.ndarray
    R: np.ndarray
    r: np.ndarray
    param_names: tuple[str, ...]
    var_names: tuple[str, ...]
    dual_names: tuple[str, ...]

    def __post_init__(self):
        self.C = np.atleast_2d(_arr(self.C))
        self.c = _arr(self.c, (self.C.shape[0],), "c")
        self.R = np.atleast_2d(_arr(self.R))
        self.r = _arr(self.r, (self.R.shape[0],), "r")
        self.param_names = tuple(str(s) for s in self.param_names)
        self.var_names = tuple(str(s) for s in self.var_names)
        self.dual_names = tuple(str(s) for s in self.dual_names)
        if len(self.param_names) != self.C.shape[1]:
            raise ValueError("param_names length must match columns of C")
        if len(self.var_names) != self.R.shape[0]:
            raise ValueError("var_names length must match rows of R")

    @property
    def p_user(self) -> int:
        return self.C.shape[1]

    @property
    def n_user(self) -> int:
        return self.R.shape[0]


def identity_maps(qp: ParametricQP) -> UserMaps:
    """Maps exposing the canonical spaces unchanged."""
    n, m, me, p = qp.n, qp.m, qp.me, qp.p
    R = np.zeros((n, n + m + me))
    R[:, :n] = np.eye(n)
    return UserMaps(np.eye(p), np.zeros(p), R, np.zeros(n),
                    ("theta",) * p, ("x",) * n,
                    tuple(f"d{i}" for i in range(m)))


def map_user_params(maps: UserMaps, theta_user) -> np.ndarray:
    theta_user = _arr(theta_user, (maps.p_user,), "theta_user")
    return maps.C @ theta_user + maps.c


def retrieve_user_solution(maps: UserMaps, z) -> np.ndarray:
    z = _arr(z, (maps.R.shape[1],), "z")
    return maps.R @ z + maps.r


# ---------------------------------------------------------------------------
# Problem-file round trip. The on-disk format is a single JSON object with
# dense row-major matrices; the equality block and user_maps are optional.
# ---------------------------------------------------------------------------

def _mat(rows) -> list:
    return [[float(x) for x in row] for row in np.atleast_2d(rows)]


def _vec(values) -> list:
    return [float(x) for x in np.asarray(values).ravel()]


def _box_out(values) -> list:
    return [None if not np.isfinite(x) else float(x) for x in values]


def _box_in(values, p, fill) -> np.ndarray:
    if values is None:
        return np.full(p, fill)
    return np.array([fill if x is None else float(x) for x in values])


def problem_to_dict(qp: ParametricQP, maps: UserMaps | None = None) -> dict:
    d = {
        "n": qp.n, "m": qp.m, "me": qp.me, "p": qp.p,
        "P": _mat(qp.P), "A": _mat(qp.A) if qp.m else [],
        "u": _vec(qp.u), "U": _mat(qp.U),
        "v": _vec(qp.v), "V": _mat(qp.V) if qp.m else [],
        "theta_G": _mat(qp.theta_set.G) if qp.theta_set.G.size else [],
        "theta_h": _vec(qp.theta_set.h),
        "theta_box_lo": _box_out(qp.theta_set.box_lo),
        "theta_box_hi": _box_out(qp.theta_set.box_hi),
    }
    if qp.me:
        d["E"] = _mat(qp.E)
        d["w"] = _vec(qp.w)
        d["W"] = _mat(qp.W)
    if qp.reg_eps:
        # P is stored post-regularization; record eps so loading does not
        # apply it a second time.
        d["reg_eps"] = float(qp.reg_eps)
    if maps is not None:
        d["user_maps"] = {
            "C": _mat(maps.C), "c": _vec(maps.c),
            "R": _mat(maps.R), "r": _vec(maps.r),
            "param_names": list(maps.param_names),
            "var_names": list(maps.var_names),
            "dual_names": list(maps.dual_names),
        }
    return d


def problem_from_dict(d: dict) -> tuple[ParametricQP, UserMaps]:
    required = ["n", "m", "p", "P", "u", "U"]
    if int(d.get("m", 0)):
        required += ["A", "v", "V"]
    if int(d.get("me", 0)):
        required += ["E", "w", "W"]
    for key in required:
        if key not in d:
            raise ValueError(f"problem file is missing field {key!r}")
    n, m, p = int(d["n"]), int(d["m"]), int(d["p"])
    me = int(d.get("me", 0))
    P = _arr(d["P"], (n, n), "P")
    A = _arr(d["A"], (m, n), "A") if m else np.zeros((0, n))
    u = _arr(d["u"], (n,), "u")
    U = _arr(d["U"], (n, p), "U")
    v = _arr(d["v"], (m,), "v") if m else np.zeros(0)
    V = _arr(d["V"], (m, p), "V") if m else np.zeros((0, p))
    if me:
        E = _arr(d["E"], (me, n), "E")
        w = _arr(d["w"], (me,), "w")
        W = _arr(d["W"], (me, p), "W")
    else:
        E, w, W = np.zeros((0, n)), np.zeros(0), np.zeros((0, p))
    lo = _box_in(d.get("theta_box_lo"), p, -np.inf)
    hi = _box_in(d.get("theta_box_hi"), p, np.inf)
    G = _arr(d["theta_G"], None, "theta_G").reshape(-1, p) if d.get("theta_G") else np.zeros((0, p))
    h = _arr(d.get("theta_h", []), None, "theta_h").ravel()

    # Box rows must appear in (G, h); append any that a hand-written file left out.
    bG, bh = box_rows(lo, hi)
    missing_G, missing_h = [], []
    for row, rhs in zip(bG, bh):
        hit = np.any((np.abs(G - row).max(axis=1) <= 1e-12)
                     & (np.abs(h - rhs) <= 1e-12)) if G.size else False
        if not hit:
            missing_G.append(row)
            missing_h.append(rhs)
    if missing_G:
        G = np.vstack([np.array(missing_G), G]) if G.size else np.array(missing_G)
        h = np.concatenate([np.array(missing_h), h]) if h.size else np.array(missing_h)
    ts = ParamPolyhedron(G, h, lo, hi)

    if "reg_eps" in d:
        # Round-tripped problem: P already carries its regularization.
        qp = ParametricQP(P, A, u, U, v, V, E, w, W, ts,
                          reg_eps=float(d["reg_eps"]))
    else:
        qp = make_qp(P, A, u, U, v, V, E, w, W, theta_set=ts,
                     regularize=bool(d.get("regularize", False)))
    um = d.get("user_maps")
    if um is None:
        maps = identity_maps(qp)
    else:
        maps = UserMaps(
            _arr(um["C"]).reshape(p, -1), _arr(um["c"], (p,), "c"),
            _arr(um["R"]).reshape(-1, n + m + me), _arr(um["r"]),
            tuple(um["param_names"]), tuple(um["var_names"]),
            tuple(um.get("dual_names", [f"d{i}" for i in range(m)])),
        )
    return qp, maps


def load_problem(path) -> tuple[ParametricQP, UserMaps]:
    with open(path) as fh:
        return problem_from_dict(json.load(fh))


def save_problem(path, qp: ParametricQP, maps: UserMaps | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(problem_to_dict(qp, maps), fh, indent=1)
        fh.write("\n")
