"""Online evaluation of the explicit solution: clamp, locate, apply one
affine law. No division anywhere on the hot path.

evaluate() batches the work into a few small matrix-vector products over
[theta; 1]-augmented tables: one over the tree-node normals (with a scalar
descent below the batched prefix for very large trees), one over the chosen
leaf's stacked candidate rows, one for the law. The objective is computed on
demand, never inside evaluate, mirroring the generated C where it lives in a
separate function. evaluate_counted() is a pure-scalar twin that tallies
every floating operation and mirrors the generated C op-for-op.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .builder import ExplicitSolution
from .model import map_user_params, retrieve_user_solution
from .tree import MEMBER_SLACK, SearchTree

NODE_TOP = 256         # BFS-prefix nodes evaluated in one batched product


def clamp_param(theta, lo, hi) -> np.ndarray:
    """Componentwise clamp of theta into [lo, hi] (no division)."""
    return np.minimum(np.maximum(np.asarray(theta, dtype=float), lo), hi)


class SolveResult:
    """Solve outcome; objective is computed on first access, never inside
    evaluate (it is not part of the solve path)."""

    __slots__ = ("status", "region", "x", "lam", "nu", "_obj", "_objfn")

    def __init__(self, status, region, x, lam, nu, objective=None, objfn=None):
        self.status = status
        self.region = region
        self.x = x
        self.lam = lam        # full length m, zeros on inactive rows
        self.nu = nu
        self._obj = objective
        self._objfn = objfn

    @property
    def objective(self):
        if self._obj is None and self._objfn is not None:
            self._obj = self._objfn()
        return self._obj

    def __repr__(self):
        return ("SolveResult(status=%r, region=%r, x=%r)"
                % (self.status, self.region, self.x))


INFEASIBLE = SolveResult("infeasible", None, None, None, None)


def objective_value(qp, theta, x) -> float:
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    q = qp.u + qp.U @ theta
    return float(0.5 * x @ (qp.P @ x) + q @ x)


def flop_bound(solution: ExplicitSolution, tree: SearchTree) -> int:
    """Worst-case op count (adds+muls+compares) for one tree evaluation:
    clamp, descent, worst leaf scan, longest law application."""
    p = solution.qp.p
    per_row = 2 * p + 1
    law_rows = max((r.law.rows for r in solution.regions), default=0)
    return 2 * p + tree.depth * per_row + tree.worst_leaf_rows(solution) * per_row \
        + law_rows * per_row


def flop_bound_scan(solution: ExplicitSolution) -> int:
    """Same bound for the linear-scan fallback: every region may be probed."""
    p = solution.qp.p
    per_row = 2 * p + 1
    law_rows = max((r.law.rows for r in solution.regions), default=0)
    total_rows = sum(r.rows for r in solution.regions)
    return 2 * p + total_rows * per_row + law_rows * per_row


@dataclass
class OpCounter:
    adds: int = 0
    muls: int = 0
    cmps: int = 0
    divs: int = 0

    @property
    def total(self) -> int:
        return self.adds + self.muls + self.cmps + self.divs


def _objective_quad(qp, law):
    """Per-region objective as one augmented quadratic form:
    obj(theta) = [theta;1]' M [theta;1] with x(theta) = Fx theta + gx."""
    Fx = law.x_part(law.F)
    gx = law.x_part(law.g)
    Q = Fx.T @ qp.P @ Fx + qp.U.T @ Fx + Fx.T @ qp.U
    l = Fx.T @ (qp.P @ gx + qp.u) + qp.U.T @ gx
    c = 0.5 * float(gx @ (qp.P @ gx)) + float(qp.u @ gx)
    p = Q.shape[0]
    M = np.empty((p + 1, p + 1))
    M[:p, :p] = 0.5 * Q
    M[:p, p] = 0.5 * l
    M[p, :p] = 0.5 * l
    M[p, p] = c
    return M


def _box_implied(H: np.ndarray, j: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Rows satisfied by every theta in [lo, hi]: sup over the box of
    H theta stays at or below j (no slack needed). Infinite box edges keep
    every row touching that coordinate."""
    pos = np.maximum(H, 0.0)
    neg = np.minimum(H, 0.0)
    sup = pos @ np.where(np.isfinite(hi), hi, 0.0) + neg @ np.where(np.isfinite(lo), lo, 0.0)
    open_edge = ((pos[:, ~np.isfinite(hi)] != 0).any(axis=1)
                 | (neg[:, ~np.isfinite(lo)] != 0).any(axis=1))
    return (sup <= j) & ~open_edge


def _stack_pack(solution: ExplicitSolution, order, drop_box: bool = False):
    """Stack the given regions' membership rows as [H | -(j+slack)] so that
    inside means row @ [theta;1] <= 0. One product plus a reduceat answers
    every candidate at once; regions keep their given order so the first
    passing span is the first hit. Returns (Haug, row_starts, region_ids).

    drop_box prunes rows that every clamped theta satisfies automatically;
    only valid for queries clamped into the parameter box."""
    p = solution.qp.p
    lo = solution.qp.theta_set.box_lo
    hi = solution.qp.theta_set.box_hi
    ids = [int(k) for k in order]
    if not ids:
        return np.zeros((0, p + 1)), np.zeros(0, dtype=np.intp), np.zeros(0, dtype=np.intp)
    rows, starts, pos = [], [], 0
    for k in ids:
        region = solution.regions[k]
        H, j = region.H, region.j
        if drop_box and region.rows:
            keep = ~_box_implied(H, j, lo, hi)
            H, j = H[keep], j[keep]
        if H.shape[0] == 0:            # nothing to test: vacuously inside
            aug = np.zeros((1, p + 1))
        else:
            aug = np.empty((H.shape[0], p + 1))
            aug[:, :p] = H
            aug[:, p] = -(j + MEMBER_SLACK)
        rows.append(aug)
        starts.append(pos)
        pos += aug.shape[0]
    return (np.ascontiguousarray(np.vstack(rows)),
            np.array(starts, dtype=np.intp),
            np.array(ids, dtype=np.intp))


@dataclass(eq=False)
class Evaluator:
    """Packs the solution (and optional tree) once, then answers point
    queries. With a tree the query cost is a short descent plus one stacked
    membership product over the leaf; without one it degrades to a stacked
    linear scan. Clamped queries use packs with box-implied rows pruned."""

    solution: ExplicitSolution
    tree: SearchTree | None = None
    clamp: bool = True
    _pk: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        qp = self.solution.qp
        pk = self._pk
        pk["p"], pk["n"], pk["me"], pk["m"] = qp.p, qp.n, qp.me, qp.m
        pk["lo"] = qp.theta_set.box_lo.tolist()
        pk["hi"] = qp.theta_set.box_hi.tolist()
        # law as one augmented table: z = [F | g] @ [theta; 1]
        pk["F"] = [np.ascontiguousarray(np.hstack([r.law.F, r.law.g[:, None]]))
                   for r in self.solution.regions]
        pk["act"] = [np.array(r.active.indices, dtype=np.intp)
                     for r in self.solution.regions]
        # same law with the multiplier scatter baked in: one product yields
        # the full (x, lambda, nu) stack, inactive multiplier rows all zero
        n, me, m = qp.n, qp.me, qp.m
        full = []
        for r, aug in zip(self.solution.regions, pk["F"]):
            tab = np.zeros((n + m + me, qp.p + 1))
            tab[:n] = aug[:n]
            idx = np.array(r.active.indices, dtype=np.intp)
            if idx.size:
                tab[n + idx] = aug[n + me:]
            tab[n + m:] = aug[n:n + me]
            full.append(np.ascontiguousarray(tab))
        pk["Ffull"] = full
        pk["obj"] = [_objective_quad(qp, r.law) for r in self.solution.regions]
        pk["scan"] = _stack_pack(self.solution, range(self.solution.K))
        pk["scan_r"] = _stack_pack(self.solution, range(self.solution.K),
                                   drop_box=True)
        # scalar twins for the instrumented path
        pk["Hl"] = [r.H.tolist() for r in self.solution.regions]
        pk["jl"] = [(r.j + MEMBER_SLACK).tolist() for r in self.solution.regions]
        pk["Fl"] = [r.law.F.tolist() for r in self.solution.regions]
        pk["gl"] = [r.law.g.tolist() for r in self.solution.regions]
        if self.tree is not None:
            t = self.tree
            p = qp.p
            top = min(t.n_nodes, NODE_TOP)    # nodes are BFS-ordered
            aug = np.empty((top, p + 1))
            aug[:, :p] = t.normals[:top]
            aug[:, p] = -t.offsets[:top]
            pk["node_top"] = np.ascontiguousarray(aug)
            pk["top"] = top
            pk["t_low"] = t.low.tolist()
            pk["t_high"] = t.high.tolist()
            pk["t_leaf"] = t.leaf_id.tolist()
            shared: dict = {}   # identical candidate sets share one pack
            shared_r: dict = {}
            packs, packs_r = [], []
            for leaf in t.leaves:
                key = leaf.tobytes()
                if key not in shared:
                    shared[key] = _stack_pack(self.solution, leaf)
                    shared_r[key] = _stack_pack(self.solution, leaf, drop_box=True)
                packs.append(shared[key])
                packs_r.append(shared_r[key])
            pk["leafpack"] = packs
            pk["leafpack_r"] = packs_r
            pk["trivial"] = t.n_nodes == 1   # single leaf: skip the descent
            pk["node_Nl"] = t.normals.tolist()
            pk["node_offl"] = t.offsets.tolist()
            pk["leavesl"] = [leaf.tolist() for leaf in t.leaves]
        # reusable scratch: one row buffer sized to the largest pack keeps
        # the per-query allocations down to the result arrays themselves
        packs = [pk["scan"], pk["scan_r"]]
        packs += list(pk.get("leafpack", ())) + list(pk.get("leafpack_r", ()))
        rmax = max(P[0].shape[0] for P in packs)
        kmax = max(P[2].size for P in packs)
        pk["lo_arr"] = np.asarray(qp.theta_set.box_lo, dtype=float)
        pk["hi_arr"] = np.asarray(qp.theta_set.box_hi, dtype=float)
        pk["tbuf"] = np.ones(qp.p + 1)
        pk["sbuf"] = np.empty(max(rmax, 1))
        pk["okbuf"] = np.empty(max(rmax, 1), dtype=bool)
        pk["hbuf"] = np.empty(max(kmax, 1), dtype=bool)

    # ----- hot path -------------------------------------------------------

    def _leaf_pack(self, ta1: np.ndarray, reduced: bool):
        pk = self._pk
        if self.tree is None:
            return pk["scan_r"] if reduced else pk["scan"]
        packs = pk["leafpack_r"] if reduced else pk["leafpack"]
        leaf = pk["t_leaf"]
        if pk["trivial"]:
            return packs[leaf[0]]
        low, high = pk["t_low"], pk["t_high"]
        top = pk["top"]
        vals = pk["node_top"] @ ta1
        i = 0
        t = None
        while leaf[i] < 0:
            if i < top:
                v = vals[i]
            else:                      # deep node: one scalar dot
                if t is None:
                    t = ta1.tolist()
                row = pk["node_Nl"][i]
                v = -pk["node_offl"][i]
                for c in range(pk["p"]):
                    v += row[c] * t[c]
            i = high[i] if v > 0.0 else low[i]
        return packs[leaf[i]]

    def _find(self, ta1: np.ndarray, reduced: bool) -> int:
        pk = self._pk
        Haug, starts, ids = self._leaf_pack(ta1, reduced)
        nid = ids.size
        if nid == 0:
            return -1
        r = Haug.shape[0]
        s = np.dot(Haug, ta1, out=pk["sbuf"][:r])
        ok = np.less_equal(s, 0.0, out=pk["okbuf"][:r])
        hits = np.bitwise_and.reduceat(ok, starts, out=pk["hbuf"][:nid])
        j = int(hits.argmax())
        if hits[j]:
            return int(ids[j])
        return -1

    def locate(self, theta) -> int | None:
        pk = self._pk
        buf = pk["tbuf"]
        buf[:pk["p"]] = theta
        k = self._find(buf, False)
        return None if k < 0 else k

    def _result(self, k: int, ta1: np.ndarray) -> SolveResult:
        pk = self._pk
        n, m = pk["n"], pk["m"]
        zf = pk["Ffull"][k] @ ta1      # fresh array; the views below own it
        M = pk["obj"][k]
        ta1 = ta1.copy()     # tbuf is reused; the lazy objective needs a snapshot
        return SolveResult("optimal", k, zf[:n], zf[n:n + m], zf[n + m:],
                           objfn=lambda: float(ta1 @ (M @ ta1)))

    def evaluate(self, theta) -> SolveResult:
        pk = self._pk
        p = pk["p"]
        buf = pk["tbuf"]
        if self.clamp:
            head = buf[:p]
            np.maximum(theta, pk["lo_arr"], out=head)
            np.minimum(head, pk["hi_arr"], out=head)
            k = self._find(buf, True)
        else:
            buf[:p] = theta
            k = self._find(buf, False)
        if k < 0:
            return INFEASIBLE
        return self._result(k, buf)

    def eval_user(self, theta_user) -> SolveResult:
        """Map user parameters to canonical theta, solve, map x back."""
        maps = self.solution.maps
        res = self.evaluate(map_user_params(maps, theta_user))
        if res.status != "optimal":
            return res
        z = np.concatenate([res.x, res.lam, res.nu])
        return SolveResult(res.status, res.region,
                           retrieve_user_solution(maps, z),
                           res.lam, res.nu, objfn=lambda: res.objective)

    # ----- instrumented path ----------------------------------------------

    def evaluate_counted(self, theta) -> tuple[SolveResult, OpCounter]:
        """Pure-scalar evaluation that tallies every multiply, add, and
        compare on the locate/law path. There is no divide to tally; the
        objective (on-demand, not part of the solve path) is attached
        afterwards without counting."""
        ops = OpCounter()
        pk = self._pk
        p = pk["p"]
        t = [float(v) for v in theta]
        if self.clamp:
            lo, hi = pk["lo"], pk["hi"]
            for i in range(p):
                ops.cmps += 1
                if t[i] < lo[i]:
                    t[i] = lo[i]
                ops.cmps += 1
                if t[i] > hi[i]:
                    t[i] = hi[i]

        if self.tree is not None:
            tn, to = pk["node_Nl"], pk["node_offl"]
            low, high, leaf = pk["t_low"], pk["t_high"], pk["t_leaf"]
            i = 0
            while leaf[i] < 0:
                acc = 0.0
                for c in range(p):
                    acc += tn[i][c] * t[c]
                    ops.muls += 1
                    ops.adds += 1
                ops.cmps += 1
                i = high[i] if acc > to[i] else low[i]
            candidates = pk["leavesl"][leaf[i]]
        else:
            candidates = range(self.solution.K)

        found = -1
        for k in candidates:
            H, j = pk["Hl"][k], pk["jl"][k]
            inside = True
            for r in range(len(j)):
                acc = 0.0
                for c in range(p):
                    acc += H[r][c] * t[c]
                    ops.muls += 1
                    ops.adds += 1
                ops.cmps += 1
                if acc > j[r]:
                    inside = False
                    break
            if inside:
                found = k
                break
        if found < 0:
            return INFEASIBLE, ops

        F, g = pk["Fl"][found], pk["gl"][found]
        z = []
        for r in range(len(g)):
            acc = 0.0
            for c in range(p):
                acc += F[r][c] * t[c]
                ops.muls += 1
                ops.adds += 1
            acc += g[r]
            ops.adds += 1
            z.append(acc)
        n, me, m = pk["n"], pk["me"], pk["m"]
        lam = [0.0] * m
        for pos, row in enumerate(pk["act"][found]):
            lam[row] = z[n + me + pos]
        res = SolveResult("optimal", found, np.array(z[:n]), np.array(lam),
                          np.array(z[n:n + me]),
                          objective=objective_value(self.solution.qp,
                                                    np.array(t[:p]), z[:n]))
        return res, ops


def median_eval_time(evaluator: Evaluator, thetas, repeats: int = 3) -> float:
    """Median wall-clock seconds per evaluate() call over a sample batch."""
    times = []
    for theta in thetas:
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            evaluator.evaluate(theta)
            best = min(best, time.perf_counter() - t0)
        times.append(best)
    return float(np.median(times))
