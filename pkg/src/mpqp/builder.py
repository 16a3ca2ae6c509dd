"""Offline construction of the explicit solution: enumerate active sets,
keep the full-dimensional critical regions, and trim redundant rows.

Two strategies produce identical region collections:

  build_naive    enumerates all 2^m subsets (reference; small m only);
  build_explore  grows outward from a seed region by toggling one constraint
                 per facet, falling back to a step-over-facet probe with the
                 brute-force oracle when a toggle produces nothing.

Regions are sorted by active-set bit pattern, so rebuilds are byte-for-byte
reproducible and the two strategies can be compared directly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySolution, LicqFailure, SizeLimit
from .kkt import (ORIGIN_THETA, ActiveSet, AffineLaw, affine_law, region_ineq)
from .linalg import INTERIOR_TOL, chebyshev_center, solve_lp
from .model import ParametricQP, UserMaps, identity_maps, validate
from .kkt import M_NAIVE, oracle_solve

K_MAX = 100_000                    # region-count cap (CLI: MPQP_KMAX)
BYTE_BUDGET = 256 * 1024 * 1024    # coefficient-storage cap in bytes
REDUNDANCY_TOL = 1e-9              # slack when testing a row for redundancy
PROBE_STEPS = (1e-7, 1e-5, 1e-3)   # facet step-over distances for probing


@dataclass(eq=False)
class CriticalRegion:
    """One critical region: active set, affine law, reduced region rows.

    origins tags each retained row with its source: ("primal", i) an inactive
    constraint i becoming tight, ("dual", i) the multiplier of active row i
    hitting zero, ("theta", k) row k of the parameter set. cheb_point is a
    strict interior point; cheb_radius certifies full dimension.
    """

    active: ActiveSet
    law: AffineLaw
    H: np.ndarray
    j: np.ndarray
    origins: tuple[tuple[str, int], ...]
    cheb_point: np.ndarray
    cheb_radius: float

    @property
    def rows(self) -> int:
        return self.H.shape[0]

    def contains(self, theta: np.ndarray, slack: float = 1e-9) -> bool:
        return bool(np.all(self.H @ theta <= self.j + slack))

    def coeff_count(self) -> int:
        return int(self.law.F.size + self.law.g.size + self.H.size + self.j.size)


@dataclass(eq=False)
class BuildLog:
    strategy: str
    examined: int = 0
    kept: int = 0
    skipped_cardinality: int = 0
    skipped_licq: int = 0
    skipped_empty: int = 0
    skipped_lowdim: int = 0
    probes: int = 0
    warnings: tuple[str, ...] = ()


@dataclass(eq=False)
class ExplicitSolution:
    """Complete offline output: regions plus the problem and map data needed
    to evaluate, serialize, and generate code without revisiting the model."""

    regions: list[CriticalRegion]
    qp: ParametricQP
    maps: UserMaps
    build_log: BuildLog
    _eval_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def K(self) -> int:
        return len(self.regions)

    def coeff_count(self) -> int:
        return sum(r.coeff_count() for r in self.regions)


def drop_redundant_rows(H: np.ndarray, j: np.ndarray,
                        origins: tuple[tuple[str, int], ...] | None = None,
                        tol: float = REDUNDANCY_TOL):
    """Remove rows implied by the others; the polyhedron is unchanged.

    Row i is dropped iff maximizing its left-hand side subject to the
    remaining rows stays at or below j_i + tol. Rows are examined in order,
    so of two identical rows the first is dropped and the second kept.
    Returns (H, j, origins) with origins passed through for retained rows.
    """
    n_rows = H.shape[0]
    if origins is None:
        origins = tuple(("theta", i) for i in range(n_rows))
    keep = list(range(n_rows))
    for i in range(n_rows):
        if i not in keep or len(keep) == 1:
            continue
        others = [k for k in keep if k != i]
        res = solve_lp(-H[i], H[others], j[others])
        if res.status == "optimal" and -res.objective <= j[i] + tol:
            keep.remove(i)
    keep_arr = np.array(keep, dtype=int)
    return H[keep_arr], j[keep_arr], tuple(origins[k] for k in keep)


def _theta_rows(qp: ParametricQP):
    G, h = qp.theta_set.G, qp.theta_set.h
    origins = tuple((ORIGIN_THETA, i) for i in range(G.shape[0]))
    return G, h, origins


def candidate_region(qp: ParametricQP, active: ActiveSet,
                     interior_tol: float = INTERIOR_TOL):
    """Evaluate one active set. Returns (CriticalRegion, "ok") or (None, reason)
    with reason in {"licq", "empty", "lowdim"}."""
    try:
        law = affine_law(qp, active)
    except LicqFailure:
        return None, "licq"
    reg = region_ineq(qp, law)
    tG, th, t_orig = _theta_rows(qp)
    H = np.vstack([reg.H, tG]) if tG.size else reg.H
    j = np.concatenate([reg.j, th])
    origins = reg.origins + t_orig

    ball = chebyshev_center(H, j)
    if ball is None:
        return None, "empty"
    if ball[1] <= interior_tol:
        return None, "lowdim"

    H, j, origins = drop_redundant_rows(H, j, origins)
    ball = chebyshev_center(H, j)  # recompute on the reduced rows
    return CriticalRegion(active, law, H, j, origins, ball[0], float(ball[1])), "ok"


def _require_valid(qp: ParametricQP) -> None:
    report = validate(qp)
    if not report.ok:
        raise ValueError("problem failed validation: " + "; ".join(report.violations))


def _finish(regions_by_bits: dict, qp, maps, log) -> ExplicitSolution:
    if not regions_by_bits:
        raise EmptySolution("no full-dimensional critical region found")
    regions = [regions_by_bits[b] for b in sorted(regions_by_bits)]
    log.kept = len(regions)
    return ExplicitSolution(regions, qp, maps if maps is not None else identity_maps(qp),
                            log, {})


def build_naive(qp: ParametricQP, maps: UserMaps | None = None,
                m_naive: int = M_NAIVE, k_max: int = K_MAX,
                byte_budget: int = BYTE_BUDGET,
                interior_tol: float = INTERIOR_TOL) -> ExplicitSolution:
    """Enumerate every subset of the m inequality rows (reference builder)."""
    _require_valid(qp)
    if qp.m > m_naive:
        raise SizeLimit(f"naive enumeration limited to {m_naive} rows, got {qp.m}")
    log = BuildLog("naive")
    max_card = max(qp.n - qp.me, 0)
    kept: dict[int, CriticalRegion] = {}
    bytes_used = 0
    for bits in range(1 << qp.m):
        if bits.bit_count() > max_card:
            log.skipped_cardinality += 1
            continue
        log.examined += 1
        region, reason = candidate_region(qp, ActiveSet(qp.m, bits), interior_tol)
        if region is None:
            setattr(log, f"skipped_{reason}", getattr(log, f"skipped_{reason}") + 1)
            continue
        kept[bits] = region
        bytes_used += region.coeff_count() * 8
        if len(kept) > k_max:
            raise SizeLimit(f"region count exceeded the cap ({k_max}); "
                            "offline phase terminated with a warning")
        if bytes_used > byte_budget:
            raise SizeLimit(f"coefficient storage exceeded {byte_budget} bytes; "
                            "offline phase terminated with a warning")
    return _finish(kept, qp, maps, log)


def _seed_active_set(qp: ParametricQP, theta_seed) -> ActiveSet:
    if theta_seed is None:
        ball = chebyshev_center(qp.theta_set.G, qp.theta_set.h)
        if ball is None:
            raise EmptySolution("parameter set is empty")
        candidates = [ball[0]]
    else:
        candidates = [np.asarray(theta_seed, dtype=float)]
    rng = np.random.default_rng(0)
    lo = np.where(np.isfinite(qp.theta_set.box_lo), qp.theta_set.box_lo, -1.0)
    hi = np.where(np.isfinite(qp.theta_set.box_hi), qp.theta_set.box_hi, 1.0)
    for _ in range(100):
        for theta in candidates:
            res = oracle_solve(qp, theta)
            if res.status == "optimal":
                return res.active
        candidates = [rng.uniform(lo, hi)]
    raise EmptySolution("could not find a feasible seed parameter")


def _facet_center(region: CriticalRegion, row: int):
    """Chebyshev center of one facet (row held at equality), or None."""
    H, j = region.H, region.j
    others = [k for k in range(H.shape[0]) if k != row]
    norms = np.linalg.norm(H[others], axis=1)
    p = H.shape[1]
    G_ext = np.zeros((len(others) + 1, p + 1))
    G_ext[:-1, :p] = H[others]
    G_ext[:-1, p] = norms
    G_ext[-1, p] = 1.0
    h_ext = np.concatenate([j[others], [1e6]])
    eq = np.zeros((1, p + 1))
    eq[0, :p] = H[row]
    obj = np.zeros(p + 1)
    obj[p] = -1.0
    res = solve_lp(obj, G_ext, h_ext, eq, np.array([j[row]]))
    if res.status != "optimal" or res.x[p] < -1e-9:
        return None
    return res.x[:p]


def build_explore(qp: ParametricQP, maps: UserMaps | None = None,
                  theta_seed=None, k_max: int = K_MAX,
                  byte_budget: int = BYTE_BUDGET,
                  interior_tol: float = INTERIOR_TOL) -> ExplicitSolution:
    """Grow the region collection from a seed by facet toggling.

    Each retained facet row proposes one neighbor: a primal row adds its
    constraint to the active set, a dual row removes it, parameter-set rows
    propose nothing. When a proposal is rejected (dependent rows, empty or
    lower-dimensional region), the facet is probed by stepping just past its
    center and asking the oracle, which handles facets where several
    constraints change at once. Terminates when the frontier empties; raises
    SizeLimit beyond k_max regions or the coefficient byte budget.
    """
    _require_valid(qp)
    log = BuildLog("explore")
    seed = _seed_active_set(qp, theta_seed)
    seen = {seed.bits}
    # Frontier entries carry the facet they were proposed across so a failed
    # proposal can be probed from its parent region.
    frontier: deque = deque([(seed, None, -1)])
    kept: dict[int, CriticalRegion] = {}
    bytes_used = 0
    max_card = max(qp.n - qp.me, 0)

    def caps_ok():
        if len(kept) > k_max:
            raise SizeLimit(f"region count exceeded the cap ({k_max}); "
                            "offline phase terminated with a warning")
        if bytes_used > byte_budget:
            raise SizeLimit(f"coefficient storage exceeded {byte_budget} bytes; "
                            "offline phase terminated with a warning")

    def probe(region: CriticalRegion | None, row: int):
        """Step just past a facet and let the oracle name the far-side set."""
        if region is None or qp.m > M_NAIVE:
            return
        center = _facet_center(region, row)
        if center is None:
            return
        normal = region.H[row]
        scale = np.linalg.norm(normal)
        if scale <= 0.0:
            return
        log.probes += 1
        for eps in PROBE_STEPS:
            theta = center + (eps / scale) * normal
            if not np.all(qp.theta_set.G @ theta <= qp.theta_set.h + 1e-12):
                continue
            res = oracle_solve(qp, theta)
            if res.status != "optimal":
                return
            if res.active.bits not in seen:
                seen.add(res.active.bits)
                frontier.append((res.active, None, -1))
                return

    while frontier:
        active, parent, parent_row = frontier.popleft()
        if active.size > max_card:
            log.skipped_cardinality += 1
            probe(parent, parent_row)
            continue
        log.examined += 1
        region, reason = candidate_region(qp, active, interior_tol)
        if region is None:
            setattr(log, f"skipped_{reason}", getattr(log, f"skipped_{reason}") + 1)
            probe(parent, parent_row)
            continue
        kept[active.bits] = region
        bytes_used += region.coeff_count() * 8
        caps_ok()
        for row, (kind, idx) in enumerate(region.origins):
            if kind == ORIGIN_THETA:
                continue
            neighbor = active.added(idx) if kind == "primal" else active.removed(idx)
            if neighbor.bits not in seen:
                seen.add(neighbor.bits)
                frontier.append((neighbor, region, row))
    return _finish(kept, qp, maps, log)
