"""KKT solves and the brute-force oracle.

The affine law is cross-checked against a from-scratch KKT matrix assembled
here and solved with numpy — an independent route through different code.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpqp.benchmarks import random_qp
from mpqp.errors import LicqFailure
from mpqp.kkt import (ActiveSet, affine_law, check_kkt, oracle_solve,
                      region_ineq, scatter_duals)
from mpqp.model import instantiate, make_qp, make_theta_set


@given(st.integers(1, 24), st.integers(0, 2**20 - 1))
@settings(max_examples=60, deadline=None)
def test_active_set_bits_indices_round_trip(m, bits):
    bits &= (1 << m) - 1
    a = ActiveSet(m, bits)
    assert ActiveSet.from_indices(m, a.indices).bits == bits
    assert a.size == bin(bits).count("1")
    for i in range(m):
        assert a.contains(i) == bool(bits >> i & 1)


def test_active_set_add_remove():
    a = ActiveSet(4, 0b0101)
    assert a.added(1).bits == 0b0111
    assert a.removed(2).bits == 0b0001
    with pytest.raises(ValueError):
        ActiveSet.from_indices(3, [3])


def _kkt_direct(qp, active, theta):
    """Equality-constrained solve via one dense numpy system."""
    inst = instantiate(qp, theta)
    idx = list(active.indices)
    C = np.vstack([qp.E, qp.A[idx]])
    d = np.concatenate([inst.f, inst.b[idx]])
    na = C.shape[0]
    KKT = np.block([[qp.P, C.T], [C, np.zeros((na, na))]])
    sol = np.linalg.solve(KKT, np.concatenate([-inst.q, d]))
    x, mult = sol[:qp.n], sol[qp.n:]
    return x, mult[:qp.me], mult[qp.me:]


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_affine_law_matches_direct_kkt(seed):
    qp, _ = random_qp(seed)
    rng = np.random.default_rng(seed + 7)
    bits = int(rng.integers(0, 1 << min(qp.m, qp.n)))
    active = ActiveSet(qp.m, bits)
    try:
        law = affine_law(qp, active)
    except LicqFailure:
        return
    for theta in rng.standard_normal((3, qp.p)):
        z = law.eval(theta)
        x, nu, lam = _kkt_direct(qp, active, theta)
        assert np.allclose(law.x_part(z), x, atol=1e-8)
        assert np.allclose(law.nu_part(z), nu, atol=1e-8)
        assert np.allclose(law.lam_part(z), lam, atol=1e-8)


def test_affine_law_rejects_dependent_rows():
    # duplicated constraint row: activating both breaks LICQ
    qp = make_qp(P=[[1.0]], A=[[1.0], [1.0]], u=[0.0], U=[[1.0]],
                 v=[1.0, 1.0], V=[[0.0], [0.0]],
                 theta_set=make_theta_set(box_lo=[-1.0], box_hi=[1.0]))
    with pytest.raises(LicqFailure):
        affine_law(qp, ActiveSet(2, 0b11))


def test_region_rows_have_provenance():
    qp, _ = random_qp(11)
    law = affine_law(qp, ActiveSet(qp.m, 0))
    reg = region_ineq(qp, law)
    assert reg.H.shape[0] == reg.j.size == len(reg.origins)
    kinds = {kind for kind, _ in reg.origins}
    assert kinds <= {"primal", "dual", "theta"}


def test_scatter_duals_places_values():
    lam = scatter_duals(5, ActiveSet.from_indices(5, [1, 4]),
                        np.array([2.0, 3.0]))
    assert np.array_equal(lam, [0.0, 2.0, 0.0, 0.0, 3.0])


def _clamp_qp():
    # min (x - theta)^2 s.t. 0 <= x <= 1: optimum is the clamp of theta
    return make_qp(P=[[2.0]], A=[[1.0], [-1.0]], u=[0.0], U=[[-2.0]],
                   v=[1.0, 0.0], V=[[0.0], [0.0]],
                   theta_set=make_theta_set(box_lo=[-5.0], box_hi=[5.0]))


@pytest.mark.parametrize("theta,want", [(-2.0, 0.0), (0.25, 0.25), (3.0, 1.0)])
def test_oracle_matches_analytic_clamp(theta, want):
    res = oracle_solve(_clamp_qp(), np.array([theta]))
    assert res.status == "optimal"
    assert res.x[0] == pytest.approx(want, abs=1e-10)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_oracle_output_passes_kkt_check(seed):
    qp, _ = random_qp(seed)
    rng = np.random.default_rng(seed + 13)
    lo = np.where(np.isfinite(qp.theta_set.box_lo), qp.theta_set.box_lo, -1.0)
    hi = np.where(np.isfinite(qp.theta_set.box_hi), qp.theta_set.box_hi, 1.0)
    theta = rng.uniform(lo, hi)
    res = oracle_solve(qp, theta)
    if res.status != "optimal":
        return
    assert check_kkt(qp, theta, res.x, res.lam, res.nu).ok


def test_oracle_reports_infeasible():
    # x <= theta and x >= theta + 1 cross for every theta
    qp = make_qp(P=[[2.0]], A=[[1.0], [-1.0]], u=[0.0], U=[[0.0]],
                 v=[0.0, -1.0], V=[[1.0], [-1.0]],
                 theta_set=make_theta_set(box_lo=[-1.0], box_hi=[1.0]))
    assert oracle_solve(qp, np.array([0.0])).status == "infeasible"


def test_check_kkt_spots_each_violation():
    qp = _clamp_qp()
    theta = np.array([0.25])
    # wrong primal point: stationarity violated
    rep = check_kkt(qp, theta, np.array([0.9]), np.zeros(2))
    assert not rep.ok and rep.stationarity > 0.1
    # negative multiplier flagged
    rep = check_kkt(qp, theta, np.array([0.25]), np.array([-1.0, 0.0]))
    assert rep.dual_sign == pytest.approx(1.0)
