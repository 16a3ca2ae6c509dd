"""Acceptance gate.

One test per top-level claim, each printing a single PASS/FAIL line (visible
with -s, or in captured output on failure). Tolerances are stated inline;
nothing here is loosened to accommodate the implementation.
"""

import os
import subprocess
import sys
import time

import numpy as np
import pytest

from mpqp.benchmarks import (monotone_problem, mpc_problem, portfolio_problem,
                             power_problem, random_qp, sample_thetas)
from mpqp.builder import _facet_center, build_explore, build_naive
from mpqp.codegen import generate
from mpqp.evaluator import Evaluator, flop_bound, median_eval_time
from mpqp.kkt import oracle_solve
from mpqp.model import save_problem
from mpqp.serialize import dumps_solution
from mpqp.tree import build_tree, linear_scan, locate


def _verdict(name: str, ok: bool, detail: str = ""):
    tail = f"  ({detail})" if detail else ""
    print(f"{'PASS' if ok else 'FAIL'}: {name}{tail}")
    assert ok, f"{name}{tail}"


def _parity(qp, ev, thetas, rtol):
    """Fraction of samples where evaluate() matches the brute-force oracle."""
    good = 0
    for theta in thetas:
        res = ev.evaluate(theta)
        ref = oracle_solve(qp, theta)
        if res.status != ref.status:
            continue
        if res.status != "optimal":
            good += 1
            continue
        scale = max(1.0, float(np.max(np.abs(ref.x))))
        if np.max(np.abs(res.x - ref.x)) <= rtol * scale:
            good += 1
    return good / len(thetas)


# ---------------------------------------------------------------------------


def test_power_management_k5_build_time_parity():
    qp, maps = power_problem()
    t0 = time.perf_counter()
    naive = build_naive(qp, maps)
    t_naive = time.perf_counter() - t0
    t0 = time.perf_counter()
    explore = build_explore(qp, maps)
    t_explore = time.perf_counter() - t0
    ev = Evaluator(solution=explore, tree=build_tree(explore))
    rate = _parity(qp, ev, sample_thetas(qp, 1000, seed=0), 1e-6)
    ok = (naive.K == 5 and explore.K == 5
          and t_naive < 5.0 and t_explore < 5.0 and rate == 1.0)
    _verdict("power management: K=5 both strategies, build <5s, "
             "1000-sample oracle parity at 1e-6",
             ok, f"K={naive.K}/{explore.K} build={t_naive:.2f}s/"
                 f"{t_explore:.2f}s parity={rate:.4f}")


def test_monotone_regression_k16_across_seeds():
    ks = []
    for seed in range(10):
        qp, maps = monotone_problem(seed=seed)
        ks.append(build_explore(qp, maps).K)
    hits = sum(1 for k in ks if k == 16)
    qp, maps = monotone_problem(seed=0)
    solution = build_explore(qp, maps)
    ev = Evaluator(solution=solution, tree=build_tree(solution))
    rate = _parity(qp, ev, sample_thetas(qp, 1000, seed=1), 1e-6)
    ok = hits >= 9 and rate == 1.0
    _verdict("monotone regression: K=16=2^m for >=9/10 seeds, "
             "oracle parity at 1e-6",
             ok, f"K counts={ks} parity={rate:.4f}")


def test_portfolio_k_bound_and_no_zero_weight_region():
    # the active set pinning w = 0 (every w_i >= 0 tight) contradicts
    # 1'w = 1, so at most 2^m - 1 = 127 regions can exist
    ks, w_zero = [], 0
    for seed in range(10):
        qp, maps = portfolio_problem(seed=seed)
        solution = build_explore(qp, maps)
        ks.append(solution.K)
        full = (1 << qp.m) - 1
        w_zero += any(r.active.bits == full for r in solution.regions)
    ok = (max(ks) <= 127 and sum(1 for k in ks if k == 127) >= 8
          and w_zero == 0)
    _verdict("portfolio: K<=127 always, K=127 for >=8/10 seeds, "
             "w=0 active set never a region",
             ok, f"K counts={ks}")


def test_mpc_k_bound_parity_coverage_continuity(mpc_built):
    solution, tree = mpc_built
    qp = solution.qp
    ev = Evaluator(solution=solution, tree=tree)

    k_ok = solution.K <= 2 ** qp.m
    rate = _parity(qp, ev, sample_thetas(qp, 1000, seed=2), 1e-6)

    # coverage: every box sample lands in a region (problem is always feasible)
    coverage_misses = sum(
        1 for theta in sample_thetas(qp, 1000, seed=3)
        if ev.evaluate(theta).status != "optimal")

    # continuity: x laws of regions meeting at a facet agree on it
    checked, worst = 0, 0.0
    for region in solution.regions:
        if checked >= 50:
            break
        for row in range(region.rows):
            if checked >= 50:
                break
            point = _facet_center(region, row)
            if point is None:
                continue
            owners = [r for r in solution.regions
                      if np.all(r.H @ point <= r.j + 1e-9)]
            if len(owners) < 2:
                continue
            outs = [r.law.x_part(r.law.eval(point)) for r in owners]
            for other in outs[1:]:
                worst = max(worst, float(np.max(np.abs(outs[0] - other))))
            checked += 1
    ok = k_ok and rate == 1.0 and coverage_misses == 0 \
        and checked >= 50 and worst <= 1e-7
    _verdict("mpc: K<=2^m, oracle parity at 1e-6, 1000-sample coverage, "
             "50-facet continuity at 1e-7",
             ok, f"K={solution.K} parity={rate:.4f} "
                 f"misses={coverage_misses} facets={checked} "
                 f"worst_jump={worst:.2e}")


def test_strategy_equivalence_on_small_problems():
    bad = []
    problems = [random_qp(seed) for seed in range(20)]
    problems += [power_problem(), monotone_problem(seed=0),
                 portfolio_problem(seed=0), mpc_problem(seed=0)]
    for idx, (qp, maps) in enumerate(problems):
        if qp.m > 12:
            continue
        a = sorted(r.active.bits for r in build_naive(qp, maps).regions)
        b = sorted(r.active.bits for r in build_explore(qp, maps).regions)
        if a != b:
            bad.append(idx)
    _verdict("strategy equivalence: explore == naive active sets on all "
             "m<=12 problems incl. 20 random QPs", not bad, f"mismatches={bad}")


@pytest.mark.parametrize("fixture", ["power_built", "monotone_built",
                                     "mpc_built", "portfolio_built"])
def test_tree_correctness_and_op_bound(fixture, request):
    solution, tree = request.getfixturevalue(fixture)
    qp = solution.qp
    ev = Evaluator(solution=solution, tree=tree)
    bound = flop_bound(solution, tree)
    thetas = sample_thetas(qp, 1000, seed=4)
    x_bad = ops_over = 0
    for theta in thetas:
        a = locate(tree, solution, theta)
        b = linear_scan(solution, theta)
        if (a is None) != (b is None):
            x_bad += 1
            continue
        if a is not None and a != b:
            la, lb = solution.regions[a].law, solution.regions[b].law
            if np.max(np.abs(la.x_part(la.eval(theta))
                             - lb.x_part(lb.eval(theta)))) > 1e-9:
                x_bad += 1
        _, ops = ev.evaluate_counted(theta)
        if ops.total > bound:
            ops_over += 1
    _verdict(f"tree correctness [{fixture[:-6]}]: locate==scan x-laws at "
             "1e-9 over 1000 samples, measured ops <= flop bound",
             x_bad == 0 and ops_over == 0,
             f"x_mismatches={x_bad} over_bound={ops_over} bound={bound}")


def test_division_freedom(power_built, mpc_built):
    div_ops = 0
    for solution, tree in (power_built, mpc_built):
        ev = Evaluator(solution=solution, tree=tree)
        for theta in sample_thetas(solution.qp, 200, seed=5):
            _, ops = ev.evaluate_counted(theta)
            div_ops += ops.divs
    slashes = []
    for solution, tree in (power_built, mpc_built):
        for precision in ("fp64", "fp32"):
            src = generate(solution, tree=tree, precision=precision)
            for name in ("cpg_solve.c", "cpg_solve.h",
                         "cpg_workspace.c", "cpg_workspace.h"):
                if "/" in src.files[name]:
                    slashes.append((precision, name))
    _verdict("division-freedom: zero divides in instrumented eval and in "
             "emitted solve-path C",
             div_ops == 0 and not slashes,
             f"div_ops={div_ops} files_with_slash={slashes}")


def test_determinism_bytes_and_sources():
    blobs, sources = [], []
    for _ in range(2):
        qp, maps = mpc_problem(seed=0)
        solution = build_explore(qp, maps)
        tree = build_tree(solution)
        blobs.append(dumps_solution(solution, tree))
        sources.append(generate(solution, tree=tree).files)
    ok = blobs[0] == blobs[1] and sources[0] == sources[1]
    _verdict("determinism: rebuild gives byte-identical container and "
             "identical generated sources", ok,
             f"container_bytes={len(blobs[0])}")


def test_size_limit_warning_and_exit_code(tmp_path, capsys):
    from mpqp.cli import main
    problem = tmp_path / "p.json"
    qp, maps = power_problem()
    save_problem(problem, qp, maps)
    os.environ["MPQP_KMAX"] = "2"
    try:
        code = main(["build", str(problem)])
    finally:
        del os.environ["MPQP_KMAX"]
    err = capsys.readouterr().err
    ok = code == 2 and "terminated with a warning" in err
    _verdict("size limit: MPQP_KMAX=2 stops the offline phase with a "
             "warning and nonzero exit", ok, f"exit={code}")


def test_online_speed_under_10us(power_built, monotone_built, mpc_built,
                                 portfolio_built):
    meds = {}
    for name, (solution, tree) in (("power", power_built),
                                   ("monotone", monotone_built),
                                   ("mpc", mpc_built),
                                   ("portfolio", portfolio_built)):
        ev = Evaluator(solution=solution, tree=tree)
        thetas = sample_thetas(solution.qp, 300, seed=6)
        best = min(median_eval_time(ev, thetas, repeats=3) for _ in range(3))
        meds[name] = best * 1e6
    ok = all(v < 10.0 for v in meds.values())
    detail = " ".join(f"{k}={v:.2f}us" for k, v in meds.items())
    _verdict("online speed: median in-process eval < 10us on all four "
             "benchmarks", ok, detail)


def test_speedup_over_oracle_100x(mpc_built):
    solution, tree = mpc_built
    qp = solution.qp
    ev = Evaluator(solution=solution, tree=tree)
    thetas = sample_thetas(qp, 40, seed=7)
    t_fast = median_eval_time(ev, thetas, repeats=3)
    oracle_times = []
    for theta in thetas:
        t0 = time.perf_counter()
        oracle_solve(qp, theta)
        oracle_times.append(time.perf_counter() - t0)
    t_slow = float(np.median(oracle_times))
    ratio = t_slow / t_fast
    _verdict("speedup: explicit eval >=100x faster than brute-force oracle",
             ratio >= 100.0,
             f"oracle={t_slow * 1e3:.2f}ms explicit={t_fast * 1e6:.2f}us "
             f"ratio={ratio:.0f}x")
