"""Point-location tree: construction invariants, locate/scan equivalence,
and the spec'd example geometries."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpqp.benchmarks import clamp_problem, power_problem, sample_thetas
from mpqp.builder import build_explore
from mpqp.evaluator import flop_bound, flop_bound_scan
from mpqp.model import make_qp, make_theta_set
from mpqp.tree import build_tree, linear_scan, locate


def test_single_region_gives_single_leaf():
    # equality-pinned problem: exactly one region
    qp = make_qp(P=[[2.0]], A=[[1.0]], u=[0.0], U=[[0.0]],
                 v=[10.0], V=[[0.0]], E=[[1.0]], w=[0.0], W=[[1.0]],
                 theta_set=make_theta_set(box_lo=[-1.0], box_hi=[1.0]))
    solution = build_explore(qp)
    assert solution.K == 1
    tree = build_tree(solution)
    assert tree.depth == 0
    assert len(tree.leaves) == 1 and tree.leaves[0].tolist() == [0]


def test_clamp_tree_shape_and_singleton_leaves(clamp_built):
    solution, _ = clamp_built
    tree = build_tree(solution, leaf_cap=1)
    assert tree.depth <= 2
    for theta in (-1.0, 0.5, 2.0):
        t = np.array([theta])
        i = 0
        while tree.leaf_id[i] < 0:
            s = tree.normals[i] @ t - tree.offsets[i]
            i = tree.high[i] if s > 0 else tree.low[i]
        assert len(tree.leaves[tree.leaf_id[i]]) == 1


def test_clamp_locate_boundary_still_continuous(clamp_built):
    solution, _ = clamp_built
    tree = build_tree(solution, leaf_cap=1)
    k = locate(tree, solution, np.array([1.0]))
    law = solution.regions[k].law
    x = law.x_part(law.eval(np.array([1.0])))
    assert x == pytest.approx([1.0], abs=1e-12)


def test_power_tree_obeys_caps():
    qp, maps = power_problem()
    solution = build_explore(qp, maps)
    tree = build_tree(solution, leaf_cap=2)
    assert tree.depth <= 4
    assert max(len(leaf) for leaf in tree.leaves) <= 2


def test_every_region_appears_in_some_leaf(mpc_built):
    solution, tree = mpc_built
    seen = set()
    for leaf in tree.leaves:
        seen.update(int(i) for i in leaf)
    assert seen == set(range(solution.K))


def test_leaves_are_sorted(mpc_built):
    _, tree = mpc_built
    for leaf in tree.leaves:
        assert list(leaf) == sorted(leaf)


def test_no_repeated_plane_on_any_root_path(mpc_built):
    # planes may repeat across branches, never along one descent
    _, tree = mpc_built

    def walk(i, path):
        if tree.leaf_id[i] >= 0:
            return
        row = (tuple(tree.normals[i]), float(tree.offsets[i]))
        assert row not in path
        walk(tree.low[i], path | {row})
        walk(tree.high[i], path | {row})

    walk(0, set())


@pytest.mark.parametrize("fixture", ["power_built", "monotone_built",
                                     "mpc_built", "portfolio_built"])
def test_locate_agrees_with_scan(fixture, request):
    solution, tree = request.getfixturevalue(fixture)
    qp = solution.qp
    thetas = sample_thetas(qp, 400, seed=2)
    for theta in thetas:
        a = locate(tree, solution, theta)
        b = linear_scan(solution, theta)
        assert (a is None) == (b is None)
        if a is None or a == b:
            continue
        # boundary tie: laws must agree at theta
        la, lb = solution.regions[a].law, solution.regions[b].law
        assert np.allclose(la.x_part(la.eval(theta)),
                           lb.x_part(lb.eval(theta)), atol=1e-9)


def test_locate_returns_none_outside(clamp_built):
    solution, tree = clamp_built
    assert locate(tree, solution, np.array([9.0])) is None
    assert linear_scan(solution, np.array([9.0])) is None


def test_infeasible_region_gap():
    # x <= theta and x >= 2 theta + 1 cross once theta > -1: a hole in the map
    qp = make_qp(P=[[2.0]], A=[[1.0], [-1.0]], u=[0.0], U=[[0.0]],
                 v=[0.0, -1.0], V=[[1.0], [-2.0]],
                 theta_set=make_theta_set(box_lo=[-3.0], box_hi=[3.0]))
    solution = build_explore(qp)
    tree = build_tree(solution)
    assert locate(tree, solution, np.array([1.0])) is None
    assert locate(tree, solution, np.array([-2.0])) is not None


@pytest.mark.parametrize("fixture", ["clamp_built", "power_built",
                                     "monotone_built", "mpc_built",
                                     "portfolio_built"])
def test_tree_never_costs_more_than_scan(fixture, request):
    solution, tree = request.getfixturevalue(fixture)
    assert flop_bound(solution, tree) <= flop_bound_scan(solution)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_locate_scan_equivalence_on_clamp(seed):
    qp, maps = clamp_problem()
    solution = build_explore(qp, maps)
    tree = build_tree(solution, leaf_cap=1)
    rng = np.random.default_rng(seed)
    for theta in rng.uniform(-5, 5, size=(50, 1)):
        a, b = locate(tree, solution, theta), linear_scan(solution, theta)
        if a != b:
            la, lb = solution.regions[a].law, solution.regions[b].law
            assert np.allclose(la.x_part(la.eval(theta)),
                               lb.x_part(lb.eval(theta)), atol=1e-12)
