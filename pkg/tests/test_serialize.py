"""Persistence: JSON and binary containers, byte determinism, hashes."""

import numpy as np
import pytest

from mpqp.benchmarks import hello_world_problem, power_problem
from mpqp.builder import build_explore
from mpqp.serialize import (dumps_solution, loads_solution, problem_hash,
                            solution_from_dict, solution_to_dict)
from mpqp.tree import build_tree


def _regions_equal(a, b):
    assert len(a) == len(b)
    for ra, rb in zip(a, b):
        assert ra.active.bits == rb.active.bits
        assert np.array_equal(ra.law.F, rb.law.F)
        assert np.array_equal(ra.law.g, rb.law.g)
        assert np.array_equal(ra.H, rb.H)
        assert np.array_equal(ra.j, rb.j)
        assert ra.origins == rb.origins
        assert np.array_equal(ra.cheb_point, rb.cheb_point)
        assert ra.cheb_radius == rb.cheb_radius


def _trees_equal(a, b):
    assert np.array_equal(a.normals, b.normals)
    assert np.array_equal(a.offsets, b.offsets)
    assert np.array_equal(a.low, b.low) and np.array_equal(a.high, b.high)
    assert np.array_equal(a.leaf_id, b.leaf_id)
    assert len(a.leaves) == len(b.leaves)
    for la, lb in zip(a.leaves, b.leaves):
        assert np.array_equal(la, lb)
    assert a.depth == b.depth


def test_binary_round_trip(power_built):
    solution, tree = power_built
    blob = dumps_solution(solution, tree)
    sol2, tree2 = loads_solution(blob)
    _regions_equal(solution.regions, sol2.regions)
    _trees_equal(tree, tree2)
    assert sol2.build_log.strategy == solution.build_log.strategy
    assert sol2.maps.param_names == solution.maps.param_names


def test_binary_round_trip_without_tree(hello_built):
    solution, _ = hello_built
    sol2, tree2 = loads_solution(dumps_solution(solution))
    assert tree2 is None
    _regions_equal(solution.regions, sol2.regions)


def test_json_round_trip(power_built):
    solution, tree = power_built
    sol2, tree2 = solution_from_dict(solution_to_dict(solution, tree))
    _regions_equal(solution.regions, sol2.regions)
    _trees_equal(tree, tree2)


def test_rebuild_gives_byte_identical_container():
    blobs = []
    for _ in range(2):
        qp, maps = power_problem()
        solution = build_explore(qp, maps)
        blobs.append(dumps_solution(solution, build_tree(solution)))
    assert blobs[0] == blobs[1]


def test_bad_magic_rejected():
    with pytest.raises(ValueError, match="magic"):
        loads_solution(b"NOPE" + b"\0" * 64)


def test_problem_hash_separates_problems():
    qp1, _ = power_problem()
    qp2, _ = hello_world_problem(seed=0)
    qp3, _ = power_problem()
    assert problem_hash(qp1) == problem_hash(qp3)
    assert problem_hash(qp1) != problem_hash(qp2)


def test_container_detects_truncation(power_built):
    solution, tree = power_built
    blob = dumps_solution(solution, tree)
    with pytest.raises(Exception):
        loads_solution(blob[: len(blob) // 2])
