#!/usr/bin/env python3
"""Build the four benchmark problems and print a timing/size table.

Usage: python scripts/run_benchmarks.py [--samples N] [--seed S]
"""

import argparse
import time

import numpy as np

from mpqp.benchmarks import (monotone_problem, mpc_problem, portfolio_problem,
                             power_problem, sample_thetas)
from mpqp.builder import build_explore
from mpqp.evaluator import Evaluator, flop_bound, flop_bound_scan, median_eval_time
from mpqp.serialize import dumps_solution
from mpqp.tree import build_tree

FACTORIES = [
    ("power", lambda seed: power_problem()),
    ("monotone", lambda seed: monotone_problem(seed=seed)),
    ("mpc", lambda seed: mpc_problem(seed=seed)),
    ("portfolio", lambda seed: portfolio_problem(seed=seed)),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    header = (f"{'problem':<10} {'n':>3} {'m':>3} {'me':>3} {'p':>3} {'K':>4} "
              f"{'build[s]':>9} {'median[us]':>11} {'flops':>7} {'bytes':>8}")
    print(header)
    print("-" * len(header))
    for name, factory in FACTORIES:
        qp, maps = factory(args.seed)
        t0 = time.perf_counter()
        solution = build_explore(qp, maps)
        tree = build_tree(solution)
        build_s = time.perf_counter() - t0
        ev = Evaluator(solution=solution, tree=tree)
        thetas = sample_thetas(qp, args.samples, seed=args.seed)
        med = median_eval_time(ev, thetas) * 1e6
        size = len(dumps_solution(solution, tree))
        print(f"{name:<10} {qp.n:>3} {qp.m:>3} {qp.me:>3} {qp.p:>3} "
              f"{solution.K:>4} {build_s:>9.3f} {med:>11.2f} "
              f"{flop_bound(solution, tree):>7} {size:>8}")
        scan = flop_bound_scan(solution)
        if flop_bound(solution, tree) > scan:
            raise AssertionError(f"{name}: tree bound exceeds scan bound")


if __name__ == "__main__":
    main()
