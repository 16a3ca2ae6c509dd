#!/usr/bin/env python3
"""Region counts across seeds for the randomized benchmarks.

Usage: python scripts/seed_sweep.py [--seeds 10]
"""

import argparse
from collections import Counter

from mpqp.benchmarks import monotone_problem, mpc_problem, portfolio_problem
from mpqp.builder import build_explore


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    for name, factory, note in (
            ("monotone", monotone_problem, "max 2^m = 16"),
            ("portfolio", portfolio_problem, "max 2^m - 1 = 127"),
            ("mpc", mpc_problem, "bound 2^m = 1024")):
        counts = Counter()
        for seed in range(args.seeds):
            qp, maps = factory(seed=seed)
            counts[build_explore(qp, maps).K] += 1
        dist = ", ".join(f"K={k}: {c}" for k, c in sorted(counts.items()))
        print(f"{name:<10} ({note:<18}) {dist}")


if __name__ == "__main__":
    main()
