#!/usr/bin/env python3
"""Generate, compile, and exercise the embedded C solver for one benchmark.

Usage: python scripts/emit_c_demo.py [--problem power] [--precision fp64]
                                     [--out build_c] [--rows 5]
"""

import argparse
import subprocess
from pathlib import Path

import numpy as np

from mpqp.benchmarks import (clamp_problem, monotone_problem, mpc_problem,
                             portfolio_problem, power_problem)
from mpqp.builder import build_explore
from mpqp.codegen import generate, write_files
from mpqp.evaluator import Evaluator
from mpqp.tree import build_tree

FACTORIES = {
    "clamp": lambda: clamp_problem(),
    "power": lambda: power_problem(),
    "monotone": lambda: monotone_problem(seed=0),
    "mpc": lambda: mpc_problem(seed=0),
    "portfolio": lambda: portfolio_problem(seed=0),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--problem", choices=sorted(FACTORIES), default="power")
    ap.add_argument("--precision", choices=("fp64", "fp32"), default="fp64")
    ap.add_argument("--out", default="build_c")
    ap.add_argument("--rows", type=int, default=5)
    args = ap.parse_args()

    qp, maps = FACTORIES[args.problem]()
    solution = build_explore(qp, maps)
    tree = build_tree(solution)
    source = generate(solution, tree=tree, precision=args.precision)
    out = Path(args.out)
    write_files(source, out)
    print(f"emitted {len(source.files)} files to {out}")

    compile_cmd = source.meta["compile"]
    print("compiling:", " ".join(compile_cmd))
    subprocess.run(compile_cmd, cwd=out, check=True)

    rng = np.random.default_rng(0)
    lo = np.where(np.isfinite(qp.theta_set.box_lo), qp.theta_set.box_lo, -1.0)
    hi = np.where(np.isfinite(qp.theta_set.box_hi), qp.theta_set.box_hi, 1.0)
    thetas = rng.uniform(lo, hi, size=(args.rows, maps.p_user))
    feed = "\n".join(" ".join(f"{v:.17g}" for v in row) for row in thetas)
    run = subprocess.run([str(out / "explicit_demo")], input=feed + "\n",
                         capture_output=True, text=True, check=True)

    ev = Evaluator(solution=solution, tree=tree)
    print(f"\n{'theta[0]':>12} {'C x[0]':>18} {'python x[0]':>18} {'diff':>9}")
    for row, line in zip(thetas, run.stdout.strip().split("\n")):
        vals = [float(v) for v in line.split()]
        ref = ev.eval_user(row)
        if vals[0] != 0.0 or ref.status != "optimal":
            print(f"{row[0]:>12.5f} {'infeasible':>18} {ref.status:>18}")
            continue
        diff = abs(vals[1] - ref.x[0])
        print(f"{row[0]:>12.5f} {vals[1]:>18.12f} {ref.x[0]:>18.12f} "
              f"{diff:>9.2e}")


if __name__ == "__main__":
    main()
