"""Command-line front end.

Subcommands: validate, build, eval, codegen, bench. Exit codes are stable:
0 success, 1 bad input (validation failure, malformed theta row, unreadable
file), 2 size limit hit during the offline phase. With --json each command
prints exactly one JSON object on stdout; diagnostics go to stderr.

The MPQP_KMAX environment variable overrides the offline region cap for
build and bench.
"""

from __future__ import annotations

import argparse
import json
import os
import struct
import sys
import time

import numpy as np

from .benchmarks import (clamp_problem, hello_world_problem, monotone_problem,
                         mpc_problem, portfolio_problem, power_problem,
                         sample_thetas)
from .builder import K_MAX, build_explore, build_naive
from .codegen import generate, write_files
from .errors import OracleError, SizeLimit
from .evaluator import Evaluator, flop_bound, flop_bound_scan, median_eval_time
from .kkt import oracle_solve
from .model import load_problem, save_problem, validate
from .serialize import dumps_solution, load_solution, save_solution
from .tree import build_tree

PROBLEMS = {
    "clamp": lambda seed: clamp_problem(),
    "hello": lambda seed: hello_world_problem(seed=seed),
    "monotone": lambda seed: monotone_problem(seed=seed),
    "power": lambda seed: power_problem(),
    "mpc": lambda seed: mpc_problem(seed=seed),
    "portfolio": lambda seed: portfolio_problem(seed=seed),
}


def _kmax() -> int:
    raw = os.environ.get("MPQP_KMAX", "")
    return int(raw) if raw else K_MAX


def _emit(args, payload: dict, plain_lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        for line in plain_lines:
            print(line)


def _load_problem_file(path):
    try:
        return load_problem(path)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: cannot read problem file {path}: {exc}", file=sys.stderr)
        raise SystemExit(1)


def _load_solution_file(path):
    try:
        return load_solution(path)
    except (OSError, ValueError, KeyError, struct.error) as exc:
        print(f"error: cannot read solution file {path}: {exc}", file=sys.stderr)
        raise SystemExit(1)


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    qp, _ = _load_problem_file(args.problem)
    report = validate(qp)
    _emit(args, {"ok": report.ok, "violations": list(report.violations)},
          [f"ok: {report.ok}"] + [f"violation: {v}" for v in report.violations])
    return 0 if report.ok else 1


def cmd_build(args) -> int:
    qp, maps = _load_problem_file(args.problem)
    report = validate(qp)
    if not report.ok:
        for v in report.violations:
            print(f"validation: {v}", file=sys.stderr)
        return 1
    builder = build_naive if args.strategy == "naive" else build_explore
    t0 = time.perf_counter()
    try:
        solution = builder(qp, maps, k_max=_kmax())
    except SizeLimit as exc:
        print(f"warning: {exc}", file=sys.stderr)
        return 2
    tree = build_tree(solution, leaf_cap=args.leaf_cap)
    dt = time.perf_counter() - t0
    if args.out:
        save_solution(args.out, solution, tree)
    log = solution.build_log
    _emit(args,
          {"K": solution.K, "build_seconds": dt, "out": args.out,
           "strategy": log.strategy, "examined": log.examined,
           "tree_depth": tree.depth, "flop_bound": flop_bound(solution, tree)},
          [f"K = {solution.K}",
           f"strategy = {log.strategy}  examined = {log.examined}  "
           f"kept = {log.kept}  probes = {log.probes}",
           f"skipped: cardinality={log.skipped_cardinality} "
           f"licq={log.skipped_licq} empty={log.skipped_empty} "
           f"lowdim={log.skipped_lowdim}",
           f"tree depth = {tree.depth}  flop bound = {flop_bound(solution, tree)}",
           f"build time = {dt:.3f}s" + (f"  wrote {args.out}" if args.out else "")])
    return 0


def _theta_rows(args, p_user: int) -> np.ndarray:
    if args.file:
        try:
            rows = np.loadtxt(args.file, ndmin=2)
        except (OSError, ValueError) as exc:
            print(f"error: cannot read theta file: {exc}", file=sys.stderr)
            raise SystemExit(1)
    elif args.theta:
        try:
            vals = np.array([float(v) for v in args.theta])
        except ValueError as exc:
            print(f"error: bad theta value: {exc}", file=sys.stderr)
            raise SystemExit(1)
        if vals.size % p_user:
            print(f"error: expected multiples of {p_user} values, got {vals.size}",
                  file=sys.stderr)
            raise SystemExit(1)
        rows = vals.reshape(-1, p_user)
    else:
        print("error: provide theta values or --file", file=sys.stderr)
        raise SystemExit(1)
    if rows.shape[1] != p_user:
        print(f"error: theta rows have {rows.shape[1]} entries, expected {p_user}",
              file=sys.stderr)
        raise SystemExit(1)
    return rows


def cmd_eval(args) -> int:
    solution, tree = _load_solution_file(args.solution)
    ev = Evaluator(solution=solution, tree=tree)
    rows = _theta_rows(args, solution.maps.p_user)
    records = []
    lines = []
    for row in rows:
        res = ev.eval_user(row)
        if res.status != "optimal":
            records.append({"status": res.status, "region": -1})
            lines.append("infeasible")
            continue
        records.append({"status": res.status, "region": res.region,
                        "x": res.x.tolist(), "duals": res.lam.tolist(),
                        "objective": res.objective})
        lines.append("optimal " + str(res.region) + " "
                     + " ".join(f"{v:.17g}" for v in res.x)
                     + f"  obj {res.objective:.17g}")
    _emit(args, {"results": records}, lines)
    return 0


def cmd_codegen(args) -> int:
    solution, tree = _load_solution_file(args.solution)
    try:
        source = generate(solution, tree=tree, precision=args.precision)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out_dir = args.out or "."
    write_files(source, out_dir)
    sources = sorted(n for n in source.files if n != "cpg_manifest.json")
    _emit(args,
          {"files": sources, "manifest": "cpg_manifest.json", "out": out_dir,
           "precision": source.precision,
           "flop_bound": source.meta["flop_bound"],
           "coefficient_count": source.meta["coefficient_count"]},
          [f"wrote {len(sources)} source files and the manifest to {out_dir}:"]
          + [f"  {name}" for name in sources + ["cpg_manifest.json"]])
    return 0


def cmd_bench(args) -> int:
    if args.name not in PROBLEMS:
        print(f"error: unknown problem {args.name!r} "
              f"(choose from {', '.join(sorted(PROBLEMS))})", file=sys.stderr)
        return 1
    qp, maps = PROBLEMS[args.name](args.seed)
    if args.write_problem:
        save_problem(args.write_problem, qp, maps)
    builder = build_naive if args.strategy == "naive" else build_explore
    t0 = time.perf_counter()
    try:
        solution = builder(qp, maps, k_max=_kmax())
    except SizeLimit as exc:
        print(f"warning: {exc}", file=sys.stderr)
        return 2
    tree = build_tree(solution)
    build_s = time.perf_counter() - t0
    ev = Evaluator(solution=solution, tree=tree)

    thetas = sample_thetas(qp, args.samples, seed=args.seed)
    med = median_eval_time(ev, thetas)
    times = []
    for th in thetas:
        t1 = time.perf_counter()
        ev.evaluate(th)
        times.append(time.perf_counter() - t1)
    mean = float(np.mean(times))

    agree = 0
    for th in thetas:
        res = ev.evaluate(th)
        try:
            ref = oracle_solve(qp, th)
        except OracleError:
            continue
        if res.status != ref.status:
            continue
        if res.status != "optimal" or np.max(np.abs(res.x - ref.x)) <= 1e-6:
            agree += 1
    rate = agree / len(thetas)

    blob = dumps_solution(solution, tree)
    report = {"problem": args.name, "n": qp.n, "m": qp.m, "me": qp.me,
              "p": qp.p, "K": solution.K, "build_seconds": build_s,
              "median_eval_seconds": med, "mean_eval_seconds": mean,
              "flop_bound": flop_bound(solution, tree),
              "flop_bound_scan": flop_bound_scan(solution),
              "serialized_bytes": len(blob), "oracle_parity": rate}
    _emit(args, report,
          [f"{args.name}: n={qp.n} m={qp.m} me={qp.me} p={qp.p} K={solution.K}",
           f"build {build_s:.3f}s  eval median {med * 1e6:.2f}us "
           f"mean {mean * 1e6:.2f}us",
           f"flop bound {report['flop_bound']} (scan {report['flop_bound_scan']})  "
           f"size {len(blob)} bytes",
           f"oracle parity {100 * rate:.1f}%"])
    return 0


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mpqp",
                                 description="explicit multiparametric QP toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a problem file")
    v.add_argument("problem")
    v.add_argument("--json", action="store_true")
    v.set_defaults(fn=cmd_validate)

    b = sub.add_parser("build", help="enumerate critical regions and save")
    b.add_argument("problem")
    b.add_argument("--strategy", choices=("naive", "explore"), default="explore")
    b.add_argument("--out", default="")
    b.add_argument("--leaf-cap", type=int, default=4)
    b.add_argument("--json", action="store_true")
    b.set_defaults(fn=cmd_build)

    e = sub.add_parser("eval", help="evaluate saved solution at theta rows")
    e.add_argument("solution")
    e.add_argument("theta", nargs="*")
    e.add_argument("--file", default="")
    e.add_argument("--json", action="store_true")
    e.set_defaults(fn=cmd_eval)

    c = sub.add_parser("codegen", help="emit embedded C sources")
    c.add_argument("solution")
    c.add_argument("--out", default="")
    c.add_argument("--precision", choices=("fp64", "fp32"), default="fp64")
    c.add_argument("--json", action="store_true")
    c.set_defaults(fn=cmd_codegen)

    n = sub.add_parser("bench", help="build and profile a named problem")
    n.add_argument("name")
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--samples", type=int, default=200)
    n.add_argument("--strategy", choices=("naive", "explore"), default="explore")
    n.add_argument("--write-problem", default="")
    n.add_argument("--json", action="store_true")
    n.set_defaults(fn=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
