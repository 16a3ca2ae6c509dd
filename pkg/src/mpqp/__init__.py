"""Explicit multiparametric QP toolkit.

Offline: enumerate the critical regions of a strictly convex QP whose linear
cost and constraint offsets are affine in a parameter vector, yielding a
piecewise-affine solution map. Online: locate the region containing a query
parameter (binary search tree or linear scan) and read the solution off an
affine law — no divisions, deterministic, suitable for embedded targets via
the C code generator.
"""

from .builder import BuildLog, CriticalRegion, ExplicitSolution, build_explore, build_naive
from .codegen import GeneratedSource, emit_manifest, generate, write_files
from .errors import (EmptySolution, LicqFailure, NameCollision, OracleError,
                     SizeLimit, UnsupportedName)
from .evaluator import (Evaluator, SolveResult, flop_bound, flop_bound_scan,
                        median_eval_time)
from .kkt import oracle_solve
from .model import (ParamPolyhedron, ParametricQP, UserMaps, identity_maps,
                    load_problem, make_qp, make_theta_set, save_problem,
                    validate)
from .serialize import (dumps_solution, load_solution, loads_solution,
                        save_solution)
from .tree import SearchTree, build_tree

__all__ = [
    "BuildLog", "CriticalRegion", "EmptySolution", "Evaluator",
    "ExplicitSolution", "GeneratedSource", "LicqFailure", "NameCollision",
    "OracleError", "ParamPolyhedron", "ParametricQP", "SearchTree", "SizeLimit",
    "SolveResult", "UnsupportedName", "UserMaps", "build_explore",
    "build_naive", "build_tree", "dumps_solution", "emit_manifest",
    "flop_bound", "flop_bound_scan", "generate", "identity_maps",
    "make_qp", "make_theta_set",
    "load_problem", "load_solution", "loads_solution", "median_eval_time",
    "oracle_solve", "save_problem", "save_solution", "validate",
    "write_files",
]

__version__ = "0.1.0"
