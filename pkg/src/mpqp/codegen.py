"""Standalone C emission for an explicit solution.

The emitted solver is library-free (no includes outside the generated
headers), allocation-free (static workspace only), and division-free (the
only arithmetic is add, subtract, multiply, compare). Coefficient tables are
stored in `cpg_float` (double for fp64, float for fp32); all accumulation
happens in double either way. Generation is a pure function of the solution:
the same input yields byte-identical files.

Emitted API (prefix defaults to ``cpg_``):
    <prefix>update_<param>(idx, val)   clamp + store one parameter entry
    <prefix>solve()                    returns 0 (optimal) or 1 (infeasible)
    <prefix>objective()                objective at the last solve, on demand
    CPG_Prim_t, CPG_Dual_t, CPG_Result_t, global CPG_Result
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .builder import ExplicitSolution
from .errors import NameCollision, UnsupportedName
from .evaluator import _objective_quad, flop_bound, flop_bound_scan
from .tree import MEMBER_SLACK, SearchTree

BIG_BOUND = 1e300          # stands in for an infinite clamp bound
C_KEYWORDS = frozenset("""
auto break case char const continue default do double else enum extern float
for goto if inline int long register restrict return short signed sizeof
static struct switch typedef union unsigned void volatile while
""".split())

FILE_ORDER = ("cpg_workspace.h", "cpg_workspace.c", "cpg_solve.h",
              "cpg_solve.c", "example_main.c", "cpg_manifest.json")

CC_INVOCATION = ("cc", "-O2", "-Wall", "-Wextra", "-Werror", "-o",
                 "explicit_demo", "cpg_workspace.c", "cpg_solve.c",
                 "example_main.c")


@dataclass(eq=False)
class GeneratedSource:
    """Named text blobs plus the metadata the manifest reports."""

    files: dict[str, str]
    precision: str
    api_names: dict[str, str]
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Names


def sanitize_identifier(name: str) -> str:
    """Non-alphanumeric characters become underscores; a leading digit gets
    an underscore prefix; C keywords get an underscore suffix."""
    out = "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in str(name))
    if not out.strip("_"):
        raise UnsupportedName(f"no usable characters in name {name!r}")
    if out[0].isdigit():
        out = "_" + out
    if out in C_KEYWORDS:
        out = out + "_"
    return out


def _runs(names) -> list[tuple[str, int, int]]:
    """Consecutive equal labels collapse into (label, start, length) runs."""
    runs = []
    for i, name in enumerate(names):
        if runs and runs[-1][0] == name:
            label, start, count = runs[-1]
            runs[-1] = (label, start, count + 1)
        else:
            runs.append((name, i, 1))
    return runs


def _unique_fields(runs) -> list[tuple[str, str, int, int]]:
    """Sanitized, collision-suffixed field names per run:
    (field, original, start, length). A label reappearing in a *separate*
    run is ambiguous and rejected."""
    seen_labels = set()
    used = set()
    out = []
    for label, start, count in runs:
        if label in seen_labels:
            raise NameCollision(f"label {label!r} appears in separate runs")
        seen_labels.add(label)
        base = sanitize_identifier(label)
        cand = base
        suffix = 2
        while cand in used:
            cand = f"{base}_{suffix}"
            suffix += 1
        used.add(cand)
        out.append((cand, label, start, count))
    return out


# ---------------------------------------------------------------------------
# Literals and tables


def _lit(x: float, fp32: bool) -> str:
    if fp32:
        v = float(np.clip(np.float32(x), np.float32(-3.4e38), np.float32(3.4e38)))
        s = f"{v:.9g}"
        if "." not in s and "e" not in s:   # "1" -> "1.0" so the f suffix parses
            s += ".0"
        return s + "f"
    s = f"{float(x):.17g}"
    if "." not in s and "e" not in s:
        s += ".0"
    return s


def _dlit(x: float) -> str:
    s = f"{float(x):.17g}"
    if "." not in s and "e" not in s:
        s += ".0"
    return s


def _table(name: str, ctype: str, values, fmt) -> str:
    vals = list(values)
    if not vals:                 # zero-length arrays are not valid C
        vals = [0]
    body = [fmt(v) for v in vals]
    lines = [f"static const {ctype} {name}[{len(vals)}] = {{"]
    for i in range(0, len(body), 8):
        lines.append("  " + ", ".join(body[i:i + 8]) + ",")
    lines[-1] = lines[-1][:-1]
    lines.append("};")
    return "\n".join(lines)


def _shared_table(name: str, ctype: str, values, fmt) -> str:
    """Like _table but with external linkage (defined once, used elsewhere)."""
    out = _table(name, ctype, values, fmt)
    return out[len("static "):]


# ---------------------------------------------------------------------------
# Clamp-bound derivation


def _is_monomial(C: np.ndarray) -> bool:
    row_ok = (np.count_nonzero(C, axis=1) <= 1).all()
    col_ok = (np.count_nonzero(C, axis=0) <= 1).all()
    return bool(row_ok and col_ok)


def _user_bounds(solution: ExplicitSolution):
    """Pull the canonical clamp box back through theta = C u + c when C is a
    generalized permutation. Returns (ulo, uhi) or None when the map mixes
    coordinates (the generated solve then clamps canonically instead)."""
    maps = solution.maps
    C, c = maps.C, maps.c
    if not _is_monomial(C):
        return None
    lo = solution.qp.theta_set.box_lo
    hi = solution.qp.theta_set.box_hi
    p_user = maps.p_user
    ulo = np.full(p_user, -np.inf)
    uhi = np.full(p_user, np.inf)
    rows, cols = np.nonzero(C)
    for i, j in zip(rows.tolist(), cols.tolist()):
        a = float(lo[i] - c[i]) / C[i, j] if np.isfinite(lo[i]) else None
        b = float(hi[i] - c[i]) / C[i, j] if np.isfinite(hi[i]) else None
        if C[i, j] < 0:
            a, b = b, a
        if a is not None:
            ulo[j] = max(ulo[j], a)
        if b is not None:
            uhi[j] = min(uhi[j], b)
    return ulo, uhi


# ---------------------------------------------------------------------------
# Flattened solution data


def _flatten(solution: ExplicitSolution, tree: SearchTree | None):
    qp = solution.qp
    p = qp.p
    F_rows, F_start = [], [0]
    H_rows, H_start = [], [0]
    act, act_start = [], [0]
    obj_rows = []
    for region in solution.regions:
        law = region.law
        for r in range(law.F.shape[0]):
            F_rows.extend(law.F[r].tolist())
            F_rows.append(float(law.g[r]))
        F_start.append(F_start[-1] + law.F.shape[0])
        for r in range(region.rows):
            H_rows.extend(region.H[r].tolist())
            H_rows.append(-(float(region.j[r]) + MEMBER_SLACK))
        H_start.append(H_start[-1] + region.rows)
        idx = list(region.active.indices)
        act.extend(int(i) for i in idx)
        act_start.append(act_start[-1] + len(idx))
        M = _objective_quad(qp, law)
        obj_rows.extend(M.reshape(-1).tolist())
    data = {"F": F_rows, "F_start": F_start, "H": H_rows, "H_start": H_start,
            "act": act, "act_start": act_start, "obj": obj_rows}
    if tree is not None:
        N_rows = []
        for i in range(tree.n_nodes):
            N_rows.extend(tree.normals[i].tolist())
            N_rows.append(-float(tree.offsets[i]))
        leaf_reg, leaf_start = [], [0]
        for leaf in tree.leaves:
            leaf_reg.extend(int(k) for k in leaf)
            leaf_start.append(leaf_start[-1] + len(leaf))
        data.update({"tree_N": N_rows,
                     "tree_low": tree.low.tolist(),
                     "tree_high": tree.high.tolist(),
                     "tree_leaf": tree.leaf_id.tolist(),
                     "leaf_reg": leaf_reg, "leaf_start": leaf_start})
    return data


# ---------------------------------------------------------------------------
# File emission


def generate(solution: ExplicitSolution, tree: SearchTree | None = None,
             precision: str = "fp64", prefix: str = "cpg_") -> GeneratedSource:
    """Emit the C sources, driver, and manifest for one solution."""
    if precision not in ("fp32", "fp64"):
        raise ValueError(f"precision must be fp32 or fp64, got {precision!r}")
    fp32 = precision == "fp32"
    pre = sanitize_identifier(prefix) if prefix else "cpg_"
    qp = solution.qp
    maps = solution.maps
    p, n, m, me = qp.p, qp.n, qp.m, qp.me
    pu, nu_ = maps.p_user, maps.n_user
    K = solution.K
    P1 = p + 1

    param_fields = _unique_fields(_runs(maps.param_names))
    prim_fields = _unique_fields(_runs(maps.var_names))
    dual_fields = _unique_fields(_runs(maps.dual_names))
    data = _flatten(solution, tree)
    bounds = _user_bounds(solution)
    def flt(x):
        return _lit(x, fp32)

    zmax = max((r.law.rows for r in solution.regions), default=1)
    zf_len = n + m + me

    api = {"solve": f"{pre}solve", "objective": f"{pre}objective"}
    for fname, label, start, count in param_fields:
        api[f"update {label}"] = f"{pre}update_{fname}"

    # ---- cpg_workspace.h --------------------------------------------------
    h = []
    h.append("#ifndef CPG_WORKSPACE_H")
    h.append("#define CPG_WORKSPACE_H")
    h.append("")
    h.append("typedef int cpg_int;")
    h.append(f"typedef {'float' if fp32 else 'double'} cpg_float;")
    h.append("")
    h.append("typedef struct {")
    for fname, _label, _start, count in prim_fields:
        h.append(f"  cpg_float {'*' if count > 1 else ' '}{fname};")
    h.append("} CPG_Prim_t;")
    h.append("")
    h.append("typedef struct {")
    if dual_fields:
        for fname, _label, _start, count in dual_fields:
            h.append(f"  cpg_float {'*' if count > 1 else ' '}{fname};")
    else:
        h.append("  cpg_float reserved;")
    h.append("} CPG_Dual_t;")
    h.append("")
    h.append("typedef struct {")
    h.append("  CPG_Prim_t *prim;")
    h.append("  CPG_Dual_t *dual;")
    h.append("} CPG_Result_t;")
    h.append("")
    h.append("extern CPG_Prim_t CPG_Prim;")
    h.append("extern CPG_Dual_t CPG_Dual;")
    h.append("extern CPG_Result_t CPG_Result;")
    h.append("")
    h.append(f"extern double {pre}theta_user[{max(pu, 1)}];")
    h.append(f"extern double {pre}th[{P1}];")
    h.append(f"extern cpg_int {pre}active_region;")
    h.append("")
    h.append("#endif")
    h.append("")
    workspace_h = "\n".join(h)

    # ---- cpg_workspace.c --------------------------------------------------
    w = []
    w.append('#include "cpg_workspace.h"')
    w.append("")
    w.append(_shared_table(f"{pre}F", "cpg_float", data["F"], flt))
    w.append(_shared_table(f"{pre}F_start", "cpg_int", data["F_start"], str))
    w.append(_shared_table(f"{pre}H", "cpg_float", data["H"], flt))
    w.append(_shared_table(f"{pre}H_start", "cpg_int", data["H_start"], str))
    w.append(_shared_table(f"{pre}act", "cpg_int", data["act"], str))
    w.append(_shared_table(f"{pre}act_start", "cpg_int", data["act_start"], str))
    w.append(_shared_table(f"{pre}obj", "cpg_float", data["obj"], flt))
    w.append(_shared_table(f"{pre}R", "cpg_float", maps.R.reshape(-1).tolist(), flt))
    w.append(_shared_table(f"{pre}r_off", "cpg_float", maps.r.tolist(), flt))
    if tree is not None:
        w.append(_shared_table(f"{pre}tree_N", "cpg_float", data["tree_N"], flt))
        w.append(_shared_table(f"{pre}tree_low", "cpg_int", data["tree_low"], str))
        w.append(_shared_table(f"{pre}tree_high", "cpg_int", data["tree_high"], str))
        w.append(_shared_table(f"{pre}tree_leaf", "cpg_int", data["tree_leaf"], str))
        w.append(_shared_table(f"{pre}leaf_reg", "cpg_int", data["leaf_reg"], str))
        w.append(_shared_table(f"{pre}leaf_start", "cpg_int", data["leaf_start"], str))
    if bounds is not None:
        ulo = np.clip(bounds[0], -BIG_BOUND, BIG_BOUND)
        uhi = np.clip(bounds[1], -BIG_BOUND, BIG_BOUND)
        w.append(_shared_table(f"{pre}ulo", "double", ulo.tolist(), _dlit))
        w.append(_shared_table(f"{pre}uhi", "double", uhi.tolist(), _dlit))
    else:
        clo = np.clip(qp.theta_set.box_lo, -BIG_BOUND, BIG_BOUND)
        chi = np.clip(qp.theta_set.box_hi, -BIG_BOUND, BIG_BOUND)
        w.append(_shared_table(f"{pre}clo", "double", clo.tolist(), _dlit))
        w.append(_shared_table(f"{pre}chi", "double", chi.tolist(), _dlit))
    w.append("")
    w.append(f"double {pre}theta_user[{max(pu, 1)}];")
    w.append(f"double {pre}th[{P1}];")
    w.append(f"double {pre}z[{max(zmax, 1)}];")
    w.append(f"double {pre}lam[{max(m, 1)}];")
    w.append(f"double {pre}zf[{zf_len}];")
    w.append(f"double {pre}xu[{max(nu_, 1)}];")
    w.append(f"cpg_float {pre}prim_store[{max(nu_, 1)}];")
    w.append(f"cpg_float {pre}dual_store[{max(m, 1)}];")
    w.append(f"cpg_int {pre}active_region = -1;")
    w.append("")
    prim_init = []
    for fname, _label, start, count in prim_fields:
        prim_init.append(f"{pre}prim_store + {start}" if count > 1
                         else "(cpg_float)0.0")
    w.append("CPG_Prim_t CPG_Prim = {" + ", ".join(prim_init) + "};")
    dual_init = []
    for fname, _label, start, count in dual_fields:
        dual_init.append(f"{pre}dual_store + {start}" if count > 1
                         else "(cpg_float)0.0")
    if not dual_init:
        dual_init = ["(cpg_float)0.0"]
    w.append("CPG_Dual_t CPG_Dual = {" + ", ".join(dual_init) + "};")
    w.append("CPG_Result_t CPG_Result = {&CPG_Prim, &CPG_Dual};")
    w.append("")
    workspace_c = "\n".join(w)

    # ---- cpg_solve.h -------------------------------------------------------
    s = []
    s.append("#ifndef CPG_SOLVE_H")
    s.append("#define CPG_SOLVE_H")
    s.append("")
    s.append('#include "cpg_workspace.h"')
    s.append("")
    for fname, _label, _start, count in param_fields:
        if count > 1:
            s.append(f"void {pre}update_{fname}(cpg_int idx, double val);")
        else:
            s.append(f"void {pre}update_{fname}(double val);")
    s.append(f"cpg_int {pre}solve(void);")
    s.append(f"double {pre}objective(void);")
    s.append("")
    s.append("#endif")
    s.append("")
    solve_h = "\n".join(s)

    # ---- cpg_solve.c -------------------------------------------------------
    c = []
    c.append('#include "cpg_workspace.h"')
    c.append('#include "cpg_solve.h"')
    c.append("")
    ext = [f"extern const cpg_float {pre}F[];",
           f"extern const cpg_int {pre}F_start[];",
           f"extern const cpg_float {pre}H[];",
           f"extern const cpg_int {pre}H_start[];",
           f"extern const cpg_int {pre}act[];",
           f"extern const cpg_int {pre}act_start[];",
           f"extern const cpg_float {pre}obj[];",
           f"extern const cpg_float {pre}R[];",
           f"extern const cpg_float {pre}r_off[];",
           f"extern double {pre}z[];",
           f"extern double {pre}lam[];",
           f"extern double {pre}zf[];",
           f"extern double {pre}xu[];",
           f"extern cpg_float {pre}prim_store[];",
           f"extern cpg_float {pre}dual_store[];"]
    if tree is not None:
        ext += [f"extern const cpg_float {pre}tree_N[];",
                f"extern const cpg_int {pre}tree_low[];",
                f"extern const cpg_int {pre}tree_high[];",
                f"extern const cpg_int {pre}tree_leaf[];",
                f"extern const cpg_int {pre}leaf_reg[];",
                f"extern const cpg_int {pre}leaf_start[];"]
    if bounds is not None:
        ext += [f"extern const double {pre}ulo[];",
                f"extern const double {pre}uhi[];"]
    else:
        ext += [f"extern const double {pre}clo[];",
                f"extern const double {pre}chi[];"]
    c.extend(ext)
    c.append("")

    for fname, _label, start, count in param_fields:
        if count > 1:
            c.append(f"void {pre}update_{fname}(cpg_int idx, double val) {{")
            c.append(f"  if (idx < 0) return;")
            c.append(f"  if (idx >= {count}) return;")
            c.append("  double v = val;")
            if bounds is not None:
                c.append(f"  if (v < {pre}ulo[{start} + idx]) v = {pre}ulo[{start} + idx];")
                c.append(f"  if (v > {pre}uhi[{start} + idx]) v = {pre}uhi[{start} + idx];")
            c.append(f"  {pre}theta_user[{start} + idx] = v;")
            c.append("}")
        else:
            c.append(f"void {pre}update_{fname}(double val) {{")
            c.append("  double v = val;")
            if bounds is not None:
                c.append(f"  if (v < {pre}ulo[{start}]) v = {pre}ulo[{start}];")
                c.append(f"  if (v > {pre}uhi[{start}]) v = {pre}uhi[{start}];")
            c.append(f"  {pre}theta_user[{start}] = v;")
            c.append("}")
        c.append("")

    c.append(f"cpg_int {pre}solve(void) {{")
    c.append("  cpg_int k, r, q, i, leaf;")
    c.append("  double s;")
    c.append("  cpg_int region = -1;")
    # canonical theta from user values: emitted per coordinate, nonzeros only
    C_mat, c_off = maps.C, maps.c
    for i in range(p):
        terms = [f"{_dlit(c_off[i])}"] if c_off[i] != 0.0 or not C_mat[i].any() else []
        for j in range(pu):
            if C_mat[i, j] != 0.0:
                if C_mat[i, j] == 1.0:
                    terms.append(f"{pre}theta_user[{j}]")
                else:
                    terms.append(f"{_dlit(C_mat[i, j])} * {pre}theta_user[{j}]")
        c.append(f"  {pre}th[{i}] = " + " + ".join(terms) + ";")
    c.append(f"  {pre}th[{p}] = 1.0;")
    if bounds is None:
        c.append(f"  for (i = 0; i < {p}; i = i + 1) {{")
        c.append(f"    if ({pre}th[i] < {pre}clo[i]) {pre}th[i] = {pre}clo[i];")
        c.append(f"    if ({pre}th[i] > {pre}chi[i]) {pre}th[i] = {pre}chi[i];")
        c.append("  }")
    if tree is not None:
        c.append("  i = 0;")
        c.append(f"  while ({pre}tree_leaf[i] < 0) {{")
        c.append("    s = 0.0;")
        c.append(f"    for (r = 0; r < {P1}; r = r + 1) s = s + (double){pre}tree_N[i * {P1} + r] * {pre}th[r];")
        c.append(f"    i = (s > 0.0) ? {pre}tree_high[i] : {pre}tree_low[i];")
        c.append("  }")
        c.append(f"  leaf = {pre}tree_leaf[i];")
        c.append(f"  for (q = {pre}leaf_start[leaf]; q < {pre}leaf_start[leaf + 1]; q = q + 1) {{")
        c.append(f"    k = {pre}leaf_reg[q];")
    else:
        c.append("  leaf = 0;")
        c.append("  (void)leaf;")
        c.append(f"  for (k = 0; k < {K}; k = k + 1) {{")
    c.append("    cpg_int ok = 1;")
    c.append(f"    for (r = {pre}H_start[k]; r < {pre}H_start[k + 1]; r = r + 1) {{")
    c.append("      s = 0.0;")
    c.append(f"      for (i = 0; i < {P1}; i = i + 1) s = s + (double){pre}H[r * {P1} + i] * {pre}th[i];")
    c.append("      if (s > 0.0) { ok = 0; break; }")
    c.append("    }")
    c.append("    if (ok) { region = k; break; }")
    c.append("  }")
    c.append(f"  if (region < 0) {{ {pre}active_region = -1; return 1; }}")
    c.append(f"  for (r = {pre}F_start[region]; r < {pre}F_start[region + 1]; r = r + 1) {{")
    c.append("    s = 0.0;")
    c.append(f"    for (i = 0; i < {P1}; i = i + 1) s = s + (double){pre}F[r * {P1} + i] * {pre}th[i];")
    c.append(f"    {pre}z[r - {pre}F_start[region]] = s;")
    c.append("  }")
    c.append(f"  for (i = 0; i < {max(m, 1)}; i = i + 1) {pre}lam[i] = 0.0;")
    c.append(f"  for (q = {pre}act_start[region]; q < {pre}act_start[region + 1]; q = q + 1)")
    c.append(f"    {pre}lam[{pre}act[q]] = {pre}z[{n + me} + q - {pre}act_start[region]];")
    c.append(f"  for (i = 0; i < {n}; i = i + 1) {pre}zf[i] = {pre}z[i];")
    if m:
        c.append(f"  for (i = 0; i < {m}; i = i + 1) {pre}zf[{n} + i] = {pre}lam[i];")
    if me:
        c.append(f"  for (i = 0; i < {me}; i = i + 1) {pre}zf[{n + m} + i] = {pre}z[{n} + i];")
    c.append(f"  for (i = 0; i < {nu_}; i = i + 1) {{")
    c.append("    s = 0.0;")
    c.append(f"    for (q = 0; q < {zf_len}; q = q + 1) s = s + (double){pre}R[i * {zf_len} + q] * {pre}zf[q];")
    c.append(f"    {pre}xu[i] = s + (double){pre}r_off[i];")
    c.append("  }")
    c.append(f"  for (i = 0; i < {nu_}; i = i + 1) {pre}prim_store[i] = (cpg_float){pre}xu[i];")
    if m:
        c.append(f"  for (i = 0; i < {m}; i = i + 1) {pre}dual_store[i] = (cpg_float){pre}lam[i];")
    for fname, _label, start, count in prim_fields:
        if count == 1:
            c.append(f"  CPG_Prim.{fname} = (cpg_float){pre}xu[{start}];")
    for fname, _label, start, count in dual_fields:
        if count == 1:
            c.append(f"  CPG_Dual.{fname} = (cpg_float){pre}lam[{start}];")
    c.append(f"  {pre}active_region = region;")
    c.append("  return 0;")
    c.append("}")
    c.append("")
    c.append(f"double {pre}objective(void) {{")
    c.append("  cpg_int a, b, base;")
    c.append("  double acc, row;")
    c.append(f"  if ({pre}active_region < 0) return 0.0;")
    c.append(f"  base = {pre}active_region * {P1 * P1};")
    c.append("  acc = 0.0;")
    c.append(f"  for (a = 0; a < {P1}; a = a + 1) {{")
    c.append("    row = 0.0;")
    c.append(f"    for (b = 0; b < {P1}; b = b + 1) row = row + (double){pre}obj[base + a * {P1} + b] * {pre}th[b];")
    c.append(f"    acc = acc + {pre}th[a] * row;")
    c.append("  }")
    c.append("  return acc;")
    c.append("}")
    c.append("")
    solve_c = "\n".join(c)

    # ---- example_main.c ----------------------------------------------------
    d = []
    d.append("#include <stdio.h>")
    d.append("#include <stdlib.h>")
    d.append('#include "cpg_workspace.h"')
    d.append('#include "cpg_solve.h"')
    d.append("")
    d.append(f"static double in_row[{max(pu, 1)}];")
    d.append("")
    d.append("int main(void) {")
    d.append("  char line[65536];")
    d.append("  while (fgets(line, (int)sizeof line, stdin)) {")
    d.append("    char *s = line;")
    d.append("    char *end = s;")
    d.append("    int got = 0;")
    d.append(f"    while (got < {pu}) {{")
    d.append("      double v = strtod(s, &end);")
    d.append("      if (end == s) break;")
    d.append("      in_row[got] = v;")
    d.append("      got = got + 1;")
    d.append("      s = end;")
    d.append("    }")
    d.append(f"    if (got < {pu}) continue;")
    for fname, _label, start, count in param_fields:
        if count > 1:
            for e in range(count):
                d.append(f"    {pre}update_{fname}({e}, in_row[{start + e}]);")
        else:
            d.append(f"    {pre}update_{fname}(in_row[{start}]);")
    d.append(f"    if ({pre}solve() != 0) {{")
    d.append('      printf("1\\n");')
    d.append("      continue;")
    d.append("    }")
    d.append('    printf("0");')
    for fname, _label, start, count in prim_fields:
        if count > 1:
            for e in range(count):
                d.append(f'    printf(" %.17g", (double)CPG_Result.prim->{fname}[{e}]);')
        else:
            d.append(f'    printf(" %.17g", (double)CPG_Result.prim->{fname});')
    for fname, _label, start, count in dual_fields:
        if count > 1:
            for e in range(count):
                d.append(f'    printf(" %.17g", (double)CPG_Result.dual->{fname}[{e}]);')
        else:
            d.append(f'    printf(" %.17g", (double)CPG_Result.dual->{fname});')
    d.append(f'    printf(" %.17g", {pre}objective());')
    d.append('    printf("\\n");')
    d.append("  }")
    d.append("  return 0;")
    d.append("}")
    d.append("")
    main_c = "\n".join(d)

    files = {"cpg_workspace.h": workspace_h, "cpg_workspace.c": workspace_c,
             "cpg_solve.h": solve_h, "cpg_solve.c": solve_c,
             "example_main.c": main_c}
    coeff = sum((r.law.rows + r.rows) * P1 for r in solution.regions)
    float_count = (len(data["F"]) + len(data["H"]) + len(data["obj"])
                   + maps.R.size + maps.r.size
                   + (len(data.get("tree_N", ())) if tree is not None else 0))
    meta = {"precision": precision,
            "coefficient_count": coeff,
            "coefficient_estimate": K * (n + m) * p,
            "data_bytes": float_count * (4 if fp32 else 8),
            "flop_bound": (flop_bound(solution, tree) if tree is not None
                           else flop_bound_scan(solution)),
            "point_location": "tree" if tree is not None else "linear scan",
            "problem": {"K": K, "n": n, "m": m, "me": me, "p": p,
                        "p_user": pu, "n_user": nu_},
            "api": {"solve": api["solve"], "objective": api["objective"],
                    "updates": [api[f"update {label}"]
                                for _f, label, _s, _c in param_fields],
                    "result": "CPG_Result"},
            "compile": list(CC_INVOCATION)}
    source = GeneratedSource(files=files, precision=precision,
                             api_names=api, meta=meta)
    source.files["cpg_manifest.json"] = emit_manifest(source)
    return source


def emit_manifest(source: GeneratedSource) -> str:
    """Manifest text: file inventory, coefficient counts against the K(n+m)p
    estimate, the online flop bound, and the compile command."""
    doc = dict(source.meta)
    doc["files"] = {name: len(text.encode())
                    for name, text in source.files.items()
                    if name != "cpg_manifest.json"}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def write_files(source: GeneratedSource, out_dir) -> list[str]:
    """Write every generated file under out_dir; returns the paths written."""
    import os
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name in FILE_ORDER:
        if name not in source.files:
            continue
        path = os.path.join(out_dir, name)
        with open(path, "w") as fh:
            fh.write(source.files[name])
        paths.append(path)
    return paths
