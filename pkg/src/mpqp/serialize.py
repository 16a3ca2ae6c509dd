"""Persistence for explicit solutions: a readable JSON form for debugging
and a compact little-endian binary container for deployment.

Binary layout (version 1):

    bytes 0..3   magic "MPQP"
    u16          version
    u16          flags (bit 0: search tree present)
    u32          meta length, then meta JSON (problem, maps, build log, hash)
    u32          K
    u64[K]       region blob offsets, relative to the end of this table
    ...          region blobs (see _pack_region)
    ...          tree section when flagged

Everything numeric is little-endian; floats are f64. Output is a pure
function of the solution, so rebuilding the same problem gives a
byte-identical file.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .builder import BuildLog, CriticalRegion, ExplicitSolution
from .kkt import ActiveSet, AffineLaw
from .model import problem_from_dict, problem_to_dict
from .tree import SearchTree

MAGIC = b"MPQP"
VERSION = 1
FLAG_TREE = 1

_ORIGIN_CODE = {"primal": 0, "dual": 1, "theta": 2}
_ORIGIN_NAME = {v: k for k, v in _ORIGIN_CODE.items()}


# ---------------------------------------------------------------------------
# JSON form


def _log_to_dict(log: BuildLog) -> dict:
    return {"strategy": log.strategy, "examined": log.examined, "kept": log.kept,
            "skipped_cardinality": log.skipped_cardinality,
            "skipped_licq": log.skipped_licq, "skipped_empty": log.skipped_empty,
            "skipped_lowdim": log.skipped_lowdim, "probes": log.probes,
            "warnings": list(log.warnings)}


def _log_from_dict(d: dict) -> BuildLog:
    return BuildLog(strategy=d["strategy"], examined=d["examined"], kept=d["kept"],
                    skipped_cardinality=d["skipped_cardinality"],
                    skipped_licq=d["skipped_licq"], skipped_empty=d["skipped_empty"],
                    skipped_lowdim=d["skipped_lowdim"], probes=d["probes"],
                    warnings=tuple(d["warnings"]))


def _region_to_dict(region: CriticalRegion) -> dict:
    return {"bits": str(region.active),
            "F": region.law.F.tolist(), "g": region.law.g.tolist(),
            "H": region.H.tolist(), "j": region.j.tolist(),
            "origins": [[kind, idx] for kind, idx in region.origins],
            "cheb_point": region.cheb_point.tolist(),
            "cheb_radius": region.cheb_radius}


def _region_from_dict(d: dict, n: int, me: int) -> CriticalRegion:
    bits = d["bits"]
    active = ActiveSet(len(bits), int(bits, 2) if bits else 0)
    F = np.array(d["F"], dtype=float).reshape(len(d["g"]), -1)
    law = AffineLaw(F, np.array(d["g"], dtype=float), active, n, me)
    H = np.array(d["H"], dtype=float).reshape(len(d["j"]), -1)
    return CriticalRegion(active, law, H, np.array(d["j"], dtype=float),
                          tuple((kind, int(idx)) for kind, idx in d["origins"]),
                          np.array(d["cheb_point"], dtype=float),
                          float(d["cheb_radius"]))


def problem_hash(qp) -> str:
    """sha256 over the canonical JSON of the problem data."""
    blob = json.dumps(problem_to_dict(qp), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def solution_to_dict(solution: ExplicitSolution, tree: SearchTree | None = None) -> dict:
    d = {"problem": problem_to_dict(solution.qp, solution.maps),
         "problem_hash": problem_hash(solution.qp),
         "build_log": _log_to_dict(solution.build_log),
         "regions": [_region_to_dict(r) for r in solution.regions]}
    if tree is not None:
        d["tree"] = {"normals": tree.normals.tolist(),
                     "offsets": tree.offsets.tolist(),
                     "low": tree.low.tolist(), "high": tree.high.tolist(),
                     "leaf_id": tree.leaf_id.tolist(),
                     "leaves": [leaf.tolist() for leaf in tree.leaves],
                     "depth": tree.depth}
    return d


def solution_from_dict(d: dict) -> tuple[ExplicitSolution, SearchTree | None]:
    qp, maps = problem_from_dict(d["problem"])
    regions = [_region_from_dict(rd, qp.n, qp.me) for rd in d["regions"]]
    sol = ExplicitSolution(regions, qp, maps, _log_from_dict(d["build_log"]))
    tree = None
    if "tree" in d:
        td = d["tree"]
        p = qp.p
        tree = SearchTree(np.array(td["normals"], dtype=float).reshape(-1, p),
                          np.array(td["offsets"], dtype=float),
                          np.array(td["low"], dtype=np.int32),
                          np.array(td["high"], dtype=np.int32),
                          np.array(td["leaf_id"], dtype=np.int32),
                          [np.array(leaf, dtype=np.int32) for leaf in td["leaves"]],
                          int(td["depth"]))
    return sol, tree


def save_solution_json(path, solution: ExplicitSolution, tree: SearchTree | None = None):
    with open(path, "w") as fh:
        json.dump(solution_to_dict(solution, tree), fh, indent=1)


def load_solution_json(path) -> tuple[ExplicitSolution, SearchTree | None]:
    with open(path) as fh:
        return solution_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# binary container


def _f64(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def _pack_region(region: CriticalRegion, m: int, p: int) -> bytes:
    words = (m + 63) // 64 if m else 0
    bits = region.active.bits
    parts = [struct.pack("<I", words)]
    for w in range(words):
        parts.append(struct.pack("<Q", (bits >> (64 * w)) & 0xFFFFFFFFFFFFFFFF))
    parts.append(struct.pack("<II", region.law.rows, p))
    parts.append(_f64(region.law.F))
    parts.append(_f64(region.law.g))
    parts.append(struct.pack("<I", region.rows))
    parts.append(_f64(region.H))
    parts.append(_f64(region.j))
    for kind, idx in region.origins:
        parts.append(struct.pack("<BI", _ORIGIN_CODE[kind], idx))
    parts.append(_f64(region.cheb_point))
    parts.append(struct.pack("<d", region.cheb_radius))
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def take(self, fmt: str):
        vals = struct.unpack_from("<" + fmt, self.data, self.pos)
        self.pos += struct.calcsize("<" + fmt)
        return vals

    def floats(self, count: int) -> np.ndarray:
        out = np.frombuffer(self.data, dtype="<f8", count=count, offset=self.pos)
        self.pos += 8 * count
        return out.astype(float)


def _unpack_region(r: _Reader, n: int, me: int, m: int) -> CriticalRegion:
    (words,) = r.take("I")
    bits = 0
    for w in range(words):
        (word,) = r.take("Q")
        bits |= word << (64 * w)
    law_rows, p = r.take("II")
    F = r.floats(law_rows * p).reshape(law_rows, p)
    g = r.floats(law_rows)
    (rows,) = r.take("I")
    H = r.floats(rows * p).reshape(rows, p)
    j = r.floats(rows)
    origins = []
    for _ in range(rows):
        kind, idx = r.take("BI")
        origins.append((_ORIGIN_NAME[kind], int(idx)))
    cheb_point = r.floats(p)
    (cheb_radius,) = r.take("d")
    active = ActiveSet(m, bits)
    law = AffineLaw(F, g, active, n, me)
    return CriticalRegion(active, law, H, j, tuple(origins), cheb_point, cheb_radius)


def _pack_tree(tree: SearchTree, p: int) -> bytes:
    parts = [struct.pack("<I", tree.n_nodes)]
    for i in range(tree.n_nodes):
        parts.append(_f64(tree.normals[i]))
        parts.append(struct.pack("<diii", float(tree.offsets[i]),
                                 int(tree.low[i]), int(tree.high[i]),
                                 int(tree.leaf_id[i])))
    parts.append(struct.pack("<I", len(tree.leaves)))
    for leaf in tree.leaves:
        parts.append(struct.pack("<I", len(leaf)))
        parts.append(struct.pack("<%dI" % len(leaf), *[int(k) for k in leaf]))
    parts.append(struct.pack("<I", tree.depth))
    return b"".join(parts)


def _unpack_tree(r: _Reader, p: int) -> SearchTree:
    (n_nodes,) = r.take("I")
    normals = np.zeros((n_nodes, p))
    offsets = np.zeros(n_nodes)
    low = np.zeros(n_nodes, dtype=np.int32)
    high = np.zeros(n_nodes, dtype=np.int32)
    leaf_id = np.zeros(n_nodes, dtype=np.int32)
    for i in range(n_nodes):
        normals[i] = r.floats(p)
        offsets[i], low[i], high[i], leaf_id[i] = r.take("diii")
    (n_leaves,) = r.take("I")
    leaves = []
    for _ in range(n_leaves):
        (count,) = r.take("I")
        leaves.append(np.array(r.take("%dI" % count) if count else [], dtype=np.int32))
    (depth,) = r.take("I")
    return SearchTree(normals, offsets, low, high, leaf_id, leaves, int(depth))


def dumps_solution(solution: ExplicitSolution, tree: SearchTree | None = None) -> bytes:
    qp = solution.qp
    meta = {"problem": problem_to_dict(qp, solution.maps),
            "problem_hash": problem_hash(qp),
            "build_log": _log_to_dict(solution.build_log)}
    meta_blob = json.dumps(meta, sort_keys=True).encode()
    blobs = [_pack_region(r, qp.m, qp.p) for r in solution.regions]
    offsets = np.cumsum([0] + [len(b) for b in blobs[:-1]]) if blobs else []
    flags = FLAG_TREE if tree is not None else 0
    head = [MAGIC, struct.pack("<HH", VERSION, flags),
            struct.pack("<I", len(meta_blob)), meta_blob,
            struct.pack("<I", len(blobs))]
    for off in offsets:
        head.append(struct.pack("<Q", int(off)))
    out = b"".join(head) + b"".join(blobs)
    if tree is not None:
        out += _pack_tree(tree, qp.p)
    return out


def loads_solution(data: bytes) -> tuple[ExplicitSolution, SearchTree | None]:
    if data[:4] != MAGIC:
        raise ValueError("not an explicit-solution container (bad magic)")
    r = _Reader(data, 4)
    version, flags = r.take("HH")
    if version != VERSION:
        raise ValueError(f"unsupported container version {version}")
    (meta_len,) = r.take("I")
    meta = json.loads(data[r.pos:r.pos + meta_len].decode())
    r.pos += meta_len
    qp, maps = problem_from_dict(meta["problem"])
    (K,) = r.take("I")
    r.take("%dQ" % K) if K else ()
    regions = [_unpack_region(r, qp.n, qp.me, qp.m) for _ in range(K)]
    sol = ExplicitSolution(regions, qp, maps, _log_from_dict(meta["build_log"]))
    tree = _unpack_tree(r, qp.p) if flags & FLAG_TREE else None
    return sol, tree


def save_solution(path, solution: ExplicitSolution, tree: SearchTree | None = None):
    with open(path, "wb") as fh:
        fh.write(dumps_solution(solution, tree))


def load_solution(path) -> tuple[ExplicitSolution, SearchTree | None]:
    with open(path, "rb") as fh:
        return loads_solution(fh.read())
