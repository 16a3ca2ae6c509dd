"""Binary search tree over region facet hyperplanes for online point location.

Construction is offline and LP-assisted; descent is a handful of dot products
and compares. Region-vs-plane sides start from cheap certificates (inscribed
ball: definitely reaches a side; bounding box / own facet rows: definitely
does not) and are sharpened with LPs only for the planes that compete for a
split. A region is listed under every leaf whose half-space chain it touches,
so straddlers are duplicated rather than lost. Queries that tie a hyperplane
exactly descend to the low side.

Facet rows are the primary split dictionary. When the geometry defeats them
(cone fans around a shared apex leave every facet plane straddled by almost
every region), axis-aligned cuts chosen from the regions' bounding boxes step
in: their side tests are exact and LP-free, and recursing on them still
isolates regions away from the apex. A node splits on whichever candidate
leaves the smaller worse side, preferring the facet dictionary on ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .builder import ExplicitSolution
from .linalg import solve_lp

MEMBER_SLACK = 1e-9   # slack for region membership tests
SIDE_EPS = 1e-9       # a region must reach this far past a plane to count as on a side
LEAF_CAP = 4
DEPTH_CAP = 64
BOX_BIG = 1e30        # stands in for an unbounded box edge
NODE_PROBES = 16      # max planes LP-sharpened per node
NODE_BUDGET = 32      # nodes allowed per region before splits are cut off
STALL_MAX = 8         # volume cuts allowed without any count progress
EDGE_MIN = 1e-6       # cells thinner than this are not volume-cut further

_UNKNOWN, _YES, _NO = 0, 1, -1


@dataclass(eq=False)
class SearchTree:
    """Flat node arrays; node 0 is the root. leaf_id >= 0 marks a leaf node."""

    normals: np.ndarray          # (n_nodes, p)
    offsets: np.ndarray          # (n_nodes,)
    low: np.ndarray              # (n_nodes,) int32 child index, -1 at leaves
    high: np.ndarray             # (n_nodes,) int32
    leaf_id: np.ndarray          # (n_nodes,) int32, -1 on internal nodes
    leaves: list[np.ndarray]     # region-index lists, each sorted ascending
    depth: int                   # max hyperplane evaluations on any path

    @property
    def n_nodes(self) -> int:
        return self.normals.shape[0]

    def worst_leaf_rows(self, solution: ExplicitSolution) -> int:
        rows = [int(sum(solution.regions[k].rows for k in leaf)) for leaf in self.leaves]
        return max(rows) if rows else 0


def _normalize_plane(a: np.ndarray, b: float):
    """Scale so max |coefficient| is 1 and the first nonzero entry is positive."""
    s = float(np.max(np.abs(a)))
    if s <= 0.0:
        return None
    a = a / s
    b = b / s
    sign = 1
    for x in a:
        if x != 0.0:
            if x < 0.0:
                a = -a
                b = -b
                sign = -1
            break
    return a, b, sign


def _collect_hyperplanes(solution: ExplicitSolution):
    """Deduplicated, normalized facet rows of all regions, in first-seen order.

    Also maps every region row back to its plane: row_map[k] is (ids, signs)
    with sign +1 when the region's inequality reads a.theta <= b in plane
    coordinates and -1 when it flipped during normalization.
    """
    planes = []
    seen: dict[tuple, int] = {}
    row_map = []
    for region in solution.regions:
        ids, signs = [], []
        for row in range(region.rows):
            norm = _normalize_plane(region.H[row], float(region.j[row]))
            if norm is None:
                continue
            a, b, sign = norm
            key = tuple(np.round(a, 12)) + (round(b, 12),)
            hp = seen.get(key)
            if hp is None:
                hp = len(planes)
                seen[key] = hp
                planes.append((a, b))
            ids.append(hp)
            signs.append(sign)
        row_map.append((np.array(ids, dtype=np.int64), np.array(signs, dtype=np.int8)))
    if not planes:
        p = solution.qp.p
        return np.zeros((0, p)), np.zeros(0), row_map
    return np.array([a for a, _ in planes]), np.array([b for _, b in planes]), row_map


def _region_box(region) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounding box of one region (2p LPs)."""
    p = region.H.shape[1]
    lo, hi = np.empty(p), np.empty(p)
    e = np.zeros(p)
    for i in range(p):
        e[i] = 1.0
        res = solve_lp(e, region.H, region.j)
        lo[i] = res.objective if res.status == "optimal" else -BOX_BIG
        res = solve_lp(-e, region.H, region.j)
        hi[i] = -res.objective if res.status == "optimal" else BOX_BIG
        e[i] = 0.0
    return np.clip(lo, -BOX_BIG, BOX_BIG), np.clip(hi, -BOX_BIG, BOX_BIG)


class _Sides:
    """(plane x region) side states: +1 region pokes into the open side,
    -1 it provably does not, 0 undecided. Ball, box and own-facet certificates
    seed the matrix; resolve() runs the two LPs for one pair and is cached by
    writing the state in place."""

    def __init__(self, solution: ExplicitSolution, A: np.ndarray, b: np.ndarray,
                 row_map):
        self.solution = solution
        self.A, self.b = A, b
        self.row_map = row_map
        K = solution.K
        centers = np.array([r.cheb_point for r in solution.regions])
        radii = np.array([r.cheb_radius for r in solution.regions])
        boxes = [_region_box(r) for r in solution.regions]
        blo = np.array([lo for lo, _ in boxes])
        bhi = np.array([hi for _, hi in boxes])
        self.blo, self.bhi = blo, bhi        # exact per-axis extents
        norms = np.linalg.norm(A, axis=1)
        proj = A @ centers.T                      # (planes, K)
        reach = norms[:, None] * radii[None, :]
        Apos, Aneg = np.maximum(A, 0.0), np.minimum(A, 0.0)
        box_min = Apos @ blo.T + Aneg @ bhi.T
        box_max = Apos @ bhi.T + Aneg @ blo.T
        margin = b[:, None]
        self.center_low = proj < margin           # estimates for split ranking
        self.crossing = np.abs(proj - margin) < reach
        self.lo = np.zeros((len(b), K), dtype=np.int8)
        self.hi = np.zeros((len(b), K), dtype=np.int8)
        self.lo[proj - reach < margin - SIDE_EPS] = _YES
        self.hi[proj + reach > margin + SIDE_EPS] = _YES
        self.lo[box_min >= margin - SIDE_EPS] = _NO
        self.hi[box_max <= margin + SIDE_EPS] = _NO
        # A region's own facet row pins it to one closed half-space exactly,
        # and its nonempty interior puts it strictly on that open side.
        for k in range(K):
            ids, signs = row_map[k]
            self.lo[ids[signs > 0], k] = _YES
            self.hi[ids[signs > 0], k] = _NO
            self.lo[ids[signs < 0], k] = _NO
            self.hi[ids[signs < 0], k] = _YES
        self._fix_squeezed()

    def _fix_squeezed(self):
        """A region provably on neither open side sits inside the plane slab;
        route it to both children so it stays reachable."""
        squeezed = (self.lo == _NO) & (self.hi == _NO)
        self.lo[squeezed] = _YES
        self.hi[squeezed] = _YES

    def node_planes(self, regions: np.ndarray) -> np.ndarray:
        """Facet planes of the node's own regions, ascending and unique."""
        return np.unique(np.concatenate([self.row_map[int(k)][0] for k in regions]))

    def resolve(self, hp: int, k: int):
        """LP-sharpen one (plane, region) pair; leaves no zeros behind."""
        a, b = self.A[hp], float(self.b[hp])
        region = self.solution.regions[k]
        if self.lo[hp, k] == _UNKNOWN:
            res = solve_lp(a, region.H, region.j)
            mn = res.objective if res.status == "optimal" else -np.inf
            self.lo[hp, k] = _YES if mn < b - SIDE_EPS else _NO
        if self.hi[hp, k] == _UNKNOWN:
            res = solve_lp(-a, region.H, region.j)
            mx = -res.objective if res.status == "optimal" else np.inf
            self.hi[hp, k] = _YES if mx > b + SIDE_EPS else _NO
        if self.lo[hp, k] == _NO and self.hi[hp, k] == _NO:
            self.lo[hp, k] = _YES
            self.hi[hp, k] = _YES


def _axis_masks(sides: _Sides, regions: np.ndarray, coord: int, cut: float):
    """Side membership for an axis cut, exact from the box extents; a region
    inside the cut's tolerance slab goes to both children."""
    lo_yes = sides.blo[regions, coord] < cut - SIDE_EPS
    hi_yes = sides.bhi[regions, coord] > cut + SIDE_EPS
    slab = ~lo_yes & ~hi_yes
    return lo_yes | slab, hi_yes | slab


def _best_axis_cut(sides: _Sides, regions: np.ndarray):
    """Best axis-aligned cut for this node: (worst, coord, cut) or None.

    Candidate offsets are midpoints between consecutive distinct box-edge
    values per coordinate; side counts come straight from the exact extents,
    so no LPs are spent. Ties prefer the lower coordinate, then the lower
    cut value.
    """
    count = len(regions)
    best = None
    for coord in range(sides.blo.shape[1]):
        lo = np.sort(sides.blo[regions, coord])
        hi = np.sort(sides.bhi[regions, coord])
        edges = np.unique(np.concatenate([lo, hi]))
        if len(edges) < 2:
            continue
        cuts = 0.5 * (edges[:-1] + edges[1:])
        n_lo = np.searchsorted(lo, cuts - SIDE_EPS, side="left")
        n_hi = count - np.searchsorted(hi, cuts + SIDE_EPS, side="right")
        slab = count - n_lo - n_hi
        worst = np.maximum(n_lo, n_hi) + np.maximum(slab, 0)
        at = int(np.argmin(worst))
        if best is None or int(worst[at]) < best[0]:
            best = (int(worst[at]), coord, float(cuts[at]))
    if best is None or best[0] >= count:
        return None
    return best


def _best_facet_plane(sides: _Sides, regions: np.ndarray, cap: int):
    """Best facet plane with worse side < cap: (worst, hp) or None.

    Candidates are the node regions' own facet planes, tried most-promising
    first: balance as judged by which side each region's inscribed-ball
    center falls on, plus a straddle estimate (ball crosses the plane). Each
    candidate is LP-sharpened pair by pair with early abandon, and the search
    stops at a provably optimal split (worse side == ceil(n/2)), when no
    untried plane's confirmed counts could win, or after NODE_PROBES
    candidates.
    """
    count = len(regions)
    cand = sides.node_planes(regions)
    lo_yes = (sides.lo[cand[:, None], regions[None, :]] == _YES).sum(axis=1)
    hi_yes = (sides.hi[cand[:, None], regions[None, :]] == _YES).sum(axis=1)
    confirmed = np.maximum(lo_yes, hi_yes)            # only grows under resolution
    n_low = sides.center_low[cand[:, None], regions[None, :]].sum(axis=1)
    n_cross = sides.crossing[cand[:, None], regions[None, :]].sum(axis=1)
    # estimated worse side after duplication: balance plus likely straddlers
    balance = np.maximum(n_low, count - n_low) + n_cross
    order = np.argsort(balance, kind="stable")
    floor = (count + 1) // 2                          # duplication keeps max >= this
    best, best_worst = None, cap
    probes = 0
    for idx in order:
        hp = int(cand[idx])
        if best_worst <= floor or probes >= NODE_PROBES:
            break
        if confirmed[idx] >= best_worst:
            continue
        cur_lo, cur_hi = int(lo_yes[idx]), int(hi_yes[idx])
        abandoned = False
        for k in regions:
            k = int(k)
            before = (sides.lo[hp, k], sides.hi[hp, k])
            if before[0] == _UNKNOWN or before[1] == _UNKNOWN:
                sides.resolve(hp, k)
                if sides.lo[hp, k] == _YES and before[0] != _YES:
                    cur_lo += 1
                if sides.hi[hp, k] == _YES and before[1] != _YES:
                    cur_hi += 1
                if max(cur_lo, cur_hi) >= best_worst:
                    abandoned = True
                    break
        probes += 1
        if abandoned:
            continue
        worst = max(cur_lo, cur_hi)
        if worst < best_worst:
            best, best_worst = hp, worst
    if best is None:
        return None
    for k in regions:        # children need fully decided sides
        sides.resolve(best, int(k))
    return best_worst, best


def _choose_split(sides: _Sides, regions: np.ndarray, need: int):
    """Best split with worse side <= need, or None:
    ("facet", hp, worst) | ("axis", coord, cut, worst).

    The facet dictionary competes against the best axis cut; the facet plane
    wins ties. The axis result (and the need threshold) cap the facet search,
    so LP effort is only spent where a facet plane could still win.
    """
    axis = _best_axis_cut(sides, regions)
    if axis is not None and axis[0] > need:
        axis = None
    cap = (axis[0] if axis is not None else need) + 1
    facet = _best_facet_plane(sides, regions, cap)
    if facet is not None:
        return ("facet", facet[1], facet[0])
    if axis is not None:
        return ("axis", axis[1], axis[2], axis[0])
    return None


def _cell_overlap(sides: _Sides, regions: np.ndarray, cell_lo, cell_hi):
    """Regions whose bounding box meets the cell; descent guarantees theta
    lies in the cell, so regions outside it can be dropped exactly."""
    return ((sides.blo[regions] <= cell_hi + SIDE_EPS).all(axis=1)
            & (sides.bhi[regions] >= cell_lo - SIDE_EPS).all(axis=1))


def _volume_cut(sides: _Sides, regions: np.ndarray, cell_lo, cell_hi):
    """Halve the cell through the midpoint of its longest edge and assign
    regions to the halves by bounding-box overlap (conservative)."""
    coord = int(np.argmax(cell_hi - cell_lo))
    if cell_hi[coord] - cell_lo[coord] <= EDGE_MIN:
        return None
    cut = 0.5 * (cell_lo[coord] + cell_hi[coord])
    low_mask = sides.blo[regions, coord] <= cut + SIDE_EPS
    high_mask = sides.bhi[regions, coord] >= cut - SIDE_EPS
    return coord, cut, low_mask, high_mask


def build_tree(solution: ExplicitSolution, leaf_cap: int = LEAF_CAP,
               depth_cap: int = DEPTH_CAP) -> SearchTree:
    """Build the point-location tree.

    At each node the hyperplane minimizing max(#regions on the low side,
    #regions on the high side) among the probed candidates wins, ties broken
    by first index in the deduplicated plane list. When no candidate shrinks
    the worse side (apex-fan geometry), the cell is halved through its
    longest edge instead, up to STALL_MAX consecutive times — descent cost
    still shrinks because cells away from the apex purify. Recursion stops
    at leaf_cap regions, at depth_cap, on a stalled-out node, or when
    straddler duplication exhausts the node budget. Nodes come out numbered
    breadth-first.
    """
    p = solution.qp.p
    A, b, row_map = _collect_hyperplanes(solution)
    sides = _Sides(solution, A, b, row_map) if len(b) else None
    budget = max(1024, NODE_BUDGET * solution.K)
    box_lo = np.clip(solution.qp.theta_set.box_lo, -BOX_BIG, BOX_BIG)
    box_hi = np.clip(solution.qp.theta_set.box_hi, -BOX_BIG, BOX_BIG)

    normals, offsets, lows, highs, leaf_ids = [], [], [], [], []
    leaves: list[np.ndarray] = []
    max_depth = 0

    def add_leaf(regions: np.ndarray, depth: int) -> int:
        nonlocal max_depth
        max_depth = max(max_depth, depth)
        node = len(normals)
        normals.append(np.zeros(p))
        offsets.append(0.0)
        lows.append(-1)
        highs.append(-1)
        leaf_ids.append(len(leaves))
        leaves.append(np.sort(regions).astype(np.int32))
        return node

    def split(regions: np.ndarray, depth: int, cell_lo, cell_hi, stall: int,
              tried: int) -> int:
        nonlocal budget
        budget -= 1
        count = len(regions)
        if (count <= leaf_cap or depth >= depth_cap or sides is None
                or budget <= 0):
            return add_leaf(regions, depth)
        # a split barely below count duplicates its way into a blowup; demand
        # real progress, otherwise halve the cell and let distance from the
        # straddle core do the separating. Re-probing the same region set
        # after a non-pruning volume cut would repeat the same failure, so
        # skip it (count == tried).
        if count == tried:
            choice = None
        else:
            choice = _choose_split(sides, regions, count - max(1, count // 8))
            tried = count if choice is None else -1
        lo_cell_hi, hi_cell_lo = cell_hi, cell_lo   # cells only change on axis cuts
        if choice is None:
            if stall >= STALL_MAX:
                return add_leaf(regions, depth)
            vol = _volume_cut(sides, regions, cell_lo, cell_hi)
            if vol is None:
                return add_leaf(regions, depth)
            coord, cut, low_mask, high_mask = vol
            normal = np.zeros(p)
            normal[coord] = 1.0
            offset = cut
            lo_cell_hi = cell_hi.copy(); lo_cell_hi[coord] = cut
            hi_cell_lo = cell_lo.copy(); hi_cell_lo[coord] = cut
            low_mask &= _cell_overlap(sides, regions, cell_lo, lo_cell_hi)
            high_mask &= _cell_overlap(sides, regions, hi_cell_lo, cell_hi)
            stall += 1
        else:
            stall = 0
            if choice[0] == "facet":
                hp = choice[1]
                normal, offset = A[hp], float(b[hp])
                low_mask = sides.lo[hp, regions] == _YES
                high_mask = sides.hi[hp, regions] == _YES
            else:
                coord, cut = choice[1], choice[2]
                normal = np.zeros(p)
                normal[coord] = 1.0
                offset = cut
                low_mask, high_mask = _axis_masks(sides, regions, coord, cut)
                lo_cell_hi = cell_hi.copy(); lo_cell_hi[coord] = min(cut, cell_hi[coord])
                hi_cell_lo = cell_lo.copy(); hi_cell_lo[coord] = max(cut, cell_lo[coord])
        node = len(normals)
        normals.append(normal)
        offsets.append(offset)
        lows.append(-2)   # patched after recursion
        highs.append(-2)
        leaf_ids.append(-1)
        lows[node] = split(regions[low_mask], depth + 1, cell_lo, lo_cell_hi,
                           stall, tried)
        highs[node] = split(regions[high_mask], depth + 1, hi_cell_lo, cell_hi,
                            stall, tried)
        return node

    split(np.arange(solution.K), 0, box_lo.copy(), box_hi.copy(), 0, -1)
    tree = SearchTree(np.array(normals), np.array(offsets),
                      np.array(lows, dtype=np.int32), np.array(highs, dtype=np.int32),
                      np.array(leaf_ids, dtype=np.int32), leaves, max_depth)
    # descent cost must pay for itself: if the worst leaf plus the descent is
    # no cheaper than scanning every region, a single all-regions leaf has the
    # same online bound and none of the node overhead
    total_rows = sum(r.rows for r in solution.regions)
    if tree.depth + tree.worst_leaf_rows(solution) >= total_rows and tree.n_nodes > 1:
        tree = SearchTree(np.zeros((1, p)), np.zeros(1),
                          np.full(1, -1, dtype=np.int32), np.full(1, -1, dtype=np.int32),
                          np.zeros(1, dtype=np.int32),
                          [np.arange(solution.K, dtype=np.int32)], 0)
    return _relabel_bfs(tree)


def _relabel_bfs(tree: SearchTree) -> SearchTree:
    """Renumber nodes breadth-first so shallow nodes occupy a prefix of the
    arrays (lets the evaluator batch the top of the descent)."""
    order = []
    queue = [0]
    while queue:
        i = queue.pop(0)
        order.append(i)
        if tree.leaf_id[i] < 0:
            queue.append(int(tree.low[i]))
            queue.append(int(tree.high[i]))
    perm = np.empty(tree.n_nodes, dtype=np.int32)
    perm[np.array(order, dtype=np.int32)] = np.arange(tree.n_nodes, dtype=np.int32)
    idx = np.array(order, dtype=np.int32)
    low = tree.low[idx]
    high = tree.high[idx]
    internal = low >= 0
    low[internal] = perm[low[internal]]
    high[internal] = perm[high[internal]]
    return SearchTree(tree.normals[idx], tree.offsets[idx], low, high,
                      tree.leaf_id[idx], tree.leaves, tree.depth)


def locate(tree: SearchTree, solution: ExplicitSolution, theta) -> int | None:
    """Descend the tree and test leaf candidates in region order.

    Returns the first containing region index, or None (NotFound) when theta
    lies outside every candidate, which for a covering solution means theta
    is an infeasible parameter.
    """
    theta = np.asarray(theta, dtype=float)
    i = 0
    while tree.leaf_id[i] < 0:
        v = float(tree.normals[i] @ theta) - float(tree.offsets[i])
        i = int(tree.high[i]) if v > 0.0 else int(tree.low[i])
    for k in tree.leaves[tree.leaf_id[i]]:
        region = solution.regions[k]
        if np.all(region.H @ theta <= region.j + MEMBER_SLACK):
            return int(k)
    return None


def linear_scan(solution: ExplicitSolution, theta) -> int | None:
    """First region (in stored order) containing theta, or None."""
    theta = np.asarray(theta, dtype=float)
    for k, region in enumerate(solution.regions):
        if np.all(region.H @ theta <= region.j + MEMBER_SLACK):
            return k
    return None
