"""Cutting the panel cycle into a strip and folding the strip into piles.

A stacked state is discrete: every panel lies flat in a lattice cell (i, j)
at an integer level z. Along the strip each hinge is either folded by +-pi
(the next panel lands directly above or below) or left flat (the next panel
moves to the neighbouring cell at the same level). The in-plane frame of
every panel is tracked as one of the 8 signed axis maps, so the direction of
a flat hinge is dictated by the strip and never chosen.
"""

from dataclasses import dataclass
import gc
import math
import random

import numpy as np

from .errors import DeltaTooLarge, IndexOutOfRange, InfeasibleStacking, PlanSumMismatch
from .lattice import ACT, DET, DIRS, IDENTITY, INV, MUL, flat_step, fold_step

STRAIGHT, LEFT, RIGHT = "straight", "left", "right"
ABOVE, BELOW, LATERAL = "above", "below", "lateral"


def turn_between(in_slot, out_slot):
    """Turn taken on a panel entered through ``in_slot`` and left through ``out_slot``."""
    delta = (out_slot - in_slot) % 4
    if delta == 2:
        return STRAIGHT
    if delta == 3:
        return LEFT
    if delta == 1:
        return RIGHT
    raise ValueError("entry and exit share an edge")


@dataclass(frozen=True)
class HingeRecord:
    edge: int
    out_slot: int  # slot on the upstream panel
    in_slot: int  # slot on the downstream panel
    dihedral: float  # folded-state angle
    turn: str  # turn taken on the downstream panel


@dataclass(frozen=True)
class Strip:
    order: tuple
    hinges: tuple
    break_index: int

    def __len__(self):
        return len(self.order)


@dataclass(frozen=True)
class StackPlan:
    kind: str  # "uniform" | "nonuniform"
    pile_heights: tuple
    delta: int = 0

    @property
    def k(self):
        return len(self.pile_heights)

    @property
    def n(self):
        return sum(self.pile_heights)


@dataclass(frozen=True, eq=False)
class StackedPlacement:
    """Per panel: lattice cell, level, frame and facing; per hinge: the move."""

    strip: Strip
    plan: StackPlan
    cells: np.ndarray  # (n, 2) int
    levels: np.ndarray  # (n,) int
    frames: np.ndarray  # (n,) lattice element index
    moves: tuple  # n-1 of ABOVE / BELOW / LATERAL
    lateral_dirs: np.ndarray  # (n-1,) world direction index, -1 unless lateral

    @property
    def face_up(self):
        return DET[self.frames] > 0

    @property
    def n(self):
        return len(self.levels)


@dataclass(frozen=True)
class StackingVerdict:
    feasible: bool
    collisions: tuple = ()  # ((cell, level, panel indices), ...)


@dataclass(frozen=True)
class CompactnessReport:
    sum_dims: float
    CR: float
    volume_ratio: float
    footprint: tuple
    height_levels: int
    W_s: float
    D_s: float
    H_s: float


@dataclass(frozen=True)
class SearchResult:
    strip: Strip
    plan: StackPlan
    placement: StackedPlacement
    report: CompactnessReport
    evaluated: int = 0
    feasible_count: int = 0


def break_cycle(cycle, index):
    """Cut the cycle at hinge ``index``; the strip starts at the panel after it."""
    n = len(cycle.order)
    if not 0 <= index < n:
        raise IndexOutOfRange(f"break index {index} outside 0..{n - 1}")
    start = (index + 1) % n
    pos = [(start + j) % n for j in range(n)]
    order = tuple(cycle.order[i] for i in pos)
    hinges = []
    for j in range(n - 1):
        h = pos[j]
        nxt = (h + 1) % n
        hinges.append(HingeRecord(
            edge=cycle.hinges[h],
            out_slot=cycle.out_slots[h],
            in_slot=cycle.in_slots[h],
            dihedral=cycle.dihedrals[h],
            # the last panel still has its cut edge as exit for the turn relation
            turn=turn_between(cycle.in_slots[h], cycle.out_slots[nxt]),
        ))
    return Strip(order, tuple(hinges), index)


def assign_uniform_plan(strip, k):
    n = strip if isinstance(strip, int) else len(strip)
    if not 1 <= k <= n:
        raise ValueError(f"pile count {k} outside 1..{n}")
    h = -(-n // k)
    heights = [h] * (k - 1) + [n - (k - 1) * h]
    while heights and heights[-1] <= 0:
        # dropping empty trailing piles; the new last pile takes any negative excess
        extra = heights.pop()
        if heights:
            heights[-1] += extra
    return StackPlan("uniform", tuple(heights))


def nonuniform_candidate_count(k, m):
    return m * (3 ** (k // 2) - 1)


def _nonuniform_heights(n, k, h, d, code):
    """Heights for pair-choice ``code`` (base-3 digits over pairs, 0:h 1:h+d 2:h-d) or None."""
    heights = []
    for _ in range(k // 2):
        ph = (h, h + d, h - d)[code % 3]
        code //= 3
        heights += [ph, ph]
    if k % 2:
        heights.append(0)
    heights[-1] = 0
    rest = n - sum(heights)
    if rest < 1:
        return None
    heights[-1] = rest
    return tuple(heights)


def enumerate_nonuniform_plans(strip, k, m):
    """Plans whose uphill/downhill pairs take heights in {h, h+d, h-d}, d = 1..m.

    The all-h assignment is skipped for each d and the final pile absorbs
    the remainder so heights sum to n; candidates leaving it below 1 are
    dropped.
    """
    n = strip if isinstance(strip, int) else len(strip)
    if k < 2:
        raise ValueError("non-uniform plans need at least 2 piles")
    h = -(-n // k)
    if m >= h:
        raise DeltaTooLarge(f"delta {m} must be below the uniform height {h}")
    for d in range(1, m + 1):
        for code in range(1, 3 ** (k // 2)):
            heights = _nonuniform_heights(n, k, h, d, code)
            if heights is not None:
                yield StackPlan("nonuniform", heights, d)


def sample_nonuniform_plans(n, k, m, budget, rng):
    """Up to ``budget`` distinct non-uniform plans drawn uniformly from the candidate set."""
    h = -(-n // k)
    if m >= h:
        raise DeltaTooLarge(f"delta {m} must be below the uniform height {h}")
    total = nonuniform_candidate_count(k, m)
    if total <= budget:
        return list(enumerate_nonuniform_plans(n, k, m))
    per_d = 3 ** (k // 2) - 1
    picks = set()
    while len(picks) < budget:
        picks.add(rng.randrange(total))
    plans = []
    for idx in sorted(picks):
        d, code = idx // per_d + 1, idx % per_d + 1
        heights = _nonuniform_heights(n, k, h, d, code)
        if heights is not None:
            plans.append(StackPlan("nonuniform", heights, d))
    return plans


def stack_forward_kinematics(strip, plan):
    """Fold ``strip`` into the piles of ``plan``.

    Even piles climb from level 0, odd piles descend back to level 0; a
    flat hinge joins consecutive piles. Raises InfeasibleStacking when a
    descent would not end on level 0 or would pass below it.
    """
    n = len(strip)
    heights = plan.pile_heights
    if sum(heights) != n or min(heights) < 1:
        raise PlanSumMismatch(f"plan heights sum to {sum(heights)}, strip has {n} panels")
    ends = set(np.cumsum(heights)[:-1] - 1)
    cells = np.zeros((n, 2), dtype=np.int64)
    levels = np.zeros(n, dtype=np.int64)
    frames = np.zeros(n, dtype=np.int64)
    lateral_dirs = np.full(max(n - 1, 0), -1, dtype=np.int64)
    moves = []
    frame, cell, z, pile = IDENTITY, np.zeros(2, dtype=np.int64), 0, 0
    for j, hinge in enumerate(strip.hinges):
        if j in ends:
            if pile % 2 and z != 0:
                raise InfeasibleStacking("downhill pile does not return to level 0 "
                                         "(roof levels mismatch)", hinge=j)
            d = int(ACT[frame, hinge.out_slot])
            cell = cell + DIRS[d]
            lateral_dirs[j] = d
            frame = int(MUL[frame, flat_step(hinge.out_slot, hinge.in_slot)])
            moves.append(LATERAL)
            pile += 1
        else:
            z += 1 if pile % 2 == 0 else -1
            if z < 0:
                raise InfeasibleStacking("downhill pile would go below level 0", hinge=j)
            frame = int(MUL[frame, fold_step(hinge.out_slot, hinge.in_slot)])
            moves.append(ABOVE if pile % 2 == 0 else BELOW)
        cells[j + 1], levels[j + 1], frames[j + 1] = cell, z, frame
    if pile % 2 and z != 0:
        raise InfeasibleStacking("last downhill pile does not return to level 0 "
                                 "(roof levels mismatch)", hinge=n - 2)
    for arr in (cells, levels, frames, lateral_dirs):
        arr.setflags(write=False)
    return StackedPlacement(strip, plan, cells, levels, frames, tuple(moves), lateral_dirs)


def _slot_keys(cells, levels):
    """One integer per (x, y, level) slot, or None if the packed range overflows."""
    if len(levels) == 0:
        return np.zeros(0, dtype=np.int64)
    coords = np.column_stack([cells, levels]).astype(np.int64)
    coords -= coords.min(axis=0)
    span = coords.max(axis=0) + 1
    if float(span[0]) * float(span[1]) * float(span[2]) >= 2.0 ** 62:
        return None
    return (coords[:, 0] * span[1] + coords[:, 1]) * span[2] + coords[:, 2]


def validate_stacking(placement):
    """Hash every (cell, level); feasible iff no slot is taken twice.

    Slots are packed into plain integers so the hash pass stays linear.
    Clashes come back as (cell, level, panel indices), ordered by the first
    panel of each slot.
    """
    cells, levels = placement.cells, placement.levels
    keys = _slot_keys(cells, levels)
    if keys is not None:
        key_list = keys.tolist()
        if len(set(key_list)) == len(key_list):
            return StackingVerdict(True)
    else:
        key_list = [(int(c[0]), int(c[1]), int(z)) for c, z in zip(cells, levels)]
    first = {}
    repeats = []
    for p, key in enumerate(key_list):
        if first.setdefault(key, p) != p:
            repeats.append(p)
    if not repeats:
        return StackingVerdict(True)
    # the report allocates many small tuples; cyclic collection would rescan
    # all live objects repeatedly and make this superlinear
    paused = gc.isenabled()
    gc.disable()
    try:
        groups = {}
        for p in repeats:
            q = first[key_list[p]]
            groups.setdefault(q, [q]).append(p)
        cell_list, level_list = np.asarray(cells).tolist(), np.asarray(levels).tolist()
        # ordered by the first panel of each slot, in one linear pass
        out = []
        for q in range(len(key_list)):
            ids = groups.get(q)
            if ids is not None:
                out.append((tuple(cell_list[q]), level_list[q], tuple(ids)))
    finally:
        if paused:
            gc.enable()
    return StackingVerdict(False, tuple(out))


def optimal_compactness_ratio(t, area, mesh_bbox):
    """3 * cbrt(t * area) over the deployed dimension sum."""
    return 3.0 * (t * area) ** (1.0 / 3.0) / float(sum(mesh_bbox))


def compactness_metrics(placement, network, mesh_bbox=None):
    l, t = network.l, network.t
    if mesh_bbox is None:
        mesh_bbox = shell_bbox(network)
    lo, hi = placement.cells.min(axis=0), placement.cells.max(axis=0)
    fx, fy = (int(c) for c in hi - lo + 1)
    levels = int(placement.levels.max()) + 1
    W, D, H = fx * l, fy * l, levels * t
    area = len(network) * l * l
    W_m, D_m, H_m = (float(c) for c in mesh_bbox)
    return CompactnessReport(
        sum_dims=W + D + H,
        CR=optimal_compactness_ratio(t, area, mesh_bbox),
        volume_ratio=W * D * H / (W_m * D_m * H_m),
        footprint=(fx, fy),
        height_levels=levels,
        W_s=W, D_s=D, H_s=H,
    )


def shell_bbox(network):
    """Extent of the deployed shell (the voxel bounding box)."""
    centers = np.array([p.center for p in network.panels])
    return tuple(float(c) for c in centers.max(axis=0) - centers.min(axis=0))


def default_k_candidates(n, l, t):
    """Pile counts up to twice the count whose square footprint gives W = cbrt(t*area)."""
    side = (t * n * l * l) ** (1.0 / 3.0) / l
    k_max = min(n, max(4, int(math.ceil(2 * side * side))))
    return list(range(1, k_max + 1))


def pairs_consistent(heights):
    """Every downhill pile matches the uphill pile before it."""
    return all(heights[i] == heights[i - 1] for i in range(1, len(heights), 2))


class _CycleTables:
    """Frames of all strips of a cycle at once, assuming every hinge folds.

    ``G[i]`` is the product of fold steps over hinges 0..i-1 of the doubled
    cycle, so the all-fold frame of panel j of the strip starting at cycle
    position a is G[a]^-1 G[a+j].
    """

    def __init__(self, cycle):
        n = len(cycle.order)
        self.n = n
        self.out = np.array(cycle.out_slots, dtype=np.int64)
        steps = np.array([fold_step(o, i) for o, i in zip(cycle.out_slots, cycle.in_slots)])
        G = np.zeros(2 * n, dtype=np.int64)
        for i in range(1, 2 * n):
            G[i] = MUL[G[i - 1], steps[(i - 1) % n]]
        self.G = G
        self.starts = (np.arange(n) + 1) % n  # strip start for break index b
        self.G_inv_start = INV[G[self.starts]]

    def pile_cells(self, heights):
        """(n, k, 2) pile cells for every break index, via commuting axis flips.

        Turning a folded hinge at e into a flat one multiplies every later
        frame by the reflection across that hinge line, which is an axis
        reflection in world coordinates; these commute, so only the parity
        of flips per axis has to be carried along.
        """
        n, k = self.n, len(heights)
        cells = np.zeros((n, k, 2), dtype=np.int64)
        flip_x = np.zeros(n, dtype=bool)
        flip_y = np.zeros(n, dtype=bool)
        cur = np.zeros((n, 2), dtype=np.int64)
        e = -1
        for p in range(k - 1):
            e += heights[p]
            frame = MUL[self.G_inv_start, self.G[self.starts + e]]
            w = ACT[frame, self.out[(self.starts + e) % n]]
            on_x = w % 2 == 0
            flip = np.where(on_x, flip_x, flip_y)
            d = np.where(flip, (w + 2) % 4, w)
            cur = cur + DIRS[d]
            cells[:, p + 1] = cur
            flip_x ^= on_x
            flip_y ^= ~on_x
        return cells


def _evaluate_plan(tables, heights, l, t):
    """sum_dims, footprint area and feasibility of ``heights`` at every break index."""
    n = tables.n
    k = len(heights)
    if not pairs_consistent(heights):
        return None
    if k == 1:
        ok = np.ones(n, dtype=bool)
        return ok, np.full(n, 2 * l + t * heights[0]), np.ones(n, dtype=np.int64)
    cells = tables.pile_cells(heights)
    lo, hi = cells.min(axis=1), cells.max(axis=1)
    span = hi - lo + 1
    key = (cells[:, :, 0] - lo[:, None, 0]) * (span[:, None, 1]) + (cells[:, :, 1] - lo[:, None, 1])
    key.sort(axis=1)
    ok = np.all(np.diff(key, axis=1) != 0, axis=1)
    sum_dims = (span[:, 0] + span[:, 1]) * l + t * max(heights)
    return ok, sum_dims, span[:, 0] * span[:, 1]


def candidate_plans(n, k_candidates, m=0, nonuniform_budget=64, seed=0):
    """Uniform plans for each k, then up to ``nonuniform_budget`` sampled non-uniform ones per k."""
    rng = random.Random(seed)
    plans = []
    seen = set()
    for k in sorted(set(k_candidates)):
        if not 1 <= k <= n:
            continue
        plan = assign_uniform_plan(n, k)
        if plan.pile_heights not in seen:
            seen.add(plan.pile_heights)
            plans.append(plan)
        h = -(-n // k)
        if m < 1 or k < 2 or h <= 1:
            continue
        for p in sample_nonuniform_plans(n, k, min(m, h - 1), nonuniform_budget, rng):
            if p.pile_heights not in seen:
                seen.add(p.pile_heights)
                plans.append(p)
    return plans


def search_compactest(cycle, network, k_candidates=None, m=0, nonuniform_budget=64, seed=0,
                      mesh_bbox=None):
    """Feasible stacking of minimum sum_dims over all break points and plans.

    Ties go to the smaller footprint area, then the smaller break index,
    then the earlier plan. All break points of a plan are scored at once;
    the winner is rebuilt by forward kinematics and checked by the
    validator.
    """
    n = len(cycle.order)
    l, t = network.l, network.t
    if k_candidates is None:
        k_candidates = default_k_candidates(n, l, t)
    plans = candidate_plans(n, list(k_candidates) + [1], m, nonuniform_budget, seed)
    tables = _CycleTables(cycle)
    best = None
    evaluated = feasible = 0
    for pi, plan in enumerate(plans):
        evaluated += n
        res = _evaluate_plan(tables, plan.pile_heights, l, t)
        if res is None:
            continue
        ok, sums, areas = res
        feasible += int(ok.sum())
        if not ok.any():
            continue
        idx = np.nonzero(ok)[0]
        keys = np.round(sums[idx], 9)
        order = np.lexsort((idx, areas[idx], keys))
        b = int(idx[order[0]])
        cand = (round(float(sums[b]), 9), int(areas[b]), b, pi)
        if best is None or cand < best:
            best = cand
    _, _, b, pi = best
    strip = break_cycle(cycle, b)
    placement = stack_forward_kinematics(strip, plans[pi])
    verdict = validate_stacking(placement)
    if not verdict.feasible:
        raise AssertionError("vectorized scoring disagrees with forward kinematics")
    report = compactness_metrics(placement, network, mesh_bbox)
    return SearchResult(strip, plans[pi], placement, report, evaluated, feasible)
