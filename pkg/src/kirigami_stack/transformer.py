"""Common stacked shapes shared by several models, and the hinge changes between them.

Two models with the same panel count can fold into the same stack of
slots. Panels are matched by slot (cell, level) after aligning both stacks
to a canonical position, so turning one model into the other only means
cutting and re-joining hinges between stacked panels.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import FaceCountMismatch, InfeasibleStacking, ShapeUnrealizable
from .fold_kinematics import (
    angles_for_placement,
    check_disjoint,
    folded_configuration,
    network_root,
    strip_fk,
    thick_geometry,
)
from .lattice import ACT, MATS
from .stacker import (
    LATERAL,
    _CycleTables,
    assign_uniform_plan,
    break_cycle,
    stack_forward_kinematics,
    validate_stacking,
)
from .stripifier import SolverConfig, find_hamiltonian_cycle


@dataclass(frozen=True, eq=False)
class ModelStacking:
    """One model folded into the common shape, with the map into canonical slots."""

    network: object
    cycle: object
    strip: object
    plan: object
    placement: object
    symmetry: int  # lattice element applied to the cells
    offset: tuple  # subtracted after the symmetry

    def slots(self):
        """Canonical (x, y, level) of every strip position."""
        cells = self.placement.cells @ MATS[self.symmetry].T - np.asarray(self.offset)
        return [(int(c[0]), int(c[1]), int(z)) for c, z in zip(cells, self.placement.levels)]

    def connections(self):
        """Hinges as (slot, slot, side): the world side of the shared edge seen from the first slot."""
        slots = self.slots()
        frames = self.placement.frames
        out = set()
        for j, hinge in enumerate(self.strip.hinges):
            side = int(ACT[self.symmetry, ACT[frames[j], hinge.out_slot]])
            a, b = slots[j], slots[j + 1]
            if b < a:
                a, b = b, a
                if self.placement.moves[j] == LATERAL:
                    side = (side + 2) % 4
            out.add((a, b, side))
        return frozenset(out)


@dataclass(frozen=True)
class CommonStacking:
    shape: tuple  # sorted canonical slots
    models: tuple
    footprint: tuple


@dataclass(frozen=True)
class HingeDiff:
    disconnect: tuple
    connect: tuple


@dataclass(frozen=True)
class TransformReport:
    ok: bool
    message: str = ""
    mismatch: tuple = None


def canonical_alignment(cells, levels):
    """(symmetry, offset, shape) giving the smallest sorted slot list over the 8 lattice maps."""
    best = None
    for g in range(8):
        img = np.asarray(cells) @ MATS[g].T
        lo = img.min(axis=0)
        shape = tuple(sorted((int(c[0] - lo[0]), int(c[1] - lo[1]), int(z)) for c, z in zip(img, levels)))
        if best is None or shape < best[2]:
            best = (g, (int(lo[0]), int(lo[1])), shape)
    return best


def _model_stacking(network, cycle, strip, plan, placement):
    g, offset, shape = canonical_alignment(placement.cells, placement.levels)
    return ModelStacking(network, cycle, strip, plan, placement, g, offset), shape


def _footprint_breaks(cycle, plan, footprint):
    """Break indices whose piles exactly tile a p x q rectangle (either orientation)."""
    p, q = footprint
    tables = _CycleTables(cycle)
    cells = tables.pile_cells(plan.pile_heights)
    lo, hi = cells.min(axis=1), cells.max(axis=1)
    span = hi - lo + 1
    fits = ((span[:, 0] == p) & (span[:, 1] == q)) | ((span[:, 0] == q) & (span[:, 1] == p))
    key = (cells[:, :, 0] - lo[:, None, 0]) * (span[:, None, 1]) + (cells[:, :, 1] - lo[:, None, 1])
    key.sort(axis=1)
    distinct = np.all(np.diff(key, axis=1) != 0, axis=1) if plan.k > 1 else np.ones(len(key), bool)
    return [int(b) for b in np.nonzero(fits & distinct)[0]]


def common_stacking(models, footprint=None, seed=0, budget=8):
    """Fold every model into one shared stack.

    The default 1 x 1 footprint is the single tower, which every strip can
    form. Larger footprints use the uniform plan with p*q piles; the first
    model that tiles the footprint fixes the target shape and every other
    model must reproduce it, trying up to ``budget`` cycles per model.
    """
    models = list(models)
    if not models:
        raise ValueError("need at least one model")
    n = len(models[0])
    for m in models[1:]:
        if len(m) != n:
            raise FaceCountMismatch(f"models have {n} and {len(m)} panels")
    footprint = tuple(footprint or (1, 1))
    k = footprint[0] * footprint[1]
    if k > n:
        raise ShapeUnrealizable(f"footprint {footprint} needs more piles than {n} panels")
    plan = assign_uniform_plan(n, k)
    if plan.k != k:
        raise ShapeUnrealizable(f"{n} panels cannot fill {k} piles of height {math.ceil(n / k)}")
    target = None
    stacked = []
    for mi, network in enumerate(models):
        found = None
        for attempt in range(budget):
            cycle = find_hamiltonian_cycle(network, SolverConfig(seed=seed + attempt))
            breaks = [0] if k == 1 else _footprint_breaks(cycle, plan, footprint)
            for b in breaks:
                strip = break_cycle(cycle, b)
                try:
                    placement = stack_forward_kinematics(strip, plan)
                except InfeasibleStacking:
                    continue
                if not validate_stacking(placement).feasible:
                    continue
                ms, shape = _model_stacking(network, cycle, strip, plan, placement)
                if target is None or shape == target:
                    target = shape
                    found = ms
                    break
            if found is not None or k == 1:
                break
        if found is None:
            raise ShapeUnrealizable(f"model {mi} has no placement matching footprint {footprint}")
        stacked.append(found)
    return CommonStacking(target, tuple(stacked), footprint)


def _shape_symmetries(shape):
    """Lattice maps (with offsets) carrying the canonical shape onto itself."""
    cells = np.array([s[:2] for s in shape])
    levels = [s[2] for s in shape]
    out = []
    for g in range(8):
        img = cells @ MATS[g].T
        lo = img.min(axis=0)
        moved = tuple(sorted((int(c[0] - lo[0]), int(c[1] - lo[1]), z) for c, z in zip(img, levels)))
        if moved == shape:
            out.append((g, lo))
    return out


def _transform_connections(conns, g, lo):
    m = MATS[g]

    def slot(s):
        c = m @ np.array(s[:2])
        return (int(c[0] - lo[0]), int(c[1] - lo[1]), s[2])

    out = set()
    for a, b, side in conns:
        ta, tb, ts = slot(a), slot(b), int(ACT[g, side])
        if tb < ta:
            ta, tb = tb, ta
            if a[:2] != b[:2]:
                ts = (ts + 2) % 4
        out.add((ta, tb, ts))
    return frozenset(out)


def _diff(ci, cj):
    return HingeDiff(tuple(sorted(ci - cj)), tuple(sorted(cj - ci)))


def aligned_connections(cs, i, j):
    """Connections of models i and j in one frame, using the shape symmetry with fewest changes.

    The symmetry is always chosen on the ordered pair (min, max) and applied
    to the later model, so swapping i and j swaps the two sets exactly.
    """
    lo_i, hi_i = min(i, j), max(i, j)
    ca = cs.models[lo_i].connections()
    cb = cs.models[hi_i].connections()
    best = None
    for g, lo in _shape_symmetries(cs.shape):
        tb = _transform_connections(cb, g, lo)
        d = _diff(ca, tb)
        key = (len(d.disconnect) + len(d.connect), d.disconnect, d.connect)
        if best is None or key < best[0]:
            best = (key, tb)
    if best is not None:
        cb = best[1]
    return (ca, cb) if i <= j else (cb, ca)


def hinge_diff(cs, i, j):
    """Connections to cut and to add so model i's strip becomes model j's."""
    return _diff(*aligned_connections(cs, i, j))


def apply_diff(connections, diff):
    return (frozenset(connections) - set(diff.disconnect)) | set(diff.connect)


def verify_transform(cs, i, j, diff=None, tol=1e-9):
    """Fold model i into the common stack, rewire it, and unfold it as model j.

    Checks slab disjointness at model i's folded and stacked states, that
    the rewired hinges equal model j's, that model j's stack occupies the
    same slots, and that unfolding with model j's angles rebuilds its shell.
    """
    mi, mj = cs.models[i], cs.models[j]
    for label, ms in (("source", mi), ("target", mj)):
        net = ms.network
        t, l = net.t, net.l
        folded = strip_fk(ms.strip, folded_configuration(ms.strip, t, l),
                          root=network_root(net, ms.strip.order[0]))
        rep = check_disjoint(thick_geometry(folded))
        if not rep.disjoint:
            return TransformReport(False, f"{label} folded state self-intersects", rep.collisions[0][:2])
        stacked = strip_fk(ms.strip, angles_for_placement(ms.strip, ms.placement, t, l))
        rep = check_disjoint(thick_geometry(stacked))
        if not rep.disjoint:
            return TransformReport(False, f"{label} stacked state self-intersects", rep.collisions[0][:2])
        expect = np.column_stack([ms.placement.cells * l, ms.placement.levels * t])
        if np.abs(stacked.centers - expect).max() > tol * max(l, 1.0):
            return TransformReport(False, f"{label} stacked state leaves its slots")
        ref = np.array([net.panels[p].center for p in ms.strip.order])
        err = np.abs(folded.centers - ref).max()
        if err > tol * max(l, 1.0):
            return TransformReport(False, f"{label} folded state misses its shell by {err:.3g}")
    if sorted(mi.slots()) != sorted(mj.slots()):
        return TransformReport(False, "models occupy different stacked slots")
    source, target = aligned_connections(cs, i, j)
    d = _diff(source, target) if diff is None else diff
    rewired = apply_diff(source, d)
    if rewired != target:
        bad = sorted(rewired ^ target)[0]
        where = "missing" if bad in target else "unexpected"
        return TransformReport(False, f"{where} connection {bad} after rewiring", bad)
    return TransformReport(True, "ok")
