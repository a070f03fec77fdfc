"""Thick-panel strip kinematics, slab geometry and self-intersection checks.

Each hinge between two panels is a pair of parallel sub-crease lines that
each turn by half the hinge angle, joined by a connector whose length
follows the variable hinge law. Sub-crease lines sit (l - t)/2 from the
panel centers, so the flat strip keeps its l spacing, the folding stage
matches zero-thickness folding exactly, and at +-pi two panels stack one
thickness apart.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.spatial import cKDTree

from .errors import AngleOutOfRange, InfeasiblePlacement, LengthMismatch
from .lattice import DET, MATS
from .stacker import ABOVE, BELOW, LATERAL, validate_stacking

_ANGLE_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class FoldConfiguration:
    angles: np.ndarray
    t: float
    l: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if a.size and np.max(np.abs(a)) > math.pi + _ANGLE_EPS:
            raise AngleOutOfRange(f"hinge angle {a[np.argmax(np.abs(a))]} outside [-pi, pi]")
        a = np.clip(a, -math.pi, math.pi)
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)

    def __len__(self):
        return len(self.angles)


@dataclass(frozen=True, eq=False)
class ChainPose:
    """Ideal panels and hinge connectors of a strip at one configuration."""

    centers: np.ndarray  # (n, 3)
    frames: np.ndarray  # (n, 3, 3), columns u, v, n
    connectors: np.ndarray  # (n-1, 4, 3) corner points of each connector ribbon
    connector_lengths: np.ndarray  # (n-1,)
    l: float
    t: float


@dataclass(frozen=True, eq=False)
class SlabSet:
    centers: np.ndarray  # (n, 3)
    frames: np.ndarray  # (n, 3, 3)
    half_extents: np.ndarray  # (3,) shared by every slab
    connectors: np.ndarray
    connector_lengths: np.ndarray

    def __len__(self):
        return len(self.centers)

    def corners(self):
        """(n, 8, 3) box corners."""
        signs = np.array([[sx, sy, sz] for sz in (-1, 1) for sy in (-1, 1) for sx in (-1, 1)], float)
        local = signs * self.half_extents
        return self.centers[:, None, :] + np.einsum("nij,kj->nki", self.frames, local)


@dataclass(frozen=True)
class DisjointReport:
    disjoint: bool
    max_penetration: float
    collisions: tuple = ()  # ((i, j, penetration), ...)


def hinge_length(theta, t):
    """Connector length for hinge angle ``theta`` (radians) and thickness ``t``.

    Folding stage (|theta| <= pi/2): t cos(theta/2), exactly what keeps the
    panels where zero-thickness folding puts them. Stacking stage: grows
    from sqrt(2)t/2 back to t as (sqrt(2)/2) t / cos((|theta| - pi/2)/2).
    Accepts scalars or arrays.
    """
    th = np.asarray(theta, dtype=float)
    if np.any(np.abs(th) > math.pi + _ANGLE_EPS):
        raise AngleOutOfRange("hinge angle outside [-pi, pi]")
    a = np.minimum(np.abs(th), math.pi)
    folding = np.cos(a / 2) * t
    stacking = (math.sqrt(2) / 2) * t / np.cos((a - math.pi / 2) / 2)
    h = np.where(a <= math.pi / 2, folding, stacking)
    return float(h) if h.ndim == 0 else h


def _slot_dir(frame, slot):
    col = frame[:, slot % 2]
    return col if slot < 2 else -col


def strip_fk(strip, config, root=None):
    """Place every ideal panel of ``strip`` at hinge angles ``config``.

    ``root`` is (center, frame) for panel 0, default the origin with the
    identity frame. A positive angle folds the next panel toward the back
    (-n) side of the current one.
    """
    n = len(strip.order)
    if len(config) != n - 1:
        raise LengthMismatch(f"{len(config)} angles for a strip with {n - 1} hinges")
    l, t = config.l, config.t
    a = (l - t) / 2
    w = (l - 2 * t) / 2
    lengths = hinge_length(config.angles, t) if n > 1 else np.zeros(0)
    lengths = np.atleast_1d(lengths)
    centers = np.zeros((n, 3))
    frames = np.zeros((n, 3, 3))
    connectors = np.zeros((max(n - 1, 0), 4, 3))
    if root is None:
        c, R = np.zeros(3), np.eye(3)
    else:
        c, R = np.asarray(root[0], dtype=float), np.asarray(root[1], dtype=float)
    centers[0], frames[0] = c, R
    for j, hinge in enumerate(strip.hinges):
        nrm = R[:, 2]
        e = _slot_dir(R, hinge.out_slot)
        axis = np.cross(nrm, e)
        th = config.angles[j]
        h = lengths[j]
        e1 = e * math.cos(th / 2) - nrm * math.sin(th / 2)
        e2 = e * math.cos(th) - nrm * math.sin(th)
        n2 = nrm * math.cos(th) + e * math.sin(th)
        p1 = c + a * e
        p2 = p1 + h * e1
        connectors[j] = (p1 - w * axis, p1 + w * axis, p2 + w * axis, p2 - w * axis)
        c = p2 + a * e2
        # the in-edge of the next panel points back across the hinge
        u = -e2
        for _ in range((4 - hinge.in_slot) % 4):
            u = np.cross(n2, u)
        R = np.column_stack((u, np.cross(n2, u), n2))
        centers[j + 1], frames[j + 1] = c, R
    return ChainPose(centers, frames, connectors, lengths, l, t)


def thick_geometry(pose):
    """Trimmed (l-2t) x (l-2t) x t slabs centered on the ideal panels."""
    l, t = pose.l, pose.t
    half = np.array([(l - 2 * t) / 2, (l - 2 * t) / 2, t / 2])
    return SlabSet(pose.centers, pose.frames, half, pose.connectors, pose.connector_lengths)


def _sat_penetration(ca, Ra, cb, Rb, half):
    """Smallest overlap over the 15 separating axes for box pairs (vectorized).

    Negative or small values mean the boxes are apart or just touching.
    """
    d = cb - ca
    axes = [Ra[:, :, i] for i in range(3)] + [Rb[:, :, i] for i in range(3)]
    for i in range(3):
        for j in range(3):
            axes.append(np.cross(Ra[:, :, i], Rb[:, :, j]))
    best = np.full(len(d), np.inf)
    for ax in axes:
        norm = np.linalg.norm(ax, axis=1)
        ok = norm > 1e-9
        unit = np.where(ok[:, None], ax / np.where(ok, norm, 1.0)[:, None], 0.0)
        ra = np.sum(np.abs(np.einsum("pji,pj->pi", Ra, unit)) * half, axis=1)
        rb = np.sum(np.abs(np.einsum("pji,pj->pi", Rb, unit)) * half, axis=1)
        overlap = ra + rb - np.abs(np.sum(d * unit, axis=1))
        best = np.where(ok, np.minimum(best, overlap), best)
    return best


def check_disjoint(slabs, clearance_tol=None):
    """Pairwise oriented-box test; pairs penetrating deeper than ``clearance_tol`` collide.

    Candidate pairs come from a k-d tree over slab centers within twice the
    slab circumradius.
    """
    n = len(slabs)
    half = slabs.half_extents
    if clearance_tol is None:
        clearance_tol = 1e-6 * float(2 * half[0] + 2 * half[2] * 2)
    if n < 2:
        return DisjointReport(True, 0.0)
    radius = 2 * float(np.linalg.norm(half)) + 1e-9
    pairs = cKDTree(slabs.centers).query_pairs(radius, output_type="ndarray")
    if len(pairs) == 0:
        return DisjointReport(True, 0.0)
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    i, j = pairs[:, 0], pairs[:, 1]
    pen = _sat_penetration(slabs.centers[i], slabs.frames[i], slabs.centers[j], slabs.frames[j], half)
    bad = pen > clearance_tol
    worst = float(max(pen.max(), 0.0))
    hits = tuple((int(a), int(b), float(p)) for a, b, p in zip(i[bad], j[bad], pen[bad]))
    return DisjointReport(not hits, worst, hits)


def interpolate_configuration(start, end, s):
    if len(start) != len(end):
        raise LengthMismatch(f"configurations have {len(start)} and {len(end)} hinges")
    angles = (1 - s) * np.asarray(start.angles) + s * np.asarray(end.angles)
    return FoldConfiguration(angles, end.t, end.l)


def folded_configuration(strip, t, l=1.0):
    """Hinge angles that close the strip back onto the voxel shell."""
    return FoldConfiguration(np.array([h.dihedral for h in strip.hinges]), t, l)


def angles_for_placement(strip, placement, t, l=1.0):
    """Hinge angles realizing a stacked placement.

    Moving up off a face-up panel folds toward its front, which is -pi in
    this sign convention; face-down panels and downward moves flip the
    sign. Flat hinges stay at 0.
    """
    if placement.n != len(strip.order) or tuple(placement.strip.order) != tuple(strip.order):
        raise InfeasiblePlacement("placement does not belong to this strip")
    if not validate_stacking(placement).feasible:
        raise InfeasiblePlacement("placement has colliding panels")
    up = DET[placement.frames] > 0
    angles = np.zeros(len(placement.moves))
    for j, move in enumerate(placement.moves):
        if move == LATERAL:
            continue
        sign = -1.0 if (move == ABOVE) == bool(up[j]) else 1.0
        if move not in (ABOVE, BELOW):
            raise InfeasiblePlacement(f"unknown move {move!r} at hinge {j}")
        angles[j] = sign * math.pi
    return FoldConfiguration(angles, t, l)


def placement_frames_3d(placement):
    """3D frames implied by the discrete placement (for round-trip checks)."""
    out = np.zeros((placement.n, 3, 3))
    for p, g in enumerate(placement.frames):
        m = MATS[g]
        out[p, :2, 0] = m[:, 0]
        out[p, :2, 1] = m[:, 1]
        out[p, 2, 2] = DET[g]
    return out


def network_root(network, panel):
    center, u, v, n = network.frame(panel)
    return center, np.column_stack((u, v, n))
