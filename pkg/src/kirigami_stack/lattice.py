"""The 8 signed axis-aligned maps of the square lattice (dihedral group D4).

Elements are small integers indexing ``MATS``. Directions are indexed
0:+x, 1:+y, 2:-x, 3:-y, which is also the panel edge-slot order
(0:+u, 1:+v, 2:-u, 3:-v), so a group element acting on a slot gives the
world direction of that edge.
"""

import numpy as np

DIRS = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=np.int64)
DIR_NAMES = ("+x", "+y", "-x", "-y")


def _build():
    mats = []
    r = np.array([[0, -1], [1, 0]])
    s = np.array([[1, 0], [0, -1]])
    m = np.eye(2, dtype=int)
    for _ in range(4):
        mats.append(m.copy())
        m = r @ m
    for k in range(4):
        mats.append(np.linalg.matrix_power(r, k) @ s)
    mats = [np.asarray(a, dtype=np.int64) for a in mats]
    key = {tuple(a.ravel()): i for i, a in enumerate(mats)}
    mul = np.array([[key[tuple((a @ b).ravel())] for b in mats] for a in mats])
    inv = np.array([key[tuple(np.round(np.linalg.inv(a)).astype(np.int64).ravel())] for a in mats])
    dkey = {tuple(d): i for i, d in enumerate(DIRS)}
    act = np.array([[dkey[tuple(a @ d)] for d in DIRS] for a in mats])
    det = np.array([int(round(np.linalg.det(a))) for a in mats])
    return np.stack(mats), key, mul, inv, act, det


MATS, _KEY, MUL, INV, ACT, DET = _build()
IDENTITY = 0


def rotation(quarter_turns):
    """Counter-clockwise rotation by ``quarter_turns`` * 90 degrees."""
    return quarter_turns % 4


def axis_reflection(direction):
    """Reflection negating the axis that ``direction`` lies on."""
    if direction % 2 == 0:
        return _KEY[(-1, 0, 0, 1)]
    return _KEY[(1, 0, 0, -1)]


def element_of(matrix):
    return _KEY[tuple(np.asarray(matrix, dtype=np.int64).ravel())]


AXIS_REFLECTION = np.array([axis_reflection(d) for d in range(4)])


def flat_step(out_slot, in_slot):
    """Frame change across a hinge left flat (lateral move).

    The downstream panel is rotated so its in-edge faces back toward the
    upstream panel's out-edge.
    """
    return rotation((out_slot + 2 - in_slot) % 4)


def fold_step(out_slot, in_slot):
    """Frame change across a hinge folded by +-pi (stacking move).

    Equal to the flat step followed by reflection across the hinge line,
    expressed in the upstream panel's local frame.
    """
    return int(MUL[AXIS_REFLECTION[out_slot], flat_step(out_slot, in_slot)])


def dihedral_images(cells):
    """All 8 lattice-symmetry images of a cell array (shape (m, 2))."""
    cells = np.asarray(cells, dtype=np.int64)
    return [cells @ MATS[g].T for g in range(8)]
