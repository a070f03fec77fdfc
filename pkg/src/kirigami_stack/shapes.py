"""Fixture geometry: boxes, icospheres, polycubes."""

import itertools

import numpy as np

from .voxel_surface import FACE_AXES, FACE_DIRS, TriangleMesh, VoxelGrid, extract_outer_shell


def box_mesh(size=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
    """Closed, outward-wound 12-triangle box."""
    sx, sy, sz = size
    ox, oy, oz = origin
    v = np.array(
        [[x, y, z] for z in (0, sz) for y in (0, sy) for x in (0, sx)], dtype=float
    ) + [ox, oy, oz]
    quads = [
        (0, 2, 3, 1),  # -z
        (4, 5, 7, 6),  # +z
        (0, 1, 5, 4),  # -y
        (2, 6, 7, 3),  # +y
        (0, 4, 6, 2),  # -x
        (1, 3, 7, 5),  # +x
    ]
    tris = []
    for a, b, c, d in quads:
        tris += [(a, b, c), (a, c, d)]
    return TriangleMesh.from_arrays(v, tris)


def icosphere(subdivisions=3, radius=1.0, center=(0.0, 0.0, 0.0)):
    phi = (1 + 5 ** 0.5) / 2
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(p, dtype=float) / np.linalg.norm(p) for p in verts]
    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.array(verts) * radius + np.asarray(center, dtype=float)
    return TriangleMesh.from_arrays(v, faces)


def polycube_mesh(cells):
    """Triangulated outer surface of a polycube (two triangles per shell face)."""
    grid = VoxelGrid.from_cells(cells)
    lo = np.asarray(grid.origin)
    verts = {}
    tris = []

    def vid(p):
        key = tuple(int(round(c)) for c in p)
        if key not in verts:
            verts[key] = len(verts)
        return verts[key]

    for voxel, d in sorted(extract_outer_shell(grid)):
        n = FACE_DIRS[d]
        u, v = FACE_AXES[d]
        c = np.asarray(voxel) + lo + 0.5 + 0.5 * n
        corners = [c + 0.5 * (su * u + sv * v) for su, sv in ((-1, -1), (1, -1), (1, 1), (-1, 1))]
        ids = [vid(p) for p in corners]
        tris += [(ids[0], ids[1], ids[2]), (ids[0], ids[2], ids[3])]
    coords = np.array(sorted(verts, key=verts.get), dtype=float)
    return TriangleMesh.from_arrays(coords, tris)


_NEIGHBOR_OFFSETS = [tuple(int(c) for c in d) for d in FACE_DIRS]


def _rotations():
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = np.zeros((3, 3), dtype=np.int64)
            for r, (c, s) in enumerate(zip(perm, signs)):
                m[r, c] = s
            if round(np.linalg.det(m)) == 1:
                mats.append(m)
    return mats


ROTATIONS = _rotations()


def canonical_polycube(cells):
    """Rotation-invariant key: smallest sorted, origin-translated image over the 24 rotations."""
    arr = np.asarray(list(cells), dtype=np.int64)
    best = None
    for m in ROTATIONS:
        img = arr @ m.T
        img -= img.min(axis=0)
        key = tuple(sorted(map(tuple, img.tolist())))
        if best is None or key < best:
            best = key
    return best


def enumerate_polycubes(max_cells):
    """Free polycubes (up to rotation) of every size 1..max_cells, as {size: [cells, ...]}."""
    levels = {1: [((0, 0, 0),)]}
    for size in range(2, max_cells + 1):
        seen = set()
        for shape in levels[size - 1]:
            occupied = set(shape)
            for c in shape:
                for d in _NEIGHBOR_OFFSETS:
                    nc = (c[0] + d[0], c[1] + d[1], c[2] + d[2])
                    if nc not in occupied:
                        seen.add(canonical_polycube(occupied | {nc}))
        levels[size] = sorted(seen)
    return levels


def random_polycube(rng, size):
    """Grow a face-connected polycube of ``size`` cells by random accretion."""
    cells = [(0, 0, 0)]
    occupied = {(0, 0, 0)}
    while len(cells) < size:
        c = cells[rng.integers(len(cells))]
        d = _NEIGHBOR_OFFSETS[rng.integers(6)]
        nc = (c[0] + d[0], c[1] + d[1], c[2] + d[2])
        if nc not in occupied:
            occupied.add(nc)
            cells.append(nc)
    return cells
