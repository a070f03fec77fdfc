import itertools

import numpy as np
import pytest

from kirigami_stack.shapes import box_mesh, enumerate_polycubes, icosphere, polycube_mesh, random_polycube
from kirigami_stack.voxel_surface import VoxelGrid, extract_outer_shell, voxelize_surface

# published counts of free polycubes up to rotation (n = 1..8)
KNOWN_COUNTS = [1, 1, 2, 8, 29, 166, 1023, 6922]


def proper_rotations():
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = np.zeros((3, 3), dtype=int)
            for i, j in enumerate(perm):
                m[i, j] = signs[i]
            if round(np.linalg.det(m)) == 1:
                mats.append(m)
    return mats


def naive_count(max_cells):
    rots = proper_rotations()

    def canon(cells):
        best = None
        arr = np.array(sorted(cells))
        for m in rots:
            img = arr @ m.T
            img = img - img.min(axis=0)
            key = tuple(sorted(map(tuple, img.tolist())))
            best = key if best is None or key < best else best
        return best

    level = {canon({(0, 0, 0)})}
    counts = [1]
    steps = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    for _ in range(max_cells - 1):
        nxt = set()
        for shape in level:
            cells = set(shape)
            for c in shape:
                for d in steps:
                    q = (c[0] + d[0], c[1] + d[1], c[2] + d[2])
                    if q not in cells:
                        nxt.add(canon(cells | {q}))
        level = nxt
        counts.append(len(level))
    return counts


def test_enumeration_matches_naive_oracle():
    got = enumerate_polycubes(6)
    assert [len(got[k]) for k in range(1, 7)] == naive_count(6) == KNOWN_COUNTS[:6]


@pytest.mark.slow
def test_enumeration_known_counts():
    got = enumerate_polycubes(8)
    assert [len(got[k]) for k in range(1, 9)] == KNOWN_COUNTS


def test_random_polycube_is_face_connected():
    rng = np.random.default_rng(1)
    for size in (1, 5, 17, 30):
        cells = set(map(tuple, random_polycube(rng, size)))
        assert len(cells) == size
        seen, stack = set(), [next(iter(cells))]
        while stack:
            c = stack.pop()
            if c in seen:
                continue
            seen.add(c)
            stack += [q for q in cells if sum(abs(a - b) for a, b in zip(c, q)) == 1]
        assert seen == cells


def test_meshes_are_closed():
    for mesh in (box_mesh((2, 3, 4)), icosphere(2, 1.5), polycube_mesh([(0, 0, 0), (1, 0, 0)])):
        edges = {}
        for tri in mesh.triangles.tolist():
            for i in range(3):
                e = (tri[i], tri[(i + 1) % 3])
                edges[e] = edges.get(e, 0) + 1
        assert all(edges.get((b, a)) == 1 for a, b in edges)
        assert mesh.signed_volume() > 0


def test_polycube_mesh_voxelizes_back():
    cells = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (1, 1, 1)]
    grid = voxelize_surface(polycube_mesh(cells), 2)
    assert len(extract_outer_shell(grid)) == len(extract_outer_shell(VoxelGrid.from_cells(cells)))
