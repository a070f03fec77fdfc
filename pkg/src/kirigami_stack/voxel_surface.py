"""Voxel-shell tessellation of a triangle mesh into identical square panels."""

from collections import deque
from dataclasses import dataclass
import math

import numpy as np
from scipy import ndimage

from .errors import (
    DisconnectedShell,
    EmptyMesh,
    NoShell,
    NonManifoldUnresolvable,
    ResolutionTooLow,
    ThicknessTooLarge,
)

FACE_NAMES = ("+x", "-x", "+y", "-y", "+z", "-z")
FACE_DIRS = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=np.int64
)
# (u, v) in-plane axes per face direction, u x v = outward normal
FACE_AXES = np.array(
    [
        [[0, 1, 0], [0, 0, 1]],
        [[0, 0, 1], [0, 1, 0]],
        [[0, 0, 1], [1, 0, 0]],
        [[1, 0, 0], [0, 0, 1]],
        [[1, 0, 0], [0, 1, 0]],
        [[0, 1, 0], [1, 0, 0]],
    ],
    dtype=np.int64,
)
_DIR_INDEX = {tuple(d): i for i, d in enumerate(FACE_DIRS)}

SURFACE, INTERIOR, EXTERIOR = 1, 2, 3

CONVEX = math.pi / 2
FLAT = 0.0
CONCAVE = -math.pi / 2


def dir_index(vec):
    return _DIR_INDEX[tuple(int(c) for c in vec)]


def slot_vector(face_dir, slot):
    """Integer 3D direction of edge ``slot`` (0:+u, 1:+v, 2:-u, 3:-v)."""
    axis = FACE_AXES[face_dir][slot % 2]
    return axis if slot < 2 else -axis


def slot_of(face_dir, vec):
    for s in range(4):
        if tuple(slot_vector(face_dir, s)) == tuple(vec):
            return s
    raise ValueError(f"{vec} is not in the plane of face {FACE_NAMES[face_dir]}")


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertices: np.ndarray  # (N, 3) float
    triangles: np.ndarray  # (M, 3) int

    @classmethod
    def from_arrays(cls, vertices, triangles):
        """Validate indices, drop zero-area triangles, and freeze the arrays."""
        v = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite vertex coordinates")
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("triangle index out of range")
        if len(f):
            a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
            area2 = np.linalg.norm(np.cross(b - a, c - a), axis=1)
            f = f[area2 > 1e-14 * max(1.0, float(np.abs(v).max()) ** 2)]
        if len(f) == 0:
            raise EmptyMesh("mesh has no non-degenerate triangles")
        v.setflags(write=False)
        f.setflags(write=False)
        mesh = cls(v, f)
        if np.any(mesh.bbox <= 0):
            raise EmptyMesh(f"mesh bounding box is degenerate: {tuple(mesh.bbox)}")
        return mesh

    @property
    def bbox_min(self):
        return self.vertices[np.unique(self.triangles)].min(axis=0)

    @property
    def bbox_max(self):
        return self.vertices[np.unique(self.triangles)].max(axis=0)

    @property
    def bbox(self):
        """World extents (W_m, D_m, H_m)."""
        return self.bbox_max - self.bbox_min

    def signed_volume(self):
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Occupancy of an (nx, ny, nz) grid; cells outside the grid count as exterior."""

    occupancy: np.ndarray  # int8 codes SURFACE / INTERIOR / EXTERIOR
    cell_size: float
    origin: tuple

    @property
    def dims(self):
        return tuple(int(d) for d in self.occupancy.shape)

    @property
    def solid(self):
        return self.occupancy != EXTERIOR

    def count(self, code):
        return int(np.count_nonzero(self.occupancy == code))

    @classmethod
    def from_cells(cls, cells, cell_size=1.0):
        """Grid whose surface cells are exactly ``cells`` (integer triples)."""
        cells = np.asarray(sorted(set(map(tuple, cells))), dtype=np.int64).reshape(-1, 3)
        if len(cells) == 0:
            raise EmptyMesh("no cells")
        lo = cells.min(axis=0)
        dims = cells.max(axis=0) - lo + 1
        surface = np.zeros(tuple(dims), dtype=bool)
        surface[tuple((cells - lo).T)] = True
        origin = tuple(float(x) * cell_size for x in lo)
        return cls(_classify(surface), float(cell_size), origin)


def _classify(surface):
    padded = np.pad(surface, 1, constant_values=False)
    labels, _ = ndimage.label(~padded)  # default structure is 6-connected
    exterior = (labels == labels[0, 0, 0])[1:-1, 1:-1, 1:-1]
    occ = np.full(surface.shape, INTERIOR, dtype=np.int8)
    occ[exterior] = EXTERIOR
    occ[surface] = SURFACE
    return occ


def _sat_overlap(tri, centers, half, axes):
    """Boolean mask of boxes (centers, uniform half size) overlapping ``tri`` on all axes."""
    rel = tri[None, :, :] - centers[:, None, :]
    ok = np.ones(len(centers), dtype=bool)
    for a in axes:
        norm = np.abs(a).sum()
        if norm < 1e-12:
            continue
        p = rel @ a
        r = half * norm
        ok &= (p.min(axis=1) <= r) & (p.max(axis=1) >= -r)
    return ok


def _tri_axes(tri):
    e = [tri[1] - tri[0], tri[2] - tri[1], tri[0] - tri[2]]
    n = np.cross(e[0], e[1])
    axes = [np.eye(len(n))[i] for i in range(len(n))]
    if len(n) == 3:
        axes.append(n)
        for i in range(3):
            for j in range(3):
                axes.append(np.cross(np.eye(3)[i], e[j]))
    return axes


def voxelize_surface(mesh, resolution):
    """Conservatively rasterize ``mesh`` into a grid with ``resolution`` cells along its longest axis.

    A cell is surface if any triangle meets its interior. Triangles lying
    exactly in a grid plane are assigned to the cell behind them (against the
    outward normal) so that axis-aligned input reproduces its own voxels.
    Everything not reachable from the grid boundary through non-surface cells
    is interior.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    ext = mesh.bbox
    cell = float(ext.max()) / resolution
    dims = np.maximum(1, np.ceil(ext / cell - 1e-9).astype(np.int64))
    origin = mesh.bbox_min
    verts = (mesh.vertices - origin) / cell
    orient = 1.0 if mesh.signed_volume() >= 0 else -1.0
    surface = np.zeros(tuple(dims), dtype=bool)
    eps = 1e-7
    half = 0.5 - eps

    for tri_idx in mesh.triangles:
        tri = verts[tri_idx]
        lo = np.clip(np.floor(tri.min(axis=0) - eps).astype(np.int64), 0, dims - 1)
        hi = np.clip(np.floor(tri.max(axis=0) + eps).astype(np.int64), 0, dims - 1)
        planar_axis = None
        for a in range(3):
            c = tri[:, a]
            g = round(float(c[0]))
            if np.all(np.abs(c - g) < 1e-9):
                planar_axis = (a, g)
                break
        if planar_axis is not None:
            a, g = planar_axis
            normal = orient * np.cross(tri[1] - tri[0], tri[2] - tri[0])[a]
            layer = g - 1 if normal > 0 else g
            layer = min(max(layer, 0), dims[a] - 1)
            others = [b for b in range(3) if b != a]
            t2 = tri[:, others]
            grids = np.meshgrid(*(np.arange(lo[b], hi[b] + 1) for b in others), indexing="ij")
            idx2 = np.stack([gr.ravel() for gr in grids], axis=1)
            mask = _sat_overlap(t2, idx2 + 0.5, half, _tri_axes_2d(t2))
            hit = idx2[mask]
            full = np.empty((len(hit), 3), dtype=np.int64)
            full[:, a] = layer
            full[:, others] = hit
        else:
            grids = np.meshgrid(*(np.arange(lo[b], hi[b] + 1) for b in range(3)), indexing="ij")
            idx = np.stack([gr.ravel() for gr in grids], axis=1)
            mask = _sat_overlap(tri, idx + 0.5, half, _tri_axes(tri))
            full = idx[mask]
        if len(full):
            surface[tuple(full.T)] = True

    grid = VoxelGrid(_classify(surface), cell, tuple(float(x) for x in origin))
    if grid.count(SURFACE) == 0:
        raise ResolutionTooLow("rasterization produced no surface cells")
    if len(_shell_faces(grid)) < 6:
        raise ResolutionTooLow("voxel shell has fewer than 6 faces")
    return grid


def _tri_axes_2d(tri2):
    axes = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    for i in range(3):
        e = tri2[(i + 1) % 3] - tri2[i]
        axes.append(np.array([-e[1], e[0]]))
    return axes


def _shell_faces(grid):
    solid = np.pad(grid.solid, 1, constant_values=False)
    exterior = ~solid
    faces = []
    core = tuple(slice(1, -1) for _ in range(3))
    for d, vec in enumerate(FACE_DIRS):
        shifted = np.roll(exterior, tuple(-int(c) for c in vec), axis=(0, 1, 2))
        hit = solid[core] & shifted[core]
        for ijk in zip(*np.nonzero(hit)):
            faces.append((tuple(int(c) for c in ijk), d))
    return faces


def extract_outer_shell(grid):
    """Faces between a solid cell and an exterior cell, as a frozenset of ((i, j, k), face_dir).

    Internal cavities are solid by construction of the grid, so their faces
    never appear.
    """
    faces = _shell_faces(grid)
    if not faces:
        raise NoShell("grid has no exterior-facing faces")
    return frozenset(faces)


@dataclass(frozen=True)
class Panel:
    id: int
    voxel: tuple
    face_dir: int
    center: tuple
    normal: tuple


@dataclass(frozen=True, eq=False)
class PanelNetwork:
    """Identical square panels with exactly four edge-neighbors each.

    ``neighbors[p, s]`` is the panel across edge slot ``s`` of panel ``p``,
    ``back_slot[p, s]`` the slot of the same edge on that neighbor,
    ``edge_ids[p, s]`` the shared-edge id and ``dihedral[p, s]`` the
    folded-state angle (+pi/2 convex, 0 flat, -pi/2 concave).
    """

    panels: tuple
    neighbors: np.ndarray
    back_slot: np.ndarray
    edge_ids: np.ndarray
    dihedral: np.ndarray
    edges: tuple  # edge id -> (panel_a, slot_a, panel_b, slot_b), panel_a < panel_b
    l: float
    t: float
    origin: tuple = (0.0, 0.0, 0.0)

    def __len__(self):
        return len(self.panels)

    @property
    def n_edges(self):
        return len(self.edges)

    def slot_between(self, a, b):
        hits = np.nonzero(self.neighbors[a] == b)[0]
        if len(hits) != 1:
            raise KeyError(f"panels {a} and {b} are not adjacent")
        return int(hits[0])

    def edge_between(self, a, b):
        return int(self.edge_ids[a, self.slot_between(a, b)])

    def frame(self, p):
        """(center, u, v, n) of panel ``p`` in world coordinates."""
        d = self.panels[p].face_dir
        u, v = FACE_AXES[d].astype(float)
        return np.array(self.panels[p].center), u, v, FACE_DIRS[d].astype(float)

    def faces(self):
        return [(p.voxel, p.face_dir) for p in self.panels]


def _neighbor_face(faces, voxel, d, slot):
    n = FACE_DIRS[d]
    e = slot_vector(d, slot)
    v = np.asarray(voxel)
    concave = (tuple(v + n + e), dir_index(-e))
    if concave in faces:
        return concave, slot_of(concave[1], -n), CONCAVE
    flat = (tuple(v + e), d)
    if flat in faces:
        return flat, slot_of(d, -e), FLAT
    convex = (tuple(v), dir_index(e))
    if convex in faces:
        return convex, slot_of(convex[1], n), CONVEX
    raise NonManifoldUnresolvable(
        f"no exterior-wedge partner for face {tuple(voxel)} {FACE_NAMES[d]} edge slot {slot}"
    )


def build_panel_network(faces, l=1.0, t=0.1, origin=(0.0, 0.0, 0.0)):
    """Resolve the four edge-neighbors of every shell face and label dihedrals.

    Around a voxel edge the partner of a face is the next shell face met when
    sweeping through the exterior wedge in front of it: a concave face if the
    diagonal cell is solid, else a coplanar face, else the convex face of the
    same voxel. At an edge where four shell faces meet this pairs each face
    with the one bounding the same exterior cell.
    """
    if not 0 < t < l / 2:
        raise ThicknessTooLarge(f"thickness {t} must satisfy 0 < t < l/2 = {l / 2}")
    faces = {(tuple(int(c) for c in v), int(d)) for v, d in faces}
    if not faces:
        raise NoShell("empty face set")
    order = sorted(faces)
    index = {f: i for i, f in enumerate(order)}
    n = len(order)
    neighbors = np.full((n, 4), -1, dtype=np.int64)
    back = np.full((n, 4), -1, dtype=np.int64)
    dihedral = np.zeros((n, 4))
    for p, (voxel, d) in enumerate(order):
        for s in range(4):
            other, other_slot, angle = _neighbor_face(faces, voxel, d, s)
            neighbors[p, s] = index[other]
            back[p, s] = other_slot
            dihedral[p, s] = angle

    for p in range(n):
        if len(set(neighbors[p].tolist())) != 4:
            raise NonManifoldUnresolvable(f"panel {p} does not have 4 distinct neighbors")
        for s in range(4):
            q, r = neighbors[p, s], back[p, s]
            if neighbors[q, r] != p or back[q, r] != s or dihedral[q, r] != dihedral[p, s]:
                raise NonManifoldUnresolvable(f"asymmetric pairing at panel {p} slot {s}")

    keys = sorted({(p, s) if p < neighbors[p, s] else (int(neighbors[p, s]), int(back[p, s]))
                   for p in range(n) for s in range(4)})
    edge_ids = np.full((n, 4), -1, dtype=np.int64)
    edges = []
    for eid, (p, s) in enumerate(keys):
        q, r = int(neighbors[p, s]), int(back[p, s])
        edge_ids[p, s] = eid
        edge_ids[q, r] = eid
        edges.append((p, s, q, r))

    n_comp = _count_components(neighbors)
    if n_comp != 1:
        raise DisconnectedShell(n_comp)

    org = np.asarray(origin, dtype=float)
    panels = []
    for p, (voxel, d) in enumerate(order):
        normal = FACE_DIRS[d]
        center = org + (np.asarray(voxel) + 0.5 + 0.5 * normal) * l
        panels.append(Panel(p, voxel, d, tuple(float(c) for c in center),
                            tuple(float(c) for c in normal)))
    for arr in (neighbors, back, edge_ids, dihedral):
        arr.setflags(write=False)
    return PanelNetwork(tuple(panels), neighbors, back, edge_ids, dihedral, tuple(edges),
                        float(l), float(t), tuple(float(c) for c in org))


def _count_components(neighbors):
    n = len(neighbors)
    seen = np.zeros(n, dtype=bool)
    comps = 0
    for start in range(n):
        if seen[start]:
            continue
        comps += 1
        seen[start] = True
        queue = deque([start])
        while queue:
            p = queue.popleft()
            for q in neighbors[p]:
                if not seen[q]:
                    seen[q] = True
                    queue.append(q)
    return comps


def recompute_dihedral(network, p, slot):
    """Dihedral across ``slot`` of ``p`` derived from panel geometry alone."""
    q = int(network.neighbors[p, slot])
    ca, na = np.array(network.panels[p].center), np.array(network.panels[p].normal)
    cb, nb = np.array(network.panels[q].center), np.array(network.panels[q].normal)
    if np.allclose(na, nb):
        return FLAT
    side = float(np.dot(cb - ca, na))
    return CONVEX if side < 0 else CONCAVE


def network_from_mesh(mesh, resolution, thickness=0.1):
    """Voxelize, extract the shell and build panels; ``thickness`` is a fraction of l."""
    grid = voxelize_surface(mesh, resolution)
    faces = extract_outer_shell(grid)
    l = grid.cell_size
    return build_panel_network(faces, l=l, t=thickness * l, origin=grid.origin), grid


def network_from_cells(cells, thickness=0.1, l=1.0):
    """Panel network of the polycube made of unit ``cells``."""
    grid = VoxelGrid.from_cells(cells, cell_size=l)
    faces = extract_outer_shell(grid)
    return build_panel_network(faces, l=l, t=thickness * l, origin=grid.origin)
