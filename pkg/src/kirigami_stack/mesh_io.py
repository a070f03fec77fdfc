"""Reading triangle meshes (OBJ subset, ASCII and binary STL) and writing slab geometry."""

from dataclasses import dataclass
import math
import os
import struct

import numpy as np

from .errors import ParseError, UnsupportedFeature
from .voxel_surface import TriangleMesh

# OBJ statements that describe free-form geometry we do not evaluate
_FREEFORM = {"cstype", "deg", "bmat", "step", "curv", "curv2", "surf", "parm", "trim",
             "hole", "scrv", "sp", "end", "con", "bzp", "bsp", "res", "ctech", "stech"}
# statements that carry no geometry and are skipped
_IGNORED = {"vt", "vn", "vp", "g", "o", "s", "usemtl", "mtllib", "l", "p"}


def _read_source(source):
    if isinstance(source, (bytes, bytearray)):
        return bytes(source), None
    path = os.fspath(source)
    with open(path, "rb") as fh:
        return fh.read(), path


def _is_binary_stl(data):
    if len(data) < 84:
        return False
    (count,) = struct.unpack_from("<I", data, 80)
    return len(data) == 84 + 50 * count


def parse_mesh(source, fmt=None):
    """Triangle mesh from a path or raw bytes.

    ``fmt`` is "obj" or "stl"; by default it comes from the file suffix,
    else from the content.
    """
    data, path = _read_source(source)
    if fmt is None and path is not None:
        ext = os.path.splitext(path)[1].lower()
        fmt = {".obj": "obj", ".stl": "stl"}.get(ext)
    if fmt is None:
        head = data[:512].lstrip().lower()
        fmt = "stl" if _is_binary_stl(data) or head.startswith(b"solid") else "obj"
    if fmt == "stl":
        # binary headers may also begin with "solid"; ASCII files have facets right after
        ascii_like = data[:5].lower() == b"solid" and b"facet" in data[:1024].lower()
        if _is_binary_stl(data) and not ascii_like:
            return _parse_binary_stl(data)
        return _parse_ascii_stl(data)
    if fmt == "obj":
        return _parse_obj(data)
    raise UnsupportedFeature(f"unknown mesh format {fmt!r}")


def _floats(tokens, lineno, count):
    if len(tokens) < count:
        raise ParseError(f"expected {count} coordinates, got {len(tokens)}", lineno)
    try:
        vals = [float(x) for x in tokens[:count]]
    except ValueError:
        raise ParseError(f"bad number in {' '.join(tokens)!r}", lineno) from None
    if not all(math.isfinite(v) for v in vals):
        raise ParseError("non-finite coordinate", lineno)
    return vals


def _parse_obj(data):
    verts, tris = [], []
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise ParseError("file is not UTF-8 text") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        key, args = tokens[0], tokens[1:]
        if key == "v":
            verts.append(_floats(args, lineno, 3))
        elif key == "f":
            if len(args) < 3:
                raise ParseError("face needs at least 3 vertices", lineno)
            idx = []
            for tok in args:
                head = tok.split("/", 1)[0]
                try:
                    i = int(head)
                except ValueError:
                    raise ParseError(f"bad vertex reference {tok!r}", lineno) from None
                if i == 0:
                    raise ParseError("vertex index 0 (indices are 1-based)", lineno)
                i = i - 1 if i > 0 else len(verts) + i
                if not 0 <= i < len(verts):
                    raise ParseError(f"vertex reference {tok} out of range", lineno)
                idx.append(i)
            for k in range(1, len(idx) - 1):
                tris.append((idx[0], idx[k], idx[k + 1]))
        elif key in _FREEFORM:
            raise UnsupportedFeature(f"line {lineno}: free-form statement {key!r} is not supported")
        elif key in _IGNORED:
            continue
        else:
            raise ParseError(f"unknown statement {key!r}", lineno)
    return TriangleMesh.from_arrays(np.array(verts, dtype=float).reshape(-1, 3),
                                    np.array(tris, dtype=np.int64).reshape(-1, 3))


def _parse_ascii_stl(data):
    text = data.decode("utf-8", errors="replace")
    verts, tris, current = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        key = tokens[0].lower()
        if key == "vertex":
            current.append(_floats(tokens[1:], lineno, 3))
        elif key == "endloop":
            if len(current) != 3:
                raise ParseError(f"facet loop has {len(current)} vertices", lineno)
            base = len(verts)
            verts.extend(current)
            tris.append((base, base + 1, base + 2))
            current = []
        elif key in ("solid", "facet", "outer", "endfacet", "endsolid"):
            continue
        else:
            raise ParseError(f"unknown STL keyword {tokens[0]!r}", lineno)
    return TriangleMesh.from_arrays(np.array(verts, dtype=float).reshape(-1, 3),
                                    np.array(tris, dtype=np.int64).reshape(-1, 3))


def _parse_binary_stl(data):
    (count,) = struct.unpack_from("<I", data, 80)
    rec = np.dtype([("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    arr = np.frombuffer(data, dtype=rec, count=count, offset=84)
    verts = arr["v"].reshape(-1, 3).astype(float)
    if not np.all(np.isfinite(verts)):
        raise ParseError("non-finite coordinate in binary STL")
    tris = np.arange(3 * count, dtype=np.int64).reshape(-1, 3)
    return TriangleMesh.from_arrays(verts, tris)


@dataclass(frozen=True, eq=False)
class GeometrySnapshot:
    """Triangle soup of slab boxes (12 triangles each) and connector quads (2 each)."""

    vertices: np.ndarray  # (m, 3)
    triangles: np.ndarray  # (k, 3)
    n_slabs: int = 0
    n_connectors: int = 0

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    def bbox(self):
        if len(self.vertices) == 0:
            return np.zeros(3), np.zeros(3)
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


# corner k of a box has sign bits (x, y, z) = (k & 1, k >> 1 & 1, k >> 2 & 1)
_BOX_TRIS = np.array([
    (0, 2, 3), (0, 3, 1),  # -z
    (4, 5, 7), (4, 7, 6),  # +z
    (0, 1, 5), (0, 5, 4),  # -y
    (2, 6, 7), (2, 7, 3),  # +y
    (0, 4, 6), (0, 6, 2),  # -x
    (1, 3, 7), (1, 7, 5),  # +x
], dtype=np.int64)


def snapshot_from_slabs(slabs, connectors=True):
    corners = slabs.corners()
    n = len(corners)
    verts = [corners.reshape(-1, 3)]
    tris = [(_BOX_TRIS[None, :, :] + 8 * np.arange(n)[:, None, None]).reshape(-1, 3)]
    n_conn = 0
    if connectors and len(slabs.connectors):
        quads = slabs.connectors
        n_conn = len(quads)
        base = 8 * n + 4 * np.arange(n_conn)[:, None]
        verts.append(quads.reshape(-1, 3))
        tris.append(np.concatenate([base + [0, 1, 2], base + [0, 2, 3]], axis=1).reshape(-1, 3))
    return GeometrySnapshot(np.concatenate(verts), np.concatenate(tris), n, n_conn)


def _fmt(x):
    s = f"{x:.9g}"
    return "0" if s == "-0" else s


def write_geometry(snapshot, path):
    """Write an OBJ file; vertices closer than 1e-9 are merged, order is deterministic."""
    verts = np.asarray(snapshot.vertices, dtype=float).reshape(-1, 3)
    tris = np.asarray(snapshot.triangles, dtype=np.int64).reshape(-1, 3)
    if len(verts):
        keys = np.round(verts / 1e-9).astype(np.int64)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        # representative coordinate per merged vertex: the first occurrence
        first = np.full(len(uniq), len(verts), dtype=np.int64)
        np.minimum.at(first, inverse, np.arange(len(verts)))
        out_verts = verts[first]
        tris = inverse[tris]
    else:
        out_verts = verts
    lines = [f"# slabs {snapshot.n_slabs} connectors {snapshot.n_connectors}"]
    lines += [f"v {_fmt(a)} {_fmt(b)} {_fmt(c)}" for a, b, c in out_verts]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in tris]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
