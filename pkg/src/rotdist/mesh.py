"""Triangle meshes: loading, watertightness, distances and winding numbers.

Meshes are the geometry backend for signed distance queries on polyhedral
models and for silhouette rasterization of every model.  Signed distance to
a mesh is the unsigned minimum point-triangle distance with the sign taken
from the generalized winding number (inside where w > 0.5), which requires
a watertight, consistently oriented mesh.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (v, 3) float64
    triangles: np.ndarray  # (t, 3) int64
    watertight: bool = field(init=False, default=False)
    open_edge_count: int = field(init=False, default=0)

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError(f"triangles must be (m, 3), got {t.shape}")
        if t.size and (t.min() < 0 or t.max() >= v.shape[0]):
            raise MeshError("triangle index out of range")
        t = t[_triangle_areas(v, t) > 1e-12]  # drop degenerate faces
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        open_edges = _count_open_edges(t)
        object.__setattr__(self, "open_edge_count", open_edges)
        object.__setattr__(self, "watertight", open_edges == 0 and t.shape[0] > 0)

    @property
    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).max())

    def corners(self) -> np.ndarray:
        """(t, 3, 3) triangle corner positions."""
        return self.vertices[self.triangles]


def _triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    if triangles.shape[0] == 0:
        return np.zeros(0)
    a, b, c = (vertices[triangles[:, k]] for k in range(3))
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def _count_open_edges(triangles: np.ndarray) -> int:
    """Directed edges whose reverse is missing (0 for closed oriented meshes)."""
    if triangles.shape[0] == 0:
        return 0
    edges = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=0
    )
    fwd = set(map(tuple, edges))
    if len(fwd) != edges.shape[0]:
        # duplicated directed edge: not consistently oriented
        return edges.shape[0]
    return sum((b, a) not in fwd for a, b in fwd)


def load_obj(path: str) -> TriangleMesh:
    """Load a Wavefront OBJ subset: ``v`` and ``f`` lines, polygons fanned."""
    vertices: list[list[float]] = []
    faces: list[list[int]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{lineno}: malformed vertex line")
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    raw = int(tok.split("/")[0])
                    idx.append(raw - 1 if raw > 0 else len(vertices) + raw)
                if len(idx) < 3:
                    raise MeshError(f"{path}:{lineno}: face with < 3 vertices")
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
    if not vertices or not faces:
        raise MeshError(f"{path}: no usable geometry")
    return TriangleMesh(np.array(vertices), np.array(faces))


def save_obj(path: str, mesh: TriangleMesh) -> None:
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def point_triangle_distances(points: np.ndarray, corners: np.ndarray) -> np.ndarray:
    """Min distance from each point to each triangle: (p, 3) x (t, 3, 3) -> (p, t)."""
    p = points[:, None, :]  # (p, 1, 3)
    a, b, c = corners[None, :, 0], corners[None, :, 1], corners[None, :, 2]
    ab, ac, ap = b - a, c - a, p - a
    d1 = np.sum(ab * ap, axis=-1)
    d2 = np.sum(ac * ap, axis=-1)
    bp = p - b
    d3 = np.sum(ab * bp, axis=-1)
    d4 = np.sum(ac * bp, axis=-1)
    cp = p - c
    d5 = np.sum(ab * cp, axis=-1)
    d6 = np.sum(ac * cp, axis=-1)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    def safe_div(num, den):
        return num / np.where(den != 0, den, 1.0)

    # Region masks in Ericson's test order; each later mask excludes earlier ones.
    taken = np.zeros(d1.shape, dtype=bool)

    def claim(cond):
        nonlocal taken
        eff = cond & ~taken
        taken = taken | cond
        return eff[..., None]

    shape = np.broadcast_shapes(p.shape, a.shape)
    closest = np.empty(shape)
    closest = np.where(claim((d1 <= 0) & (d2 <= 0)), a, closest)  # vertex A
    closest = np.where(claim((d3 >= 0) & (d4 <= d3)), b, closest)  # vertex B
    v_ab = np.clip(safe_div(d1, d1 - d3), 0.0, 1.0)
    closest = np.where(
        claim((vc <= 0) & (d1 >= 0) & (d3 <= 0)), a + v_ab[..., None] * ab, closest
    )
    closest = np.where(claim((d6 >= 0) & (d5 <= d6)), c, closest)  # vertex C
    w_ac = np.clip(safe_div(d2, d2 - d6), 0.0, 1.0)
    closest = np.where(
        claim((vb <= 0) & (d2 >= 0) & (d6 <= 0)), a + w_ac[..., None] * ac, closest
    )
    t_bc = np.clip(safe_div(d4 - d3, (d4 - d3) + (d5 - d6)), 0.0, 1.0)
    closest = np.where(
        claim((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)),
        b + t_bc[..., None] * (c - b),
        closest,
    )
    denom = np.where(va + vb + vc != 0, va + vb + vc, 1.0)
    face = a + (vb / denom)[..., None] * ab + (vc / denom)[..., None] * ac
    closest = np.where(~taken[..., None], face, closest)

    return np.linalg.norm(p - closest, axis=-1)


def mesh_unsigned_distance(mesh: TriangleMesh, points: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Unsigned distance to the mesh surface, exact min over all triangles."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    corners = mesh.corners()
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], chunk):
        block = points[start : start + chunk]
        out[start : start + chunk] = point_triangle_distances(block, corners).min(axis=1)
    return out


def mesh_winding_number(mesh: TriangleMesh, points: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Generalized winding number (~1 inside, ~0 outside a watertight mesh).

    Sum of signed solid angles over triangles divided by 4*pi, using the
    van Oosterom-Strackee formula per triangle.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    corners = mesh.corners()
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], chunk):
        p = points[start : start + chunk][:, None, :]
        a = corners[None, :, 0] - p
        b = corners[None, :, 1] - p
        c = corners[None, :, 2] - p
        la = np.linalg.norm(a, axis=-1)
        lb = np.linalg.norm(b, axis=-1)
        lc = np.linalg.norm(c, axis=-1)
        num = np.sum(a * np.cross(b, c), axis=-1)
        den = (
            la * lb * lc
            + np.sum(a * b, axis=-1) * lc
            + np.sum(b * c, axis=-1) * la
            + np.sum(c * a, axis=-1) * lb
        )
        omega = 2.0 * np.arctan2(num, den)
        out[start : start + chunk] = omega.sum(axis=1) / (4.0 * np.pi)
    return out


def mesh_sdf(mesh: TriangleMesh, points: np.ndarray) -> np.ndarray:
    """Signed distance: negative inside, positive outside.

    Raises:
        MeshError: if the mesh is not watertight (sign would be meaningless);
            the message reports the open edge count.
    """
    if not mesh.watertight:
        raise MeshError(
            f"signed distance needs a watertight mesh; found {mesh.open_edge_count} open edges"
        )
    dist = mesh_unsigned_distance(mesh, points)
    inside = mesh_winding_number(mesh, points) > 0.5
    return np.where(inside, -dist, dist)


def _orient_outward(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Flip triangles of a star-shaped (about origin) solid to face outward."""
    a, b, c = (vertices[triangles[:, k]] for k in range(3))
    normals = np.cross(b - a, c - a)
    centroid = (a + b + c) / 3.0
    flip = np.sum(normals * centroid, axis=1) < 0
    fixed = triangles.copy()
    fixed[flip] = fixed[flip][:, [0, 2, 1]]
    return fixed


def cube_mesh(half_extent: float = 1.0) -> TriangleMesh:
    v = np.array(
        [[sx, sy, sz] for sx in (-1.0, 1.0) for sy in (-1.0, 1.0) for sz in (-1.0, 1.0)]
    ) * half_extent
    quads = [
        (0, 1, 3, 2), (4, 6, 7, 5),  # x- / x+
        (0, 4, 5, 1), (2, 3, 7, 6),  # y- / y+
        (0, 2, 6, 4), (1, 5, 7, 3),  # z- / z+
    ]
    tris = []
    for q in quads:
        tris += [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
    return TriangleMesh(v, _orient_outward(v, np.array(tris)))


def tetrahedron_mesh(scale: float = 1.0) -> TriangleMesh:
    v = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]) * scale
    t = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return TriangleMesh(v, _orient_outward(v, t))


def icosahedron_mesh(scale: float = 1.0) -> TriangleMesh:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    ) * scale
    t = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    return TriangleMesh(v, _orient_outward(v, t))


def icosphere_mesh(radius: float = 1.0, subdivisions: int = 4) -> TriangleMesh:
    base = icosahedron_mesh(1.0)
    verts = [tuple(v / np.linalg.norm(v)) for v in base.vertices]
    tris = [tuple(t) for t in base.triangles]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = np.array(verts[i]) + np.array(verts[j])
                verts.append(tuple(m / np.linalg.norm(m)))
                cache[key] = len(verts) - 1
            return cache[key]

        new_tris = []
        for a, b, c in tris:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_tris += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        tris = new_tris
    v = np.array(verts) * radius
    return TriangleMesh(v, _orient_outward(v, np.array(tris)))


def cylinder_mesh(radius: float = 1.0, half_height: float = 1.0, segments: int = 256) -> TriangleMesh:
    ang = 2.0 * np.pi * np.arange(segments) / segments
    ring = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
    bottom = np.column_stack([ring, np.full(segments, -half_height)])
    top = np.column_stack([ring, np.full(segments, half_height)])
    v = np.vstack([bottom, top, [[0, 0, -half_height]], [[0, 0, half_height]]])
    cb, ct = 2 * segments, 2 * segments + 1
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        tris += [[i, j, segments + i], [j, segments + j, segments + i]]  # wall
        tris += [[cb, j, i], [ct, segments + i, segments + j]]  # caps
    return TriangleMesh(v, _orient_outward(v, np.array(tris)))


def cone_mesh(base_radius: float = 1.0, half_height: float = 1.0, segments: int = 256) -> TriangleMesh:
    ang = 2.0 * np.pi * np.arange(segments) / segments
    base = np.column_stack(
        [base_radius * np.cos(ang), base_radius * np.sin(ang), np.full(segments, -half_height)]
    )
    v = np.vstack([base, [[0, 0, half_height]], [[0, 0, -half_height]]])
    apex, center = segments, segments + 1
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        tris += [[i, j, apex], [center, j, i]]
    return TriangleMesh(v, _orient_outward(v, np.array(tris)))
