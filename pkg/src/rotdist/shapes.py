"""Shape models: exact signed distances and symmetry-canonical point features.

A :class:`ShapeModel` bundles geometry (an analytic primitive or a watertight
triangle mesh), the object's proper symmetry, and an optional textured marker
region.  It answers two queries used everywhere downstream:

* ``sdf(points)``: exact signed distance, analytic for primitives, triangle
  distance + generalized winding number for meshes.
* ``features(points)``: a 4-channel per-point descriptor that is exactly
  invariant under the symmetry group for unmarked points (orbit-canonical
  coordinates) and carries a marker flag channel; marked points keep their
  raw coordinates, so a visible marker breaks the symmetry of the scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import mesh as meshlib
from . import rotation as rt
from .mesh import TriangleMesh
from .validation import check_points

FEATURE_DIM = 4

_GROUP_DECIMALS = 9
_DUMMY_TRI = np.zeros((1, 3, 3))
_DUMMY_GROUP = np.eye(3)[None, :, :]


def _closure(generators: list[np.ndarray], max_order: int = 256) -> np.ndarray:
    """Close a generator set under composition; returns canonical quats."""
    def key(q):
        return tuple(np.round(q, _GROUP_DECIMALS))

    elements = {key(rt.IDENTITY): rt.IDENTITY.copy()}
    frontier = [rt.IDENTITY.copy()]
    gens = [rt.canonicalize(g) for g in generators]
    while frontier:
        nxt = []
        for e in frontier:
            for g in gens:
                prod = rt.compose(e, g)
                k = key(prod)
                if k not in elements:
                    if len(elements) >= max_order:
                        raise ValueError("group closure exceeded max order; bad generators?")
                    elements[k] = prod
                    nxt.append(prod)
        frontier = nxt
    out = np.array(sorted(elements.values(), key=key))
    return out


def finite_rotation_group(name: str, n: int | None = None) -> "SymmetrySpec":
    """Standard proper rotation groups in canonical model orientation.

    Args:
        name: "tetrahedral" (order 12), "octahedral" (24), "icosahedral" (60),
            or "cyclic" with ``n`` (also accepted as "cyclic(n)").
        n: fold count for cyclic groups.
    """
    if name.startswith("cyclic"):
        if "(" in name:
            n = int(name[name.index("(") + 1 : name.index(")")])
        if n is None or n < 1:
            raise ValueError("cyclic group needs n >= 1")
        gens = [rt.rot_z(2.0 * np.pi / n)] if n > 1 else []
        group = _closure(gens)
    elif name == "tetrahedral":
        group = _closure([rt.rot_z(np.pi), rt.from_axis_angle([1.0, 1.0, 1.0], 2.0 * np.pi / 3.0)])
    elif name == "octahedral":
        group = _closure([rt.rot_z(np.pi / 2.0), rt.rot_x(np.pi / 2.0)])
    elif name == "icosahedral":
        phi = (1.0 + np.sqrt(5.0)) / 2.0
        group = _closure(
            [rt.rot_z(np.pi), rt.from_axis_angle([0.0, 1.0, phi], 2.0 * np.pi / 5.0)]
        )
    else:
        raise ValueError(f"unknown group {name!r}")
    return SymmetrySpec(kind="finite", group=group)


@dataclass(frozen=True)
class SymmetrySpec:
    """Proper symmetry of a shape.

    kind "finite": explicit rotation group (closed, contains identity).
    kind "axis_continuous": every rotation about ``axis``; ``flip`` adds the
    two-fold turn exchanging the axis ends (cylinder-like).
    kind "spherical": full rotational symmetry.
    """

    kind: str
    group: np.ndarray | None = None
    axis: np.ndarray | None = None
    flip: bool = False

    def __post_init__(self):
        if self.kind == "finite":
            if self.group is None or len(self.group) < 1:
                raise ValueError("finite symmetry needs a group")
            g = rt.canonicalize(np.asarray(self.group, dtype=float))
            object.__setattr__(self, "group", g)
            keys = {tuple(q) for q in np.round(g, _GROUP_DECIMALS)}
            if len(keys) != len(g):
                raise ValueError("group contains duplicate elements")
            if tuple(np.round(rt.IDENTITY, _GROUP_DECIMALS)) not in keys:
                raise ValueError("group must contain the identity")
            # closure under composition (finiteness then gives inverses)
            for a in g:
                prods = rt.compose(np.broadcast_to(a, g.shape), g)
                for p in np.round(prods, _GROUP_DECIMALS):
                    if tuple(p) not in keys:
                        raise ValueError("group is not closed under composition")
        elif self.kind == "axis_continuous":
            if self.axis is None:
                raise ValueError("axis_continuous symmetry needs an axis")
            ax = np.asarray(self.axis, dtype=float)
            object.__setattr__(self, "axis", ax / np.linalg.norm(ax))
        elif self.kind != "spherical":
            raise ValueError(f"unknown symmetry kind {self.kind!r}")

    @property
    def order(self) -> int | None:
        return None if self.group is None else len(self.group)

    def sample_elements(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n symmetry rotations (exact for finite, random angles else)."""
        if self.kind == "finite":
            return self.group[rng.integers(0, len(self.group), size=n)]
        if self.kind == "spherical":
            return rt.sample_haar(n, rng)
        angles = rng.uniform(0.0, 2.0 * np.pi, size=n)
        els = np.array([rt.from_axis_angle(self.axis, a) for a in angles])
        if self.flip:
            do_flip = rng.integers(0, 2, size=n).astype(bool)
            perp = _any_perpendicular(self.axis)
            flip_q = rt.from_axis_angle(perp, np.pi)
            els[do_flip] = rt.compose(np.broadcast_to(flip_q, (int(do_flip.sum()), 4)), els[do_flip])
        return els


def _any_perpendicular(axis: np.ndarray) -> np.ndarray:
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    v = np.cross(axis, helper)
    return v / np.linalg.norm(v)


def canonical_orbit_points(symmetry: SymmetrySpec, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orbit-canonical coordinates: identical for all points on one orbit.

    Finite groups: the lexicographically greatest image over the group, with
    per-coordinate tolerance ``tol``.  Continuous axis: (radial distance, 0,
    axial coordinate), axial folded to |.| under flip.  Spherical: (|p|, 0, 0).
    """
    points = check_points(points)
    if symmetry.kind == "spherical":
        out = np.zeros((points.shape[0], 3))
        out[:, 0] = np.linalg.norm(points, axis=1)
        return out
    if symmetry.kind == "axis_continuous":
        z = points @ symmetry.axis
        rho = np.linalg.norm(points - z[:, None] * symmetry.axis[None, :], axis=1)
        out = np.zeros((points.shape[0], 3))
        out[:, 0] = rho
        out[:, 2] = np.abs(z) if symmetry.flip else z
        return out
    mats = rt.quat_to_matrix(symmetry.group)  # (k, 3, 3)
    # one GEMM for all group images: (k*3, 3) @ (3, n) -> (k, 3, n)
    images = (mats.reshape(-1, 3) @ points.T).reshape(len(mats), 3, -1)
    alive = np.ones((len(mats), points.shape[0]), dtype=bool)
    out = np.empty((points.shape[0], 3))
    for c in range(3):
        vals = np.where(alive, images[:, c, :], -np.inf)
        vmax = vals.max(axis=0)
        out[:, c] = vmax
        alive &= vals >= (vmax[None, :] - tol)
    return out


@dataclass(frozen=True)
class MarkerSpec:
    """Textured surface region: a direction cone about ``center``.

    A point belongs to the marker when the angle between its direction from
    the origin and the marker center direction is at most ``angular_radius``.
    """

    center: np.ndarray
    angular_radius: float  # radians

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if np.linalg.norm(c) < 1e-9:
            raise ValueError("marker center must not be at the origin")
        object.__setattr__(self, "center", c)

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        norms = np.linalg.norm(points, axis=1)
        u = self.center / np.linalg.norm(self.center)
        cosang = np.where(norms > 1e-9, points @ u / np.where(norms > 1e-9, norms, 1.0), -1.0)
        return cosang >= np.cos(self.angular_radius)


class FeatureTable:
    """Externally computed per-point features, nearest-point lookup."""

    def __init__(self, points: np.ndarray, features: np.ndarray):
        self.points = check_points(points)
        self.values = np.atleast_2d(np.asarray(features, dtype=float))
        if self.values.shape[0] != self.points.shape[0]:
            raise ValueError("feature rows must match point rows")
        self._tree = cKDTree(self.points)

    @classmethod
    def from_csv(cls, path: str) -> "FeatureTable":
        data = np.loadtxt(path, delimiter=",", ndmin=2)
        if data.shape[1] < 4:
            raise ValueError(f"{path}: need columns x,y,z,f1[,f2...]")
        return cls(data[:, :3], data[:, 3:])

    def lookup(self, points: np.ndarray) -> np.ndarray:
        _, idx = self._tree.query(np.atleast_2d(points))
        return self.values[idx]


# analytic primitives: name -> required size parameter names
PRIMITIVES = {
    "sphere": ("radius",),
    "cube": ("half_extent",),
    "cylinder": ("radius", "half_height"),
    "cone": ("base_radius", "half_height"),
    "tetrahedron": ("scale",),
    "icosahedron": ("scale",),
}


def _sdf_sphere(points, radius):
    return np.linalg.norm(points, axis=1) - radius


def _sdf_box(points, half):
    q = np.abs(points) - half
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
    inside = np.minimum(q.max(axis=1), 0.0)
    return outside + inside


def _sdf_cylinder(points, radius, half_height):
    d_r = np.hypot(points[:, 0], points[:, 1]) - radius
    d_z = np.abs(points[:, 2]) - half_height
    outside = np.hypot(np.maximum(d_r, 0.0), np.maximum(d_z, 0.0))
    inside = np.minimum(np.maximum(d_r, d_z), 0.0)
    return outside + inside


def _sdf_cone(points, base_radius, half_height):
    # exact capped-cone distance with apex radius 0, axis z
    q = np.column_stack([np.hypot(points[:, 0], points[:, 1]), points[:, 2]])
    h = half_height
    r1, r2 = base_radius, 0.0
    k1 = np.array([r2, h])
    k2 = np.array([r2 - r1, 2.0 * h])
    cap_r = np.where(q[:, 1] < 0.0, r1, r2)
    ca = np.column_stack([q[:, 0] - np.minimum(q[:, 0], cap_r), np.abs(q[:, 1]) - h])
    t = np.clip(((k1 - q) @ k2) / (k2 @ k2), 0.0, 1.0)
    cb = q - k1 + np.outer(t, k2)
    inside = (cb[:, 0] < 0.0) & (ca[:, 1] < 0.0)
    s = np.where(inside, -1.0, 1.0)
    d2 = np.minimum(np.sum(ca**2, axis=1), np.sum(cb**2, axis=1))
    return s * np.sqrt(d2)


class ShapeModel:
    """CAD model with known proper symmetry and optional marker texture.

    Args:
        geometry: primitive name from :data:`PRIMITIVES` or a TriangleMesh.
        symmetry: the shape's proper symmetry.
        size: primitive size parameters (ignored for mesh geometry).
        marker: optional textured region.
        feature_table: optional externally computed features; replaces the
            canonical feature oracle when given.
        name: label used in summaries and error messages.
    """

    def __init__(
        self,
        geometry: str | TriangleMesh,
        symmetry: SymmetrySpec,
        size: dict[str, float] | None = None,
        marker: MarkerSpec | None = None,
        feature_table: FeatureTable | None = None,
        name: str = "",
    ):
        self.symmetry = symmetry
        self.marker = marker
        self.feature_table = feature_table
        self.size = dict(size or {})
        if isinstance(geometry, TriangleMesh):
            self.kind = "mesh"
            self.mesh = geometry
            self.name = name or "mesh"
        else:
            if geometry not in PRIMITIVES:
                raise ValueError(f"unknown primitive {geometry!r}")
            missing = [k for k in PRIMITIVES[geometry] if k not in self.size]
            if missing:
                raise ValueError(f"{geometry} needs size parameters {missing}")
            self.kind = geometry
            self.mesh = self._build_mesh(geometry)
            self.name = name or geometry
        self.bounding_radius = self.mesh.bounding_radius
        self.surface_tolerance = self._surface_tolerance()
        if marker is not None:
            center_sdf = abs(float(self.sdf(np.asarray(marker.center)[None, :])[0]))
            if center_sdf > max(1e-6 * self.bounding_radius, self.surface_tolerance):
                raise ValueError(f"marker center is off the surface (|sdf|={center_sdf:.3g})")

    def _build_mesh(self, kind: str) -> TriangleMesh:
        s = self.size
        if kind == "sphere":
            return meshlib.icosphere_mesh(s["radius"], subdivisions=4)
        if kind == "cube":
            return meshlib.cube_mesh(s["half_extent"])
        if kind == "cylinder":
            return meshlib.cylinder_mesh(s["radius"], s["half_height"], segments=256)
        if kind == "cone":
            return meshlib.cone_mesh(s["base_radius"], s["half_height"], segments=256)
        if kind == "tetrahedron":
            return meshlib.tetrahedron_mesh(s["scale"])
        return meshlib.icosahedron_mesh(s["scale"])

    def _surface_tolerance(self) -> float:
        """Bound on |sdf| for points on the rasterization mesh surface."""
        if self.kind == "sphere":
            # worst icosphere sag is at face centers (circumradius ~ edge/sqrt(3))
            max_edge = self._max_edge_arc()
            return self.size["radius"] * (1.0 - np.cos(0.6 * max_edge)) + 1e-9
        if self.kind in ("cylinder", "cone"):
            r = self.size.get("radius", self.size.get("base_radius"))
            return r * (1.0 - np.cos(np.pi / 256)) + 1e-9
        return 1e-9  # planar-faced solids: mesh is exact

    def _max_edge_arc(self) -> float:
        tri = self.mesh.corners()
        unit = tri / np.linalg.norm(tri, axis=2, keepdims=True)
        dots = [np.sum(unit[:, i] * unit[:, (i + 1) % 3], axis=1) for i in range(3)]
        return float(np.arccos(np.clip(np.min(dots), -1.0, 1.0)))

    def _score_kernel_args(self) -> tuple | None:
        """Packed arguments for the fused scoring kernel; None when the
        model needs the generic numpy path (external features, big mesh)."""
        from . import _fastscore as fs

        if self.feature_table is not None:
            return None
        if self.kind == "mesh":
            if len(self.mesh.triangles) > 128:
                return None
            sdf_kind, params, tri = fs.SDF_MESH, (0.0, 0.0), self.mesh.corners()
        elif self.kind == "sphere":
            sdf_kind, params, tri = fs.SDF_SPHERE, (self.size["radius"], 0.0), _DUMMY_TRI
        elif self.kind == "cube":
            sdf_kind, params, tri = fs.SDF_BOX, (self.size["half_extent"], 0.0), _DUMMY_TRI
        elif self.kind == "cylinder":
            sdf_kind, params, tri = fs.SDF_CYLINDER, (self.size["radius"], self.size["half_height"]), _DUMMY_TRI
        elif self.kind == "cone":
            sdf_kind, params, tri = fs.SDF_CONE, (self.size["base_radius"], self.size["half_height"]), _DUMMY_TRI
        elif self.kind == "tetrahedron" or self.kind == "icosahedron":
            sdf_kind, params, tri = fs.SDF_MESH, (0.0, 0.0), self.mesh.corners()
        else:
            return None
        sym = self.symmetry
        if sym.kind == "finite":
            sym_kind, group_mats = fs.SYM_FINITE, rt.quat_to_matrix(sym.group)
            axis = np.zeros(3)
            flip = False
        elif sym.kind == "axis_continuous":
            sym_kind, group_mats, axis, flip = fs.SYM_AXIS, _DUMMY_GROUP, sym.axis, sym.flip
        else:
            sym_kind, group_mats, axis, flip = fs.SYM_SPHERICAL, _DUMMY_GROUP, np.zeros(3), False
        if self.marker is not None:
            has_marker = True
            marker_u = self.marker.center / np.linalg.norm(self.marker.center)
            cos_radius = float(np.cos(self.marker.angular_radius))
        else:
            has_marker, marker_u, cos_radius = False, np.zeros(3), 2.0
        return (
            sym_kind, group_mats, np.asarray(axis, dtype=float), bool(flip),
            has_marker, marker_u, cos_radius,
            sdf_kind, np.array(params, dtype=float), np.ascontiguousarray(tri),
        )

    def sdf(self, points: np.ndarray) -> np.ndarray:
        """Signed distance, negative inside; exact for analytic primitives."""
        points = check_points(points)
        s = self.size
        if self.kind == "sphere":
            return _sdf_sphere(points, s["radius"])
        if self.kind == "cube":
            return _sdf_box(points, s["half_extent"])
        if self.kind == "cylinder":
            return _sdf_cylinder(points, s["radius"], s["half_height"])
        if self.kind == "cone":
            return _sdf_cone(points, s["base_radius"], s["half_height"])
        return meshlib.mesh_sdf(self.mesh, points)

    def features(self, points: np.ndarray) -> np.ndarray:
        """Per-point feature vectors (dim 4, or the table's dim if imported).

        Channels 1-3: orbit-canonical coordinates; channel 4: marker flag.
        Marked points bypass canonicalization and keep raw coordinates.
        """
        points = check_points(points)
        if self.feature_table is not None:
            return self.feature_table.lookup(points)
        out = np.empty((points.shape[0], FEATURE_DIM))
        out[:, :3] = canonical_orbit_points(self.symmetry, points)
        out[:, 3] = 0.0
        if self.marker is not None:
            marked = self.marker.contains(points)
            out[marked, :3] = points[marked]
            out[marked, 3] = 1.0
        return out


def make_preset(name: str) -> ShapeModel:
    """Built-in objects: five symmetric solids and three marked variants."""
    if name == "cube":
        return ShapeModel("cube", finite_rotation_group("octahedral"), {"half_extent": 1.0}, name=name)
    if name == "tet":
        return ShapeModel("tetrahedron", finite_rotation_group("tetrahedral"), {"scale": 1.0}, name=name)
    if name == "icosa":
        return ShapeModel("icosahedron", finite_rotation_group("icosahedral"), {"scale": 1.0}, name=name)
    if name == "cone":
        return ShapeModel(
            "cone",
            SymmetrySpec(kind="axis_continuous", axis=np.array([0.0, 0.0, 1.0]), flip=False),
            {"base_radius": 1.0, "half_height": 1.0},
            name=name,
        )
    if name == "cyl":
        return ShapeModel(
            "cylinder",
            SymmetrySpec(kind="axis_continuous", axis=np.array([0.0, 0.0, 1.0]), flip=True),
            {"radius": 1.0, "half_height": 1.0},
            name=name,
        )
    if name == "sphere":
        return ShapeModel("sphere", SymmetrySpec(kind="spherical"), {"radius": 1.0}, name=name)
    if name == "sphereX":
        return ShapeModel(
            "sphere",
            SymmetrySpec(kind="spherical"),
            {"radius": 1.0},
            marker=MarkerSpec(np.array([0.0, 0.0, -1.0]), np.radians(30.0)),
            name=name,
        )
    if name == "cylO":
        return ShapeModel(
            "cylinder",
            SymmetrySpec(kind="axis_continuous", axis=np.array([0.0, 0.0, 1.0]), flip=True),
            {"radius": 1.0, "half_height": 1.0},
            marker=MarkerSpec(np.array([0.5, 0.0, -1.0]), np.radians(15.0)),
            name=name,
        )
    if name == "tetX":
        return ShapeModel(
            "tetrahedron",
            finite_rotation_group("tetrahedral"),
            {"scale": 1.0},
            marker=MarkerSpec(np.array([-1.0, -1.0, -1.0]) / 3.0, np.radians(45.0)),
            name=name,
        )
    raise ValueError(f"unknown preset {name!r}; expected one of "
                     "cube, tet, icosa, cone, cyl, sphere, sphereX, cylO, tetX")
