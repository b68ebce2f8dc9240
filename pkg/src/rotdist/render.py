"""Software rasterizer: silhouettes, depth, IoU pose confidence, mask I/O.

The camera sits at the origin looking down +z; a model posed at rotation q
is placed at translation (0, 0, t_z).  Rasterization is pixel-center
coverage with a z-buffer; depth is interpolated perspective-correctly
(1/z linear in screen space), so back-projected foreground pixels land
exactly on the triangle planes.  Pose confidence compares the silhouette
rendered at an estimated pose against a predicted full-object mask by IoU,
which drops under occlusion-induced disagreement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import TriangleMesh
from .rotation import inverse, quat_to_matrix


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    t_z: float  # object center distance along the optical axis (model units)

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("raster must be at least 1x1")


def default_camera(bounding_radius: float, width: int = 224, height: int = 224, focal: float = 300.0) -> CameraIntrinsics:
    """Centered-principal-point camera with the object at 4x its radius."""
    return CameraIntrinsics(
        fx=focal, fy=focal, cx=width / 2.0, cy=height / 2.0,
        width=width, height=height, t_z=4.0 * bounding_radius,
    )


@dataclass(frozen=True)
class SilhouetteMask:
    bits: np.ndarray  # (height, width) bool

    def __post_init__(self):
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def area(self) -> int:
        return int(self.bits.sum())


def rasterize(model, q: np.ndarray, cam: CameraIntrinsics) -> tuple[SilhouetteMask, np.ndarray]:
    """Render the model silhouette and depth buffer at pose (q, [0, 0, t_z]).

    Args:
        model: ShapeModel (its raster mesh is used) or a bare TriangleMesh.
        q: rotation quaternion.
        cam: camera intrinsics.

    Returns:
        (mask, depth) where depth is (height, width) float64 with +inf on
        background pixels.

    Raises:
        RenderError: if any vertex lands at or behind the camera plane.
    """
    mesh: TriangleMesh = model if isinstance(model, TriangleMesh) else model.mesh
    rot = quat_to_matrix(np.asarray(q, dtype=float))
    verts = mesh.vertices @ rot.T
    verts = verts + np.array([0.0, 0.0, cam.t_z])
    if np.any(verts[:, 2] <= 1e-9):
        raise RenderError("object is behind (or intersects) the camera plane")

    inv_z = 1.0 / verts[:, 2]
    us = cam.fx * verts[:, 0] * inv_z + cam.cx
    vs = cam.fy * verts[:, 1] * inv_z + cam.cy

    depth = np.full((cam.height, cam.width), np.inf)
    tri = mesh.triangles
    for k in range(tri.shape[0]):
        i0, i1, i2 = tri[k]
        x0, y0, x1, y1, x2, y2 = us[i0], vs[i0], us[i1], vs[i1], us[i2], vs[i2]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if abs(area) < 1e-12:
            continue
        lo_j = max(0, int(np.floor(min(x0, x1, x2) - 0.5)))
        hi_j = min(cam.width - 1, int(np.ceil(max(x0, x1, x2) - 0.5)))
        lo_i = max(0, int(np.floor(min(y0, y1, y2) - 0.5)))
        hi_i = min(cam.height - 1, int(np.ceil(max(y0, y1, y2) - 0.5)))
        if lo_j > hi_j or lo_i > hi_i:
            continue
        px = np.arange(lo_j, hi_j + 1) + 0.5
        py = (np.arange(lo_i, hi_i + 1) + 0.5)[:, None]
        w0 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        w1 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
        w2 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
        if area > 0:
            covered = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
        else:
            covered = (w0 <= 0) & (w1 <= 0) & (w2 <= 0)
        if not covered.any():
            continue
        l0, l1, l2 = w0 / area, w1 / area, w2 / area
        z = 1.0 / (l0 * inv_z[i0] + l1 * inv_z[i1] + l2 * inv_z[i2])
        window = depth[lo_i : hi_i + 1, lo_j : hi_j + 1]
        better = covered & (z < window)
        window[better] = z[better]

    mask = SilhouetteMask(np.isfinite(depth))
    return mask, depth


def iou(a: SilhouetteMask, b: SilhouetteMask) -> float:
    """Intersection over union; two empty masks agree (1.0)."""
    if a.bits.shape != b.bits.shape:
        raise ValueError(f"mask shapes differ: {a.bits.shape} vs {b.bits.shape}")
    union = np.logical_or(a.bits, b.bits).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a.bits, b.bits).sum() / union)


def pose_confidence(model, q_est: np.ndarray, predicted_mask: SilhouetteMask, cam: CameraIntrinsics) -> float:
    """IoU between the silhouette rendered at the estimated pose and the
    predicted full-object mask; 1.0 means the two agree perfectly."""
    rendered, _ = rasterize(model, q_est, cam)
    return iou(rendered, predicted_mask)


def back_project(depth: np.ndarray, rows: np.ndarray, cols: np.ndarray, q: np.ndarray, cam: CameraIntrinsics) -> np.ndarray:
    """Map foreground pixels to 3D points in the canonical model frame."""
    z = depth[rows, cols]
    u = cols + 0.5
    v = rows + 0.5
    pc = np.column_stack([(u - cam.cx) / cam.fx * z, (v - cam.cy) / cam.fy * z, z])
    pc[:, 2] -= cam.t_z
    rot_inv = quat_to_matrix(inverse(np.asarray(q, dtype=float)))
    return pc @ rot_inv.T


def sample_visible_points(
    model,
    q_gt: np.ndarray,
    cam: CameraIntrinsics,
    n: int = 100,
    rng: np.random.Generator | int | None = None,
) -> np.ndarray:
    """Sample n visible surface points, returned in the canonical model frame.

    Renders a depth buffer at the ground-truth pose, draws n foreground
    pixels uniformly (without replacement when possible), and back-projects
    them through the pixel-center rays.

    Raises:
        RenderError: if the silhouette is empty.
    """
    if n == 0:
        return np.empty((0, 3))
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    mask, depth = rasterize(model, q_gt, cam)
    rows, cols = np.nonzero(mask.bits)
    if rows.size == 0:
        raise RenderError("empty silhouette: object is not visible")
    take = rng.choice(rows.size, size=n, replace=rows.size < n)
    return back_project(depth, rows[take], cols[take], q_gt, cam)


def occlude_mask(mask: SilhouetteMask, fraction: float, rng: np.random.Generator | int | None = None) -> SilhouetteMask:
    """Erase a rectangle covering ~``fraction`` of the foreground pixels.

    The rectangle grows from a randomly chosen corner of the foreground
    bounding box; for a fixed seed, larger fractions erase supersets of
    smaller ones, so confidence decreases strictly along a sweep.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    if fraction == 0.0 or mask.area() == 0:
        return SilhouetteMask(mask.bits.copy())
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    rows, cols = np.nonzero(mask.bits)
    target = int(round(fraction * rows.size))
    r0, r1 = rows.min(), rows.max()
    c0, c1 = cols.min(), cols.max()
    edge = int(rng.integers(0, 4))  # 0 left, 1 right, 2 top, 3 bottom
    bits = mask.bits.copy()
    if edge < 2:
        lines = range(c0, c1 + 1) if edge == 0 else range(c1, c0 - 1, -1)
        erased = 0
        for c in lines:
            if erased >= target:
                break
            seg = bits[r0 : r1 + 1, c]
            erased += int(seg.sum())
            seg[:] = False
    else:
        lines = range(r0, r1 + 1) if edge == 2 else range(r1, r0 - 1, -1)
        erased = 0
        for r in lines:
            if erased >= target:
                break
            seg = bits[r, c0 : c1 + 1]
            erased += int(seg.sum())
            seg[:] = False
    return SilhouetteMask(bits)


def write_pgm(path: str, mask_or_depth, *, foreground: int = 255) -> None:
    """Write a binary PGM (P5).  Masks use foreground/0; float images are
    normalized to 0..255 over their finite range (debug depth export)."""
    arr = mask_or_depth.bits if isinstance(mask_or_depth, SilhouetteMask) else np.asarray(mask_or_depth)
    if arr.dtype == bool:
        img = np.where(arr, np.uint8(foreground), np.uint8(0))
    else:
        finite = np.isfinite(arr)
        if finite.any():
            lo, hi = arr[finite].min(), arr[finite].max()
            span = hi - lo if hi > lo else 1.0
            img = np.zeros(arr.shape, dtype=np.uint8)
            img[finite] = np.round(255 * (1.0 - (arr[finite] - lo) / span)).astype(np.uint8)
        else:
            img = np.zeros(arr.shape, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


def read_pgm(path: str) -> SilhouetteMask:
    """Read a binary PGM mask: nonzero pixels are foreground."""
    with open(path, "rb") as fh:
        data = fh.read()
    parts = []
    pos = 0
    while len(parts) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        parts.append(data[start:pos])
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval > 255:
        raise ValueError(f"{path}: only 8-bit PGM supported")
    pos += 1  # single whitespace after maxval
    img = np.frombuffer(data[pos : pos + width * height], dtype=np.uint8).reshape(height, width)
    return SilhouetteMask(img > 0)
