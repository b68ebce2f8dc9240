"""Unit-quaternion rotation arithmetic.

Rotations are represented as canonical unit quaternions in ``(w, x, y, z)``
order, stored as numpy float64 arrays.  All functions accept either a single
quaternion of shape ``(4,)`` or a batch of shape ``(n, 4)`` and are pure.
Rotation matrices are derived views; composition, inversion and metric
computations stay in quaternion space.

Canonical sign convention: ``w >= 0``, and if ``w == 0`` the first nonzero
component of ``(x, y, z)`` is positive.  This makes the double-cover
representative unique, so quaternion equality and hashing are well defined.
"""

from __future__ import annotations

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

_NORM_TOL = 1e-9
_SIGN_TOL = 1e-12


def canonicalize(q: np.ndarray) -> np.ndarray:
    """Normalize quaternion(s) to unit length and canonical sign.

    Args:
        q: array of shape (4,) or (n, 4), (w, x, y, z) order.

    Returns:
        Array of the same shape with unit norm and canonical sign.
    """
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    norm = np.linalg.norm(q, axis=1, keepdims=True)
    if np.any(norm < 1e-12):
        raise ValueError("zero quaternion cannot be normalized")
    q = q / norm
    # Flip sign so w > 0; resolve w == 0 by the first nonzero of (x, y, z).
    # Components below _SIGN_TOL are treated as zero so that half-turn
    # rotations (w mathematically 0) get a noise-independent representative.
    sign = np.zeros(q.shape[0])
    for k in (0, 1, 2, 3):
        decisive = (sign == 0.0) & (np.abs(q[:, k]) > _SIGN_TOL)
        sign = np.where(decisive, np.sign(q[:, k]), sign)
    sign = np.where(sign == 0.0, 1.0, sign)  # unreachable for unit input
    q = q * sign[:, None]
    return q[0] if single else q


def is_canonical_unit(q: np.ndarray, tol: float = _NORM_TOL) -> bool:
    """True when q is unit-norm within tol and carries the canonical sign."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    if np.any(np.abs(np.linalg.norm(q, axis=1) - 1.0) > tol):
        return False
    return bool(np.all(np.abs(q - canonicalize(q)) <= tol))


def compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a*b, equivalent to matrix(a) @ matrix(b).

    Broadcasts over leading batch dimensions; the result is canonical.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    out = np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )
    return canonicalize(out)


def inverse(q: np.ndarray) -> np.ndarray:
    """Inverse rotation (quaternion conjugate), canonical sign."""
    q = np.asarray(q, dtype=float)
    conj = q * np.array([1.0, -1.0, -1.0, -1.0])
    return canonicalize(conj)


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix view of quaternion(s): (4,) -> (3, 3), (n, 4) -> (n, 3, 3)."""
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    m = np.empty((q.shape[0], 3, 3))
    m[:, 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    m[:, 0, 1] = 2.0 * (x * y - z * w)
    m[:, 0, 2] = 2.0 * (x * z + y * w)
    m[:, 1, 0] = 2.0 * (x * y + z * w)
    m[:, 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    m[:, 1, 2] = 2.0 * (y * z - x * w)
    m[:, 2, 0] = 2.0 * (x * z - y * w)
    m[:, 2, 1] = 2.0 * (y * z + x * w)
    m[:, 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return m[0] if single else m


def matrix_to_quat(m: np.ndarray) -> np.ndarray:
    """Canonical quaternion from rotation matrix(es), Shepperd's method."""
    m = np.asarray(m, dtype=float)
    single = m.ndim == 2
    m = m.reshape(-1, 3, 3)
    n = m.shape[0]
    q = np.empty((n, 4))
    # Four branch values; pick the numerically largest pivot per matrix.
    t = np.stack(
        [
            1.0 + m[:, 0, 0] + m[:, 1, 1] + m[:, 2, 2],
            1.0 + m[:, 0, 0] - m[:, 1, 1] - m[:, 2, 2],
            1.0 - m[:, 0, 0] + m[:, 1, 1] - m[:, 2, 2],
            1.0 - m[:, 0, 0] - m[:, 1, 1] + m[:, 2, 2],
        ],
        axis=1,
    )
    pivot = np.argmax(t, axis=1)
    for i in range(n):
        a = m[i]
        k = pivot[i]
        s = 2.0 * np.sqrt(max(t[i, k], 0.0))
        if k == 0:
            q[i] = (0.25 * s, (a[2, 1] - a[1, 2]) / s, (a[0, 2] - a[2, 0]) / s, (a[1, 0] - a[0, 1]) / s)
        elif k == 1:
            q[i] = ((a[2, 1] - a[1, 2]) / s, 0.25 * s, (a[0, 1] + a[1, 0]) / s, (a[0, 2] + a[2, 0]) / s)
        elif k == 2:
            q[i] = ((a[0, 2] - a[2, 0]) / s, (a[0, 1] + a[1, 0]) / s, 0.25 * s, (a[1, 2] + a[2, 1]) / s)
        else:
            q[i] = ((a[1, 0] - a[0, 1]) / s, (a[0, 2] + a[2, 0]) / s, (a[1, 2] + a[2, 1]) / s, 0.25 * s)
    q = canonicalize(q)
    return q[0] if single else q


def rotate_points(q: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Apply rotation(s) to point(s).

    Shapes: q (4,) with points (..., 3) -> (..., 3);
    q (n, 4) with points (m, 3) -> (n, m, 3).
    """
    q = np.asarray(q, dtype=float)
    points = np.asarray(points, dtype=float)
    if q.ndim == 1:
        return points @ quat_to_matrix(q).T
    return np.einsum("nij,mj->nmi", quat_to_matrix(q), np.atleast_2d(points))


def geodesic_angle(a: np.ndarray, b: np.ndarray) -> np.ndarray | float:
    """Geodesic distance on SO(3) in radians, in [0, pi].

    Computed as 2*arccos(|<q_a, q_b>|), which equals
    arccos((trace(A^T B) - 1) / 2).  Broadcasts over batch dimensions.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = np.abs(np.sum(a * b, axis=-1))
    ang = 2.0 * np.arccos(np.clip(dot, -1.0, 1.0))
    return float(ang) if ang.ndim == 0 else ang


def pairwise_geodesic(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(n, 4) x (m, 4) -> (n, m) matrix of geodesic angles in radians."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    dot = np.abs(a @ b.T)
    return 2.0 * np.arccos(np.clip(dot, -1.0, 1.0))


def from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation by ``angle`` radians about ``axis`` (normalized internally)."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * float(angle)
    return canonicalize(np.concatenate([[np.cos(half)], np.sin(half) * axis]))


def rot_x(angle: float) -> np.ndarray:
    return from_axis_angle(np.array([1.0, 0.0, 0.0]), angle)


def rot_y(angle: float) -> np.ndarray:
    return from_axis_angle(np.array([0.0, 1.0, 0.0]), angle)


def rot_z(angle: float) -> np.ndarray:
    return from_axis_angle(np.array([0.0, 0.0, 1.0]), angle)


def sample_haar(n: int, rng: np.random.Generator | int | None = None) -> np.ndarray:
    """Draw n rotations from the Haar-uniform distribution on SO(3).

    Four independent standard normals normalized to a unit quaternion are
    exactly Haar distributed.  Deterministic for a given seed.

    Args:
        n: number of rotations, >= 0.
        rng: numpy Generator or integer seed.

    Returns:
        (n, 4) array of canonical quaternions.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return np.empty((0, 4))
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    raw = rng.standard_normal((n, 4))
    return canonicalize(raw)


def quat_to_csv_row(q: np.ndarray) -> str:
    """Serialize one quaternion as ``qw,qx,qy,qz`` with 17 significant digits."""
    return ",".join(f"{v:.17g}" for v in np.asarray(q, dtype=float))
