"""Fused numba kernel for scoring rotation sets against a point cloud.

Semantically identical to the chunked numpy path in ``distribution.raw_scores``
(which remains the reference implementation and is cross-checked in tests);
this kernel fuses rotation, signed distance, orbit-canonical features and the
score reductions into one parallel loop, avoiding the large temporaries that
dominate the numpy path.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

SYM_FINITE, SYM_AXIS, SYM_SPHERICAL = 0, 1, 2
SDF_SPHERE, SDF_BOX, SDF_CYLINDER, SDF_CONE, SDF_MESH = 0, 1, 2, 3, 4

_LEX_TOL = 1e-9


@njit(cache=True)
def _sdf_point(kind, params, tri, x, y, z):
    if kind == SDF_SPHERE:
        return np.sqrt(x * x + y * y + z * z) - params[0]
    if kind == SDF_BOX:
        h = params[0]
        qx, qy, qz = abs(x) - h, abs(y) - h, abs(z) - h
        ox = qx if qx > 0.0 else 0.0
        oy = qy if qy > 0.0 else 0.0
        oz = qz if qz > 0.0 else 0.0
        outside = np.sqrt(ox * ox + oy * oy + oz * oz)
        m = qx
        if qy > m:
            m = qy
        if qz > m:
            m = qz
        inside = m if m < 0.0 else 0.0
        return outside + inside
    if kind == SDF_CYLINDER:
        r, hh = params[0], params[1]
        dr = np.sqrt(x * x + y * y) - r
        dz = abs(z) - hh
        pr = dr if dr > 0.0 else 0.0
        pz = dz if dz > 0.0 else 0.0
        outside = np.sqrt(pr * pr + pz * pz)
        m = dr if dr > dz else dz
        inside = m if m < 0.0 else 0.0
        return outside + inside
    if kind == SDF_CONE:
        r1, hh = params[0], params[1]
        qx = np.sqrt(x * x + y * y)
        qy = z
        k2x, k2y = -r1, 2.0 * hh
        cap = r1 if qy < 0.0 else 0.0
        cax = qx - (qx if qx < cap else cap)
        cay = abs(qy) - hh
        t = ((0.0 - qx) * k2x + (hh - qy) * k2y) / (k2x * k2x + k2y * k2y)
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        cbx = qx - 0.0 + k2x * t
        cby = qy - hh + k2y * t
        s = -1.0 if (cbx < 0.0 and cay < 0.0) else 1.0
        da = cax * cax + cay * cay
        db = cbx * cbx + cby * cby
        d = da if da < db else db
        return s * np.sqrt(d)
    # SDF_MESH: min point-triangle distance, sign from winding number
    best = 1e300
    wind = 0.0
    for t in range(tri.shape[0]):
        ax, ay, az = tri[t, 0, 0], tri[t, 0, 1], tri[t, 0, 2]
        bx, by, bz = tri[t, 1, 0], tri[t, 1, 1], tri[t, 1, 2]
        cx, cy, cz = tri[t, 2, 0], tri[t, 2, 1], tri[t, 2, 2]
        d = _point_triangle_dist(x, y, z, ax, ay, az, bx, by, bz, cx, cy, cz)
        if d < best:
            best = d
        # solid angle (van Oosterom-Strackee)
        vax, vay, vaz = ax - x, ay - y, az - z
        vbx, vby, vbz = bx - x, by - y, bz - z
        vcx, vcy, vcz = cx - x, cy - y, cz - z
        la = np.sqrt(vax * vax + vay * vay + vaz * vaz)
        lb = np.sqrt(vbx * vbx + vby * vby + vbz * vbz)
        lc = np.sqrt(vcx * vcx + vcy * vcy + vcz * vcz)
        crx = vby * vcz - vbz * vcy
        cry = vbz * vcx - vbx * vcz
        crz = vbx * vcy - vby * vcx
        num = vax * crx + vay * cry + vaz * crz
        den = (
            la * lb * lc
            + (vax * vbx + vay * vby + vaz * vbz) * lc
            + (vbx * vcx + vby * vcy + vbz * vcz) * la
            + (vcx * vax + vcy * vay + vcz * vaz) * lb
        )
        wind += 2.0 * np.arctan2(num, den)
    if wind / (4.0 * np.pi) > 0.5:
        return -best
    return best


@njit(cache=True)
def _point_triangle_dist(px, py, pz, ax, ay, az, bx, by, bz, cx, cy, cz):
    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    apx, apy, apz = px - ax, py - ay, pz - az
    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        qx, qy, qz = ax, ay, az
    else:
        bpx, bpy, bpz = px - bx, py - by, pz - bz
        d3 = abx * bpx + aby * bpy + abz * bpz
        d4 = acx * bpx + acy * bpy + acz * bpz
        if d3 >= 0.0 and d4 <= d3:
            qx, qy, qz = bx, by, bz
        else:
            vc = d1 * d4 - d3 * d2
            if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
                v = d1 / (d1 - d3)
                qx, qy, qz = ax + v * abx, ay + v * aby, az + v * abz
            else:
                cpx, cpy, cpz = px - cx, py - cy, pz - cz
                d5 = abx * cpx + aby * cpy + abz * cpz
                d6 = acx * cpx + acy * cpy + acz * cpz
                if d6 >= 0.0 and d5 <= d6:
                    qx, qy, qz = cx, cy, cz
                else:
                    vb = d5 * d2 - d1 * d6
                    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
                        w = d2 / (d2 - d6)
                        qx, qy, qz = ax + w * acx, ay + w * acy, az + w * acz
                    else:
                        va = d3 * d6 - d5 * d4
                        if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
                            w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
                            qx = bx + w * (cx - bx)
                            qy = by + w * (cy - by)
                            qz = bz + w * (cz - bz)
                        else:
                            denom = va + vb + vc
                            v = vb / denom
                            w = vc / denom
                            qx = ax + v * abx + w * acx
                            qy = ay + v * aby + w * acy
                            qz = az + v * abz + w * acz
    dx, dy, dz = px - qx, py - qy, pz - qz
    return np.sqrt(dx * dx + dy * dy + dz * dz)


@njit(cache=True)
def _canonical_channels(sym_kind, group_mats, axis, flip, x, y, z):
    """Orbit-canonical channels for an unmarked point (matches the numpy
    three-pass set reduction: per-coordinate max over tol-surviving images)."""
    if sym_kind == SYM_SPHERICAL:
        return np.sqrt(x * x + y * y + z * z), 0.0, 0.0
    if sym_kind == SYM_AXIS:
        zc = x * axis[0] + y * axis[1] + z * axis[2]
        rx, ry, rz = x - zc * axis[0], y - zc * axis[1], z - zc * axis[2]
        rho = np.sqrt(rx * rx + ry * ry + rz * rz)
        if flip and zc < 0.0:
            zc = -zc
        return rho, 0.0, zc
    k = group_mats.shape[0]
    c0 = -1e300
    for i in range(k):
        v = group_mats[i, 0, 0] * x + group_mats[i, 0, 1] * y + group_mats[i, 0, 2] * z
        if v > c0:
            c0 = v
    c1 = -1e300
    for i in range(k):
        v0 = group_mats[i, 0, 0] * x + group_mats[i, 0, 1] * y + group_mats[i, 0, 2] * z
        if v0 >= c0 - _LEX_TOL:
            v = group_mats[i, 1, 0] * x + group_mats[i, 1, 1] * y + group_mats[i, 1, 2] * z
            if v > c1:
                c1 = v
    c2 = -1e300
    for i in range(k):
        v0 = group_mats[i, 0, 0] * x + group_mats[i, 0, 1] * y + group_mats[i, 0, 2] * z
        if v0 >= c0 - _LEX_TOL:
            v1 = group_mats[i, 1, 0] * x + group_mats[i, 1, 1] * y + group_mats[i, 1, 2] * z
            if v1 >= c1 - _LEX_TOL:
                v = group_mats[i, 2, 0] * x + group_mats[i, 2, 1] * y + group_mats[i, 2, 2] * z
                if v > c2:
                    c2 = v
    return c0, c1, c2


@njit(parallel=True, cache=True)
def score_rotations(
    rot_mats,      # (c, 3, 3)
    points,        # (n, 3)
    feats,         # (n, 4)
    sym_kind,      # SYM_*
    group_mats,    # (k, 3, 3); dummy for non-finite kinds
    axis,          # (3,)
    flip,          # boolean
    has_marker,
    marker_u,      # (3,) unit direction
    cos_radius,
    sdf_kind,      # SDF_*
    sdf_params,    # (2,)
    tri_corners,   # (t, 3, 3); dummy unless SDF_MESH
):
    c = rot_mats.shape[0]
    n = points.shape[0]
    m_out = np.empty(c)
    o_out = np.empty(c)
    for i in prange(c):
        r = rot_mats[i]
        m_best = 0.0
        o_sum = 0.0
        for j in range(n):
            px, py, pz = points[j, 0], points[j, 1], points[j, 2]
            x = r[0, 0] * px + r[0, 1] * py + r[0, 2] * pz
            y = r[1, 0] * px + r[1, 1] * py + r[1, 2] * pz
            z = r[2, 0] * px + r[2, 1] * py + r[2, 2] * pz
            s = abs(_sdf_point(sdf_kind, sdf_params, tri_corners, x, y, z))
            if s > m_best:
                m_best = s
            marked = False
            if has_marker:
                norm = np.sqrt(x * x + y * y + z * z)
                if norm > 1e-9:
                    cosang = (x * marker_u[0] + y * marker_u[1] + z * marker_u[2]) / norm
                    marked = cosang >= cos_radius
            if marked:
                f0, f1, f2, f3 = x, y, z, 1.0
            else:
                f0, f1, f2 = _canonical_channels(sym_kind, group_mats, axis, flip, x, y, z)
                f3 = 0.0
            d0 = f0 - feats[j, 0]
            d1 = f1 - feats[j, 1]
            d2 = f2 - feats[j, 2]
            d3 = f3 - feats[j, 3]
            o_sum += np.sqrt(d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3)
        m_out[i] = m_best
        o_out[i] = o_sum / n
    return m_out, o_out
