"""Minimal self-contained HEALPix indexing on the sphere.

Implements only what the rotation grids need: ring-scheme pixel centers in
closed form, and ring <-> nested index conversion (via the face/x/y tile
decomposition) so that a pixel's children at the next subdivision level can
be enumerated exactly.  Vectorized over int64 arrays; follows the standard
ring/nested conventions so pixel sets at successive nsides nest exactly.
"""

from __future__ import annotations

import numpy as np

_JRLL = np.array([2, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4], dtype=np.int64)
_JPLL = np.array([1, 3, 5, 7, 0, 2, 4, 6, 1, 3, 5, 7], dtype=np.int64)


def npix(nside: int) -> int:
    return 12 * nside * nside


def _isqrt(v: np.ndarray) -> np.ndarray:
    """Exact integer square root for moderate int64 values."""
    s = np.sqrt(v.astype(float)).astype(np.int64)
    s = np.where((s + 1) * (s + 1) <= v, s + 1, s)
    s = np.where(s * s > v, s - 1, s)
    return s


def _div2_trunc(num: np.ndarray) -> np.ndarray:
    """C-style truncating division by 2 (rounds toward zero)."""
    return np.where(num >= 0, num // 2, -((-num) // 2))


def ring_centers(nside: int, ipix: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Pixel centers (z, phi) for ring-scheme indices.

    Args:
        nside: HEALPix resolution parameter (power of two).
        ipix: ring indices; all pixels when None.

    Returns:
        (z, phi) arrays, z = cos(colatitude), phi in [0, 2*pi).
    """
    if ipix is None:
        ipix = np.arange(npix(nside), dtype=np.int64)
    ipix = np.asarray(ipix, dtype=np.int64)
    ncap = 2 * nside * (nside - 1)
    ntot = npix(nside)
    z = np.empty(ipix.shape, dtype=float)
    phi = np.empty(ipix.shape, dtype=float)

    north = ipix < ncap
    south = ipix >= ntot - ncap
    equat = ~(north | south)

    if np.any(north):
        p = ipix[north]
        iring = (1 + _isqrt(1 + 2 * p)) >> 1
        iphi = (p + 1) - 2 * iring * (iring - 1)
        z[north] = 1.0 - (iring * iring) * (4.0 / ntot)
        phi[north] = (iphi - 0.5) * (0.5 * np.pi) / iring

    if np.any(equat):
        ip = ipix[equat] - ncap
        iring = ip // (4 * nside) + nside
        iphi = ip % (4 * nside) + 1
        fodd = np.where(((iring + nside) & 1) == 1, 1.0, 0.5)
        z[equat] = (2 * nside - iring) * (2.0 / (3.0 * nside))
        phi[equat] = (iphi - fodd) * np.pi / (2 * nside)

    if np.any(south):
        ip = ntot - ipix[south]
        iring = (1 + _isqrt(2 * ip - 1)) >> 1
        iphi = 4 * iring + 1 - (ip - 2 * iring * (iring - 1))
        z[south] = -1.0 + (iring * iring) * (4.0 / ntot)
        phi[south] = (iphi - 0.5) * (0.5 * np.pi) / iring

    return z, phi


def ring_to_xyf(nside: int, ipix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ring index -> (x, y, face) tile coordinates."""
    ipix = np.asarray(ipix, dtype=np.int64)
    ncap = 2 * nside * (nside - 1)
    ntot = npix(nside)
    x = np.empty(ipix.shape, dtype=np.int64)
    y = np.empty(ipix.shape, dtype=np.int64)
    f = np.empty(ipix.shape, dtype=np.int64)

    north = ipix < ncap
    south = ipix >= ntot - ncap
    equat = ~(north | south)

    if np.any(north):
        p = ipix[north]
        iring = (1 + _isqrt(1 + 2 * p)) >> 1
        iphi = (p + 1) - 2 * iring * (iring - 1)
        face = (iphi - 1) // iring
        irt = iring - (_JRLL[face] * nside) + 1
        ipt = 2 * iphi - _JPLL[face] * iring - 1
        ipt = np.where(ipt >= 2 * nside, ipt - 8 * nside, ipt)
        x[north] = (ipt - irt) >> 1
        y[north] = (-(ipt + irt)) >> 1
        f[north] = face

    if np.any(equat):
        ip = ipix[equat] - ncap
        iring = ip // (4 * nside) + nside
        iphi = ip % (4 * nside) + 1
        kshift = (iring + nside) & 1
        ire = iring - nside + 1
        irm = 2 * nside + 2 - ire
        ifm = (iphi - ire // 2 + nside - 1) // nside
        ifp = (iphi - irm // 2 + nside - 1) // nside
        face = np.where(ifp == ifm, (ifp & 3) + 4, np.where(ifp < ifm, ifp, ifm + 8))
        irt = iring - (_JRLL[face] * nside) + 1
        ipt = 2 * iphi - _JPLL[face] * nside - kshift - 1
        ipt = np.where(ipt >= 2 * nside, ipt - 8 * nside, ipt)
        x[equat] = (ipt - irt) >> 1
        y[equat] = (-(ipt + irt)) >> 1
        f[equat] = face

    if np.any(south):
        ip = ntot - ipix[south]
        iring = (1 + _isqrt(2 * ip - 1)) >> 1
        iphi = 4 * iring + 1 - (ip - 2 * iring * (iring - 1))
        face = 8 + (iphi - 1) // iring
        irt = 4 * nside - iring - (_JRLL[face] * nside) + 1
        ipt = 2 * iphi - _JPLL[face] * iring - 1
        ipt = np.where(ipt >= 2 * nside, ipt - 8 * nside, ipt)
        x[south] = (ipt - irt) >> 1
        y[south] = (-(ipt + irt)) >> 1
        f[south] = face

    return x, y, f


def xyf_to_ring(nside: int, x: np.ndarray, y: np.ndarray, f: np.ndarray) -> np.ndarray:
    """(x, y, face) tile coordinates -> ring index."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    f = np.asarray(f, dtype=np.int64)
    ncap = 2 * nside * (nside - 1)
    jr = _JRLL[f] * nside - x - y - 1
    out = np.empty(jr.shape, dtype=np.int64)

    north = jr < nside
    south = jr > 3 * nside
    equat = ~(north | south)

    if np.any(north):
        nr = jr[north]
        jp = _div2_trunc(_JPLL[f[north]] * nr + x[north] - y[north] + 1)
        jp = np.where(jp > 4 * nr, jp - 4 * nr, np.where(jp < 1, jp + 4 * nr, jp))
        out[north] = 2 * nr * (nr - 1) + jp - 1

    if np.any(equat):
        kshift = (jr[equat] - nside) & 1
        jp = _div2_trunc(_JPLL[f[equat]] * nside + x[equat] - y[equat] + 1 + kshift)
        jp = np.where(jp > 4 * nside, jp - 4 * nside, np.where(jp < 1, jp + 4 * nside, jp))
        out[equat] = ncap + (jr[equat] - nside) * 4 * nside + jp - 1

    if np.any(south):
        nr = 4 * nside - jr[south]
        jp = _div2_trunc(_JPLL[f[south]] * nr + x[south] - y[south] + 1)
        jp = np.where(jp > 4 * nr, jp - 4 * nr, np.where(jp < 1, jp + 4 * nr, jp))
        out[south] = 12 * nside * nside - 2 * nr * (nr + 1) + jp - 1

    return out


def _spread_bits(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.int64)
    v = (v | (v << 16)) & 0x0000FFFF0000FFFF
    v = (v | (v << 8)) & 0x00FF00FF00FF00FF
    v = (v | (v << 4)) & 0x0F0F0F0F0F0F0F0F
    v = (v | (v << 2)) & 0x3333333333333333
    v = (v | (v << 1)) & 0x5555555555555555
    return v


def _compress_bits(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.int64) & 0x5555555555555555
    v = (v | (v >> 1)) & 0x3333333333333333
    v = (v | (v >> 2)) & 0x0F0F0F0F0F0F0F0F
    v = (v | (v >> 4)) & 0x00FF00FF00FF00FF
    v = (v | (v >> 8)) & 0x0000FFFF0000FFFF
    v = (v | (v >> 16)) & 0x00000000FFFFFFFF
    return v


def xyf_to_nest(nside: int, x: np.ndarray, y: np.ndarray, f: np.ndarray) -> np.ndarray:
    return np.asarray(f, dtype=np.int64) * nside * nside + (
        _spread_bits(np.asarray(x)) | (_spread_bits(np.asarray(y)) << 1)
    )


def nest_to_xyf(nside: int, ipix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ipix = np.asarray(ipix, dtype=np.int64)
    f = ipix // (nside * nside)
    rem = ipix & (nside * nside - 1)
    return _compress_bits(rem), _compress_bits(rem >> 1), f


def ring_to_nest(nside: int, ipix: np.ndarray) -> np.ndarray:
    return xyf_to_nest(nside, *ring_to_xyf(nside, ipix))


def nest_to_ring(nside: int, ipix: np.ndarray) -> np.ndarray:
    return xyf_to_ring(nside, *nest_to_xyf(nside, ipix))


def children_nest(ipix: np.ndarray, sub_levels: int = 1) -> np.ndarray:
    """Nested-scheme descendants ``sub_levels`` down: (n,) -> (n, 4**sub_levels)."""
    ipix = np.asarray(ipix, dtype=np.int64)
    k = 4**sub_levels
    return ipix[:, None] * k + np.arange(k, dtype=np.int64)[None, :]
