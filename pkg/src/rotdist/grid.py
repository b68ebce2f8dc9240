"""Hierarchical equivolumetric grids over SO(3).

A level-``l`` grid crosses the 12*4**l HEALPix pixel centers on the sphere
with 6*2**l uniformly spaced in-plane tilt angles and lifts each pair to a
rotation through the Hopf fibration, giving 72*8**l rotations that each
represent an equal Haar-volume cell of pi**2 / N.  Cells subdivide exactly:
every cell has 8 children at the next level (4 pixel children x 2 tilt
children), which is what makes coarse-to-fine refinement consistent.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import _healpix as hp
from .rotation import canonicalize

MAX_FULL_LEVEL = 5

SO3_VOLUME = np.pi**2


class GridLevelError(ValueError):
    """Raised when a full grid materialization would be too large."""


@dataclass(frozen=True)
class So3Grid:
    """Equivolumetric rotation grid at a single recursion level."""

    level: int
    quats: np.ndarray  # (72 * 8**level, 4) canonical quaternions
    parent_index: np.ndarray | None = field(default=None)

    def __len__(self) -> int:
        return self.quats.shape[0]

    @property
    def cell_volume(self) -> float:
        return SO3_VOLUME / len(self)


def _n_tilt(level: int) -> int:
    return 6 * 2**level


def _tilt_angles(level: int) -> np.ndarray:
    n = _n_tilt(level)
    # Half-step offset avoids a shared zero tilt across all pixels.
    return 2.0 * np.pi * (np.arange(n) + 0.5) / n


def _hopf_lift(z: np.ndarray, phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Lift sphere points (z, phi) with fiber angles psi to quaternions.

    Uses the Hopf coordinates on S3: with colatitude theta = arccos(z),
    q = (cos(t2) cos(p2), cos(t2) sin(p2), sin(t2) cos(phi + p2),
         sin(t2) sin(phi + p2)) where t2 = theta/2, p2 = psi/2.
    The Haar measure factorizes as (area on S2) x (length on the fiber), so
    equal-area pixels crossed with equal tilt steps give equal-volume cells.
    """
    theta_2 = 0.5 * np.arccos(np.clip(z, -1.0, 1.0))
    psi_2 = 0.5 * psi
    ct, st = np.cos(theta_2), np.sin(theta_2)
    q = np.stack(
        [
            ct * np.cos(psi_2),
            ct * np.sin(psi_2),
            st * np.cos(phi + psi_2),
            st * np.sin(phi + psi_2),
        ],
        axis=-1,
    )
    return canonicalize(q)


def _cells_to_quats(level: int, pix: np.ndarray, tilt: np.ndarray) -> np.ndarray:
    nside = 2**level
    z, phi = hp.ring_centers(nside, pix)
    psi = 2.0 * np.pi * (tilt + 0.5) / _n_tilt(level)
    return _hopf_lift(z, phi, psi)


def generate_grid(level: int) -> So3Grid:
    """Build the full level-``level`` grid of 72*8**level rotations.

    Rotations are ordered pixel-major (ring scheme) with the tilt index
    fastest, deterministically.

    Raises:
        GridLevelError: for level > 5; materializing 72*8**6 or more
            rotations is a memory hazard, use refine_top_cells instead.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    if level > MAX_FULL_LEVEL:
        raise GridLevelError(
            f"level {level} would materialize {72 * 8**level} rotations; "
            "use hierarchical refinement (refine_top_cells) beyond level 5"
        )
    nside = 2**level
    z, phi = hp.ring_centers(nside)
    psi = _tilt_angles(level)
    n_pix, n_tilt = z.shape[0], psi.shape[0]
    quats = _hopf_lift(
        np.repeat(z, n_tilt),
        np.repeat(phi, n_tilt),
        np.tile(psi, n_pix),
    )
    return So3Grid(level=level, quats=quats)


def nearest_index(grid: So3Grid | np.ndarray, q: np.ndarray, chunk: int = 262144) -> int | np.ndarray:
    """Index of the grid rotation closest in geodesic angle to ``q``.

    Equivalent to an exhaustive scan; maximizing |<q_i, q>| minimizes the
    geodesic angle.  Ties resolve to the smallest index.

    Args:
        grid: So3Grid or (n, 4) quaternion array.
        q: single quaternion (4,) or batch (m, 4).
        chunk: scan block size, keeps memory bounded on large grids.

    Returns:
        int for a single query, (m,) int64 array for a batch.
    """
    quats = grid.quats if isinstance(grid, So3Grid) else np.asarray(grid, dtype=float)
    if quats.shape[0] == 0:
        raise ValueError("grid is empty")
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    qb = np.atleast_2d(q)
    best = np.full(qb.shape[0], -1, dtype=np.int64)
    best_dot = np.full(qb.shape[0], -np.inf)
    for start in range(0, quats.shape[0], chunk):
        block = quats[start : start + chunk]
        dots = np.abs(block @ qb.T)  # (chunk, m)
        idx = np.argmax(dots, axis=0)
        val = dots[idx, np.arange(qb.shape[0])]
        better = val > best_dot
        best[better] = idx[better] + start
        best_dot[better] = val[better]
    return int(best[0]) if single else best


def refine_top_cells(
    grid: So3Grid,
    weights: np.ndarray,
    top_k: int,
    sub_levels: int = 1,
    return_parents: bool = False,
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Subdivide the ``top_k`` highest-weight cells ``sub_levels`` deep.

    Each level-``l`` cell has exactly 8**sub_levels descendants at level
    ``l + sub_levels`` (HEALPix pixel children x tilt children); the
    descendants of distinct cells are distinct, and refining every cell by
    one level reproduces the full next-level grid as a set.

    Args:
        grid: base grid.
        weights: non-negative weight per grid rotation.
        top_k: number of cells taken, ranked by weight descending with ties
            broken by smaller index.  0 yields an empty result.
        sub_levels: subdivision depth, >= 1.
        return_parents: also return the base-grid index of each child.

    Returns:
        (top_k * 8**sub_levels, 4) quaternion array, optionally with an
        int64 parent-index array of the same length.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape[0] != len(grid):
        raise ValueError("weights length must match grid length")
    if top_k > len(grid):
        raise ValueError("top_k exceeds grid length")
    if sub_levels < 1:
        raise ValueError("sub_levels must be >= 1")
    if top_k == 0:
        empty = np.empty((0, 4))
        return (empty, np.empty(0, dtype=np.int64)) if return_parents else empty

    order = np.argsort(-weights, kind="stable")[:top_k]
    n_tilt = _n_tilt(grid.level)
    pix = order // n_tilt
    tilt = order % n_tilt

    nside = 2**grid.level
    nest = hp.ring_to_nest(nside, pix)
    child_nest = hp.children_nest(nest, sub_levels)  # (k, 4**s)
    child_pix = hp.nest_to_ring(nside * 2**sub_levels, child_nest.ravel())

    t_fac = 2**sub_levels
    child_tilt = (tilt[:, None] * t_fac + np.arange(t_fac, dtype=np.int64)[None, :]).ravel()

    # Cross pixel children with tilt children per parent cell.
    k = top_k
    pc = child_pix.reshape(k, 4**sub_levels)
    tc = child_tilt.reshape(k, t_fac)
    pix_full = np.repeat(pc, t_fac, axis=1).ravel()
    tilt_full = np.tile(tc, (1, 4**sub_levels)).ravel()

    quats = _cells_to_quats(grid.level + sub_levels, pix_full, tilt_full)
    if return_parents:
        parents = np.repeat(order, 8**sub_levels)
        return quats, parents
    return quats


def mean_nn_spacing(quats: np.ndarray, n_sample: int = 512, rng: np.random.Generator | int | None = 0) -> float:
    """Monte Carlo estimate of the mean nearest-neighbor geodesic angle."""
    quats = np.asarray(quats, dtype=float)
    n = quats.shape[0]
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    take = min(n, n_sample)
    idx = rng.choice(n, size=take, replace=False)
    total = 0.0
    for i in idx:
        dots = np.abs(quats @ quats[i])
        dots[i] = -np.inf
        total += 2.0 * np.arccos(min(1.0, dots.max()))
    return total / take


def save_grid_csv(path: str, grid: So3Grid, weights: np.ndarray | None = None) -> None:
    """Write rotations (one ``qw,qx,qy,qz`` row each) with a grid header."""
    with open(path, "w") as fh:
        fh.write(f"# so3grid level={grid.level} count={len(grid)}\n")
        header = "qw,qx,qy,qz" + (",weight" if weights is not None else "")
        fh.write(header + "\n")
        data = grid.quats if weights is None else np.column_stack([grid.quats, weights])
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")


def load_grid_csv(path: str) -> tuple[So3Grid, np.ndarray | None]:
    """Read a grid written by :func:`save_grid_csv`."""
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# so3grid"):
            raise ValueError(f"{path}: missing so3grid header")
        meta = dict(part.split("=") for part in first[2:].split() if "=" in part)
        rest = fh.read()
    data = np.loadtxt(io.StringIO(rest), delimiter=",", skiprows=1, ndmin=2)
    quats = canonicalize(data[:, :4])
    weights = data[:, 4] if data.shape[1] > 4 else None
    grid = So3Grid(level=int(meta["level"]), quats=quats)
    if len(grid) != int(meta["count"]):
        raise ValueError(f"{path}: header count {meta['count']} != {len(grid)} rows")
    return grid, weights
