"""Supervision distributions over rotation sets from CAD geometry.

Per candidate rotation R the pipeline computes two deviation scores from an
image-aligned point cloud (visible ground-truth-view surface points rotated
into a pose-free frame):

* shape score m' = max_j |sdf(R x'_j)|: zero exactly when R re-places every
  cloud point onto the model surface,
* feature score o' = mean_j ||features(R x'_j) - z_j||_2: zero on the
  symmetry orbit of the ground truth, positive once a visible marker breaks
  the symmetry.

Scores become unnormalized weights exp(-beta_s m' - beta_f o') (stabilized
by the min energy), then grid-normalized probabilities and densities.  The
module also provides hierarchical coarse-to-fine tabulation, mode-focused
rotation sampling, and the divergence family used for training losses.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from . import grid as gridlib
from . import rotation as rt
from .grid import SO3_VOLUME, So3Grid
from .render import CameraIntrinsics, sample_visible_points
from .shapes import ShapeModel
from .validation import check_lengths_match, check_quaternions

SCORE_MODES = ("S", "F", "F+S")


@dataclass(frozen=True)
class ImageAlignedCloud:
    """Visible surface points of a ground-truth view, inverse-rotated.

    ``points`` holds X' = R_gt^-1 X for visible canonical-frame surface
    points X; ``features`` holds the per-point descriptors of X themselves.
    Rotating ``points`` by any candidate rotation places them where that
    hypothesis predicts the surface, so R_gt (and its symmetry orbit)
    re-creates surface geometry and matching features.
    """

    points: np.ndarray  # (n, 3)
    features: np.ndarray  # (n, d)
    source_rotation: np.ndarray  # (4,)

    def __post_init__(self):
        if len(self.points) < 1 or len(self.points) != len(self.features):
            raise ValueError("cloud needs matching, non-empty points and features")

    def __len__(self) -> int:
        return self.points.shape[0]


def build_image_aligned_cloud(
    model: ShapeModel,
    q_gt: np.ndarray,
    cam: CameraIntrinsics,
    n_points: int = 100,
    rng: np.random.Generator | int | None = None,
) -> ImageAlignedCloud:
    """Sample visible surface points at the ground-truth pose and align them."""
    q_gt = check_quaternions(q_gt)[0]
    surface = sample_visible_points(model, q_gt, cam, n=n_points, rng=rng)
    feats = model.features(surface)
    aligned = surface @ rt.quat_to_matrix(q_gt)  # R^-1 x == x @ R
    return ImageAlignedCloud(points=aligned, features=feats, source_rotation=q_gt)


def raw_scores(
    model: ShapeModel,
    cloud: ImageAlignedCloud,
    quats: np.ndarray,
    chunk: int = 4096,
    threads: int = 1,
    engine: str = "auto",
) -> tuple[np.ndarray, np.ndarray]:
    """Shape and feature scores for each rotation: (n, 4) -> ((n,), (n,)).

    Uses a fused numba kernel when the model is eligible (built-in geometry
    and oracle features); the chunked numpy path is the reference
    implementation and handles everything else.  Results are written by
    index, so they do not depend on thread scheduling.
    """
    quats = check_quaternions(quats)
    n = quats.shape[0]
    if engine not in ("auto", "numba", "numpy"):
        raise ValueError("engine must be auto, numba or numpy")
    if engine != "numpy" and n > 0:
        kernel_args = model._score_kernel_args()
        if kernel_args is not None:
            import numba

            from . import _fastscore as fs

            numba.set_num_threads(min(max(1, threads), numba.config.NUMBA_NUM_THREADS))
            mats = rt.quat_to_matrix(quats)
            return fs.score_rotations(mats, cloud.points, cloud.features, *kernel_args)
        if engine == "numba":
            raise ValueError("model is not eligible for the fused kernel")
    m_sdf = np.empty(n)
    o_feat = np.empty(n)

    def run(start: int) -> None:
        block = quats[start : start + chunk]
        mats = rt.quat_to_matrix(block)
        pts = np.einsum("cij,nj->cni", mats, cloud.points)
        flat = pts.reshape(-1, 3)
        sd = model.sdf(flat).reshape(len(block), -1)
        m_sdf[start : start + len(block)] = np.abs(sd).max(axis=1)
        fe = model.features(flat).reshape(len(block), len(cloud), -1)
        dist = np.linalg.norm(fe - cloud.features[None, :, :], axis=2)
        o_feat[start : start + len(block)] = dist.mean(axis=1)

    starts = list(range(0, n, chunk))
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, starts))
    else:
        for s in starts:
            run(s)
    return m_sdf, o_feat


def sdf_score(model: ShapeModel, cloud: ImageAlignedCloud, q: np.ndarray) -> float:
    """Max |sdf| of the re-rotated cloud (single rotation convenience)."""
    m, _ = raw_scores(model, cloud, np.asarray(q)[None, :])
    return float(m[0])


def feat_score(model: ShapeModel, cloud: ImageAlignedCloud, q: np.ndarray) -> float:
    """Mean per-point feature distance at a candidate rotation."""
    _, o = raw_scores(model, cloud, np.asarray(q)[None, :])
    return float(o[0])


def combined_energy(m_sdf: np.ndarray, o_feat: np.ndarray, beta_s: float, beta_f: float, score_mode: str = "F+S") -> np.ndarray:
    """Score channels -> energy; weights are exp(-energy) up to a shift."""
    if score_mode not in SCORE_MODES:
        raise ValueError(f"score_mode must be one of {SCORE_MODES}")
    if beta_s < 0 or beta_f < 0:
        raise ValueError("temperatures must be non-negative")
    energy = np.zeros_like(m_sdf)
    if score_mode in ("S", "F+S"):
        energy = energy + beta_s * m_sdf
    if score_mode in ("F", "F+S"):
        energy = energy + beta_f * o_feat
    return energy


@dataclass(frozen=True)
class ScoredDistribution:
    """Rotation set with raw scores, weights and grid-normalized probability.

    ``weights`` are exp(shift - energy) with shift = min energy (overflow
    guard), so they are proportional to exp(-beta_s m' - beta_f o') and
    equal to it whenever the best energy is zero.  ``probs`` weigh each
    rotation by its cell volume and sum to one; ``densities`` are per unit
    Haar volume (total volume pi**2).
    """

    quats: np.ndarray
    m_sdf: np.ndarray
    o_feat: np.ndarray
    weights: np.ndarray
    probs: np.ndarray
    volumes: np.ndarray
    beta_s: float
    beta_f: float
    score_mode: str = "F+S"
    shift: float = 0.0
    levels: np.ndarray | None = field(default=None)  # per-rotation grid level
    pix: np.ndarray | None = field(default=None)  # HEALPix pixel per rotation
    tilt: np.ndarray | None = field(default=None)  # tilt index per rotation

    def __post_init__(self):
        n = len(self.quats)
        for name in ("m_sdf", "o_feat", "weights", "probs", "volumes"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length mismatch")

    def __len__(self) -> int:
        return self.quats.shape[0]

    @property
    def densities(self) -> np.ndarray:
        return self.probs / self.volumes

    def entropy(self) -> float:
        p = self.probs[self.probs > 0]
        return float(-(p * np.log(p)).sum())

    def log_density_at(self, q: np.ndarray) -> np.ndarray:
        """Log density at the tabulated cell nearest to each query rotation."""
        idx = gridlib.nearest_index(self.quats, check_quaternions(q))
        dens = self.densities[np.atleast_1d(idx)]
        with np.errstate(divide="ignore"):
            return np.log(dens)


def tabulate_distribution(
    model: ShapeModel,
    cloud: ImageAlignedCloud,
    quats: np.ndarray,
    beta_s: float = 50.0,
    beta_f: float = 50.0,
    score_mode: str = "F+S",
    volumes: np.ndarray | None = None,
    levels: np.ndarray | None = None,
    threads: int = 1,
) -> ScoredDistribution:
    """Score a rotation set and normalize into a ScoredDistribution.

    Args:
        quats: (n, 4) rotations; treated as an equivolumetric grid of N
            cells (cell volume pi**2/N) unless explicit ``volumes`` given.
    """
    quats = check_quaternions(quats)
    if len(quats) == 0:
        raise ValueError("rotation set must be non-empty")
    m_sdf, o_feat = raw_scores(model, cloud, quats, threads=threads)
    return _normalize(quats, m_sdf, o_feat, beta_s, beta_f, score_mode, volumes, levels)


def _normalize(quats, m_sdf, o_feat, beta_s, beta_f, score_mode, volumes=None, levels=None, pix=None, tilt=None) -> ScoredDistribution:
    n = len(quats)
    if volumes is None:
        volumes = np.full(n, SO3_VOLUME / n)
    energy = combined_energy(m_sdf, o_feat, beta_s, beta_f, score_mode)
    shift = float(energy.min())
    weights = np.exp(shift - energy)
    mass = weights * volumes
    probs = mass / mass.sum()
    return ScoredDistribution(
        quats=quats, m_sdf=m_sdf, o_feat=o_feat, weights=weights, probs=probs,
        volumes=volumes, beta_s=beta_s, beta_f=beta_f, score_mode=score_mode,
        shift=shift, levels=levels, pix=pix, tilt=tilt,
    )


def precompute_gt_distribution(
    model: ShapeModel,
    cloud: ImageAlignedCloud,
    base_level: int = 4,
    refine_rounds: int = 1,
    top_k: int = 4096,
    beta_s: float = 50.0,
    beta_f: float = 50.0,
    score_mode: str = "F+S",
    threads: int = 1,
) -> ScoredDistribution:
    """Tabulate on a full grid, then adaptively refine the heaviest cells.

    Each round takes the ``top_k`` leaf cells carrying the most probability
    mass (weight x cell volume, ranked over all current leaves regardless of
    level), subdivides each into its 8 children, scores the children and
    replaces the parents.  The result is the leaf set of a refinement tree:
    a multiresolution partition of SO(3) (total cell volume exactly pi**2)
    that resolves sharp lobes at the depth of much finer grids without
    materializing them.
    """
    base = gridlib.generate_grid(base_level)
    n_tilt = 6 * 2**base_level
    m_cur, o_cur = raw_scores(model, cloud, base.quats, threads=threads)

    quats = base.quats
    levels = np.full(len(base), base_level, dtype=np.int64)
    pix = np.arange(len(base), dtype=np.int64) // n_tilt
    tilt = np.arange(len(base), dtype=np.int64) % n_tilt

    for _ in range(refine_rounds):
        energy = combined_energy(m_cur, o_cur, beta_s, beta_f, score_mode)
        log_mass = (energy.min() - energy) + np.log(SO3_VOLUME / (72.0 * 8.0**levels))
        k = min(top_k, len(log_mass))
        order = np.argsort(-log_mass, kind="stable")
        refine, keep = order[:k], order[k:]

        ref_levels = levels[refine]
        child_pix = np.empty(8 * k, dtype=np.int64)
        child_tilt = np.empty(8 * k, dtype=np.int64)
        child_levels = np.empty(8 * k, dtype=np.int64)
        pos = 0
        for lv in np.unique(ref_levels):
            sel = ref_levels == lv
            cp, ct = _refine_cells(int(lv), pix[refine][sel], tilt[refine][sel])
            child_pix[pos : pos + len(cp)] = cp
            child_tilt[pos : pos + len(cp)] = ct
            child_levels[pos : pos + len(cp)] = lv + 1
            pos += len(cp)
        child_quats = np.concatenate(
            [
                gridlib._cells_to_quats(int(lv), child_pix[child_levels == lv], child_tilt[child_levels == lv])
                for lv in np.unique(child_levels)
            ]
        )
        m_child, o_child = raw_scores(model, cloud, child_quats, threads=threads)

        quats = np.concatenate([quats[keep], child_quats])
        m_cur = np.concatenate([m_cur[keep], m_child])
        o_cur = np.concatenate([o_cur[keep], o_child])
        levels = np.concatenate([levels[keep], child_levels])
        pix = np.concatenate([pix[keep], child_pix])
        tilt = np.concatenate([tilt[keep], child_tilt])

    volumes = SO3_VOLUME / (72.0 * 8.0**levels)
    return _normalize(
        quats, m_cur, o_cur, beta_s, beta_f, score_mode, volumes, levels,
        pix=pix, tilt=tilt,
    )


def aggregate_to_level(dist: ScoredDistribution, level: int) -> ScoredDistribution:
    """Push a multiresolution distribution down onto a single full grid.

    Sums each leaf cell's probability mass into its ancestor cell of the
    target level, the exact pushforward of the tabulated measure onto the
    level-``level`` partition.  This is how a refined oracle is evaluated
    at a fixed grid resolution: cell mass is conserved, unlike re-scoring
    the coarse cell centers, which undersamples sharp lobes.  Scores of
    aggregated cells are mass-weighted means (coarse summaries only).

    Requires cell bookkeeping (``pix``/``tilt``/``levels``) as produced by
    :func:`precompute_gt_distribution`, and leaf levels >= ``level``.
    """
    from . import _healpix as hp

    if dist.levels is None or dist.pix is None or dist.tilt is None:
        raise ValueError("distribution lacks cell bookkeeping; build it with precompute_gt_distribution")
    target = gridlib.generate_grid(level)
    n_tilt = 6 * 2**level
    probs = np.zeros(len(target))
    m_agg = np.zeros(len(target))
    o_agg = np.zeros(len(target))
    for lv in np.unique(dist.levels):
        sel = dist.levels == lv
        d = int(lv) - level
        if d >= 0:
            # finer leaf: all mass goes to the unique ancestor cell
            nest = hp.ring_to_nest(2**int(lv), dist.pix[sel]) >> np.int64(2 * d)
            apix = hp.nest_to_ring(2**level, nest)
            cells = apix * n_tilt + (dist.tilt[sel] >> np.int64(d))
            p, pm, po = dist.probs[sel], dist.m_sdf[sel], dist.o_feat[sel]
        else:
            # coarser leaf: density is constant on the leaf, spread the mass
            # uniformly over its 8**(-d) descendants at the target level
            dd = -d
            nest = hp.ring_to_nest(2**int(lv), dist.pix[sel])
            child_nest = hp.children_nest(nest, dd)  # (n, 4**dd)
            apix = hp.nest_to_ring(2**level, child_nest.ravel())
            t_fac = 2**dd
            child_tilt = (
                dist.tilt[sel][:, None] * t_fac + np.arange(t_fac, dtype=np.int64)[None, :]
            )
            pc = apix.reshape(-1, 4**dd)
            cells = (
                np.repeat(pc, t_fac, axis=1) * n_tilt + np.tile(child_tilt, (1, 4**dd))
            ).ravel()
            share = 8.0**d
            p = np.repeat(dist.probs[sel] * share, 8**dd)
            pm = np.repeat(dist.m_sdf[sel], 8**dd)
            po = np.repeat(dist.o_feat[sel], 8**dd)
        np.add.at(probs, cells, p)
        np.add.at(m_agg, cells, p * pm)
        np.add.at(o_agg, cells, p * po)
    nonzero = probs > 0
    m_agg[nonzero] /= probs[nonzero]
    o_agg[nonzero] /= probs[nonzero]
    volumes = np.full(len(target), target.cell_volume)
    weights = probs / probs.max()
    return ScoredDistribution(
        quats=target.quats, m_sdf=m_agg, o_feat=o_agg, weights=weights,
        probs=probs, volumes=volumes, beta_s=dist.beta_s, beta_f=dist.beta_f,
        score_mode=dist.score_mode, shift=dist.shift,
        levels=np.full(len(target), level, dtype=np.int64),
        pix=np.arange(len(target), dtype=np.int64) // n_tilt,
        tilt=np.arange(len(target), dtype=np.int64) % n_tilt,
    )


def _refine_cells(level: int, pix: np.ndarray, tilt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One-level subdivision of (pixel, tilt) cells: each cell -> 8 children."""
    from . import _healpix as hp

    nside = 2**level
    nest = hp.ring_to_nest(nside, pix)
    child_pix = hp.nest_to_ring(2 * nside, hp.children_nest(nest, 1).ravel())  # (k*4,)
    child_tilt = (tilt[:, None] * 2 + np.arange(2, dtype=np.int64)[None, :]).ravel()  # (k*2,)
    k = len(pix)
    pc = child_pix.reshape(k, 4)
    tc = child_tilt.reshape(k, 2)
    pix_full = np.repeat(pc, 2, axis=1).ravel()
    tilt_full = np.tile(tc, (1, 4)).ravel()
    return pix_full, tilt_full


def mode_focused_sample(
    dist: ScoredDistribution,
    q_gt: np.ndarray,
    top_pool: int = 20000,
    n_mode: int = 3000,
    n_uniform: int = 1095,
    rng: np.random.Generator | int | None = None,
) -> np.ndarray:
    """Training rotation set: mode draws + uniform fill + the ground truth.

    Draws ``n_mode`` rotations without replacement, uniformly from the
    ``top_pool`` highest-probability tabulated rotations, adds ``n_uniform``
    Haar-uniform rotations and appends ``q_gt``; the default counts give
    3000 + 1095 + 1 = 4096.
    """
    if top_pool > len(dist):
        raise ValueError(f"top_pool {top_pool} exceeds distribution size {len(dist)}")
    if n_mode > top_pool:
        raise ValueError("n_mode cannot exceed top_pool")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    parts = []
    if n_mode > 0:
        pool = np.argsort(-dist.probs, kind="stable")[:top_pool]
        take = rng.choice(top_pool, size=n_mode, replace=False)
        parts.append(dist.quats[pool[take]])
    if n_uniform > 0:
        parts.append(rt.sample_haar(n_uniform, rng))
    parts.append(check_quaternions(q_gt))
    return np.concatenate(parts, axis=0)


def divergence(kind: str, a_mu: np.ndarray, a_nu: np.ndarray) -> float:
    """Divergences between weight vectors on identical support.

    kinds: "sq_l2" squared Euclidean; "kl" Kullback-Leibler on normalized
    inputs; "gkl" generalized KL for unnormalized positive measures,
    sum((-log(nu/mu) + nu/mu - 1) mu); "l1" total-variation-style L1.
    """
    a_mu = np.asarray(a_mu, dtype=float)
    a_nu = np.asarray(a_nu, dtype=float)
    check_lengths_match("a_mu", a_mu, "a_nu", a_nu)
    if kind == "sq_l2":
        return float(np.sum((a_mu - a_nu) ** 2))
    if kind == "l1":
        return float(np.sum(np.abs(a_mu - a_nu)))
    if kind in ("kl", "gkl"):
        if np.any(a_mu <= 0) or np.any(a_nu <= 0):
            raise ValueError(f"{kind} divergence needs strictly positive entries")
        ratio = a_nu / a_mu
        if kind == "gkl":
            return float(np.sum((-np.log(ratio) + ratio - 1.0) * a_mu))
        p = a_mu / a_mu.sum()
        q = a_nu / a_nu.sum()
        return float(np.sum(p * np.log(p / q)))
    raise ValueError(f"unknown divergence kind {kind!r}")


def symmetry_orbit(q: np.ndarray, model_or_group) -> np.ndarray:
    """Ground-truth-equivalent rotations: the symmetry orbit of ``q``.

    For a finite group G this is {g . q}; continuous symmetries are
    discretized with ``n`` samples via ``orbit_circle``.
    """
    group = model_or_group.symmetry.group if isinstance(model_or_group, ShapeModel) else model_or_group
    q = check_quaternions(q)[0]
    return rt.compose(np.asarray(group, dtype=float), np.broadcast_to(q, (len(group), 4)))


def orbit_circle(q: np.ndarray, axis: np.ndarray, n: int = 360, flip: bool = False) -> np.ndarray:
    """Discretized continuous-symmetry orbit of ``q`` about ``axis``."""
    q = check_quaternions(q)[0]
    angles = 2.0 * np.pi * np.arange(n) / n
    els = np.array([rt.from_axis_angle(axis, a) for a in angles])
    orbit = rt.compose(els, np.broadcast_to(q, (n, 4)))
    if flip:
        from .shapes import _any_perpendicular

        flip_q = rt.from_axis_angle(_any_perpendicular(np.asarray(axis, dtype=float)), np.pi)
        flipped = rt.compose(np.broadcast_to(flip_q, (n, 4)), els)
        orbit = np.concatenate([orbit, rt.compose(flipped, np.broadcast_to(q, (n, 4)))])
    return orbit


def top_mass_indices(dist: ScoredDistribution, mass: float = 0.99) -> np.ndarray:
    """Smallest prefix of cells (by descending probability) reaching ``mass``."""
    order = np.argsort(-dist.probs, kind="stable")
    csum = np.cumsum(dist.probs[order])
    cut = int(np.searchsorted(csum, mass)) + 1
    return order[:cut]


def connected_components(quats: np.ndarray, radius: float) -> np.ndarray:
    """Component labels of the geodesic radius graph over a rotation set."""
    quats = np.asarray(quats, dtype=float)
    n = quats.shape[0]
    rows, cols = [], []
    cos_thresh = np.cos(radius / 2.0)
    chunk = 2048
    for start in range(0, n, chunk):
        block = quats[start : start + chunk]
        close = np.abs(block @ quats.T) >= cos_thresh
        r, c = np.nonzero(close)
        rows.append(r + start)
        cols.append(c)
    adj = scipy.sparse.coo_matrix(
        (np.ones(sum(len(r) for r in rows)), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    _, labels = scipy.sparse.csgraph.connected_components(adj, directed=False)
    return labels


def component_diameter(quats: np.ndarray) -> float:
    """Max pairwise geodesic angle within a rotation set (radians)."""
    if len(quats) < 2:
        return 0.0
    return float(rt.pairwise_geodesic(quats, quats).max())


@dataclass(frozen=True)
class ModeSummary:
    mode_quats: np.ndarray  # representative rotation per merged mode
    mode_masses: np.ndarray  # probability mass within merge radius
    n_components: int
    continuous: bool


def analyze_modes(
    dist: ScoredDistribution,
    merge_radius: float = np.radians(5.0),
    rel_threshold: float = 0.5,
    mass: float = 0.99,
    spacing: float | None = None,
) -> ModeSummary:
    """Summarize distribution structure: merged discrete modes + connectivity.

    Local maxima above ``rel_threshold`` x the max probability are greedily
    merged within ``merge_radius``.  Separately, the top-``mass`` cell set
    is split into geodesic components at 2x the grid spacing; a component
    substantially larger than the merge radius marks a continuous mode set.
    """
    peaks = np.nonzero(dist.probs >= rel_threshold * dist.probs.max())[0]
    peaks = peaks[np.argsort(-dist.probs[peaks], kind="stable")]
    reps: list[int] = []
    for idx in peaks:
        q = dist.quats[idx]
        if all(rt.geodesic_angle(q, dist.quats[r]) > merge_radius for r in reps):
            reps.append(int(idx))
    rep_quats = dist.quats[reps]
    ang = rt.pairwise_geodesic(dist.quats, rep_quats)
    nearest = np.argmin(ang, axis=1)
    within = ang[np.arange(len(dist)), nearest] <= merge_radius
    masses = [float(dist.probs[(nearest == k) & within].sum()) for k in range(len(reps))]

    top = top_mass_indices(dist, mass)
    if spacing is None:
        spacing = (SO3_VOLUME / len(dist)) ** (1.0 / 3.0)
    if len(top) > 50_000:
        # far too diffuse for a discrete mode set; skip the O(n^2) graph
        return ModeSummary(rep_quats, np.array(masses), 1, True)
    labels = connected_components(dist.quats[top], radius=2.0 * spacing)
    n_comp = int(labels.max()) + 1 if len(labels) else 0
    continuous = False
    for comp in range(n_comp):
        members = dist.quats[top[labels == comp]]
        if len(members) > 1500:
            members = members[np.linspace(0, len(members) - 1, 1500).astype(int)]
        if component_diameter(members) > 4.0 * merge_radius:
            continuous = True
            break
    return ModeSummary(
        mode_quats=rep_quats,
        mode_masses=np.array(masses),
        n_components=n_comp,
        continuous=continuous,
    )


def save_distribution_csv(path: str, dist: ScoredDistribution) -> None:
    """Write ``qw,qx,qy,qz,m_sdf,o_feat,weight,prob`` rows with a meta header."""
    with open(path, "w") as fh:
        fh.write(
            f"# beta_s={dist.beta_s:.17g} beta_f={dist.beta_f:.17g} n={len(dist)} volume=pi^2\n"
        )
        fh.write("qw,qx,qy,qz,m_sdf,o_feat,weight,prob\n")
        data = np.column_stack([dist.quats, dist.m_sdf, dist.o_feat, dist.weights, dist.probs])
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")
