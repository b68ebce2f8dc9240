import numpy as np
import pytest
import scipy.optimize

from rotdist import _healpix as hp
from rotdist import grid as gr
from rotdist import rotation as rt


@pytest.mark.parametrize("nside", [1, 2, 4, 8, 32])
def test_healpix_ring_nest_roundtrip(nside):
    ip = np.arange(hp.npix(nside), dtype=np.int64)
    nest = hp.ring_to_nest(nside, ip)
    assert sorted(nest) == list(range(hp.npix(nside)))
    np.testing.assert_array_equal(hp.nest_to_ring(nside, nest), ip)


def test_healpix_children_tile_next_level():
    for nside in (1, 2, 4):
        nest = hp.ring_to_nest(nside, np.arange(hp.npix(nside), dtype=np.int64))
        rings = hp.nest_to_ring(2 * nside, hp.children_nest(nest).ravel())
        assert sorted(rings) == list(range(hp.npix(2 * nside)))


@pytest.mark.parametrize("level,count", [(0, 72), (1, 576), (2, 4608), (3, 36864)])
def test_grid_counts(level, count):
    assert len(gr.generate_grid(level)) == count


def test_grid_level_guard():
    with pytest.raises(gr.GridLevelError, match="refine"):
        gr.generate_grid(6)


def test_grid_deterministic_and_unique():
    a = gr.generate_grid(2)
    b = gr.generate_grid(2)
    np.testing.assert_array_equal(a.quats, b.quats)
    assert np.unique(np.round(a.quats, 9), axis=0).shape[0] == len(a)


def test_grid_quats_canonical_unit():
    g = gr.generate_grid(2)
    assert rt.is_canonical_unit(g.quats)


def _decile_edges():
    edges = [0.0]
    for frac in np.arange(0.1, 1.0, 0.1):
        edges.append(
            scipy.optimize.brentq(lambda t, fr=frac: (t - np.sin(t)) / np.pi - fr, 0.0, np.pi)
        )
    edges.append(np.pi)
    return np.array(edges)


def test_grid_angle_histogram_equivolumetric():
    # Cell centers follow the Haar angle law; quantization noise shrinks with
    # level (checked tightly at 4, loosely at 2).
    edges = _decile_edges()
    for level, tol in ((2, 0.05), (3, 0.05), (4, 0.005)):
        g = gr.generate_grid(level)
        ang = rt.geodesic_angle(g.quats, rt.IDENTITY)
        frac = np.histogram(ang, bins=edges)[0] / len(g)
        assert np.max(np.abs(frac - 0.1)) <= tol, level


def test_grid_nn_spacing_halves_per_level():
    prev = None
    for level in range(5):
        s = gr.mean_nn_spacing(gr.generate_grid(level).quats, n_sample=256, rng=0)
        if prev is not None:
            assert 0.4 * prev <= s <= 0.6 * prev
        prev = s


def test_nearest_index_self_lookup():
    g = gr.generate_grid(1)
    for k in (0, 17, 571):
        assert gr.nearest_index(g, g.quats[k]) == k


def test_nearest_index_matches_linear_scan():
    g = gr.generate_grid(2)
    queries = rt.sample_haar(25, rng=3)
    got = gr.nearest_index(g, queries)
    # oracle: exhaustive scan of all pairwise geodesic angles
    ang = rt.pairwise_geodesic(queries, g.quats)
    np.testing.assert_array_equal(got, np.argmin(ang, axis=1))


def test_nearest_index_small_perturbation():
    g = gr.generate_grid(3)
    rng = np.random.default_rng(5)
    for k in rng.integers(0, len(g), size=8):
        wiggle = rt.from_axis_angle(rng.standard_normal(3), np.radians(0.1))
        assert gr.nearest_index(g, rt.compose(wiggle, g.quats[k])) == k


def test_refine_single_cell_stays_in_parent_cell():
    g = gr.generate_grid(1)
    w = np.zeros(len(g))
    w[100] = 1.0
    kids = gr.refine_top_cells(g, w, top_k=1, sub_levels=1)
    assert kids.shape == (8, 4)
    # children must be nearer to their parent than the parent NN spacing
    spacing = gr.mean_nn_spacing(g.quats, n_sample=128, rng=0)
    assert np.all(rt.geodesic_angle(kids, g.quats[100]) < spacing)
    # and the parent must be the nearest grid point for each child
    np.testing.assert_array_equal(gr.nearest_index(g, kids), np.full(8, 100))


def test_refine_all_cells_reproduces_next_level():
    g = gr.generate_grid(1)
    kids = gr.refine_top_cells(g, np.ones(len(g)), top_k=len(g), sub_levels=1)
    want = gr.generate_grid(2).quats
    assert set(map(tuple, np.round(kids, 9))) == set(map(tuple, np.round(want, 9)))


def test_refine_zero_weights_tie_break():
    g = gr.generate_grid(0)
    kids, parents = gr.refine_top_cells(g, np.zeros(len(g)), top_k=5, sub_levels=1, return_parents=True)
    assert kids.shape == (40, 4)
    np.testing.assert_array_equal(np.unique(parents), np.arange(5))


def test_refine_top_k_zero_and_errors():
    g = gr.generate_grid(0)
    assert gr.refine_top_cells(g, np.zeros(len(g)), top_k=0).shape == (0, 4)
    with pytest.raises(ValueError):
        gr.refine_top_cells(g, np.zeros(len(g)), top_k=73)
    with pytest.raises(ValueError):
        gr.refine_top_cells(g, np.zeros(10), top_k=1)


def test_refine_two_sublevels_counts():
    g = gr.generate_grid(0)
    w = np.zeros(len(g))
    w[3] = 1.0
    kids = gr.refine_top_cells(g, w, top_k=1, sub_levels=2)
    assert kids.shape == (64, 4)
    assert np.unique(np.round(kids, 9), axis=0).shape[0] == 64


def test_grid_csv_roundtrip(tmp_path):
    g = gr.generate_grid(0)
    path = tmp_path / "grid.csv"
    weights = np.linspace(0, 1, len(g))
    gr.save_grid_csv(path, g, weights)
    first = path.read_text().splitlines()[0]
    assert first == "# so3grid level=0 count=72"
    g2, w2 = gr.load_grid_csv(path)
    assert g2.level == 0
    np.testing.assert_allclose(g2.quats, g.quats, atol=1e-15)
    np.testing.assert_allclose(w2, weights, atol=1e-15)


def test_generate_grid_level5_count():
    g = gr.generate_grid(5)
    assert len(g) == 2_359_296
