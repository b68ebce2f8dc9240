import numpy as np
import pytest

from rotdist import rotation as rt


def test_identity_compose():
    r = rt.sample_haar(1, rng=3)[0]
    np.testing.assert_allclose(rt.compose(rt.IDENTITY, r), r, atol=1e-12)
    np.testing.assert_allclose(rt.compose(r, rt.IDENTITY), r, atol=1e-12)


def test_compose_inverse_is_identity():
    for r in rt.sample_haar(20, rng=7):
        np.testing.assert_allclose(rt.compose(r, rt.inverse(r)), rt.IDENTITY, atol=1e-12)


def test_compose_matches_matrix_product():
    # oracle: multiply the 3x3 matrices directly
    a, b = rt.rot_z(np.radians(30)), rt.rot_z(np.radians(60))
    np.testing.assert_allclose(rt.compose(a, b), rt.rot_z(np.radians(90)), atol=1e-12)
    rng = np.random.default_rng(11)
    for a, b in zip(rt.sample_haar(50, rng), rt.sample_haar(50, rng)):
        prod = rt.quat_to_matrix(a) @ rt.quat_to_matrix(b)
        np.testing.assert_allclose(rt.quat_to_matrix(rt.compose(a, b)), prod, atol=1e-12)


def test_inverse_identity_and_axis_negation():
    np.testing.assert_allclose(rt.inverse(rt.IDENTITY), rt.IDENTITY, atol=0)
    np.testing.assert_allclose(rt.inverse(rt.rot_z(np.radians(40))), rt.rot_z(np.radians(-40)), atol=1e-15)


def test_inverse_matches_transpose():
    for r in rt.sample_haar(30, rng=13):
        np.testing.assert_allclose(
            rt.quat_to_matrix(rt.inverse(r)), rt.quat_to_matrix(r).T, atol=1e-12
        )


def test_matrix_roundtrip_and_orthonormality():
    q = rt.sample_haar(200, rng=5)
    m = rt.quat_to_matrix(q)
    eye = np.einsum("nij,nik->njk", m, m)
    np.testing.assert_allclose(eye, np.broadcast_to(np.eye(3), eye.shape), atol=1e-9)
    np.testing.assert_allclose(np.linalg.det(m), 1.0, atol=1e-9)
    np.testing.assert_allclose(rt.matrix_to_quat(m), q, atol=1e-9)


def test_geodesic_angle_cases():
    r = rt.sample_haar(1, rng=2)[0]
    assert rt.geodesic_angle(r, r) == pytest.approx(0.0, abs=1e-9)
    assert rt.geodesic_angle(rt.IDENTITY, rt.rot_x(np.pi / 2)) == pytest.approx(np.pi / 2, abs=1e-12)


def test_geodesic_matches_trace_formula():
    # oracle: arccos((trace(A^T B) - 1) / 2)
    a = rt.sample_haar(100, rng=21)
    b = rt.sample_haar(100, rng=22)
    ang = rt.geodesic_angle(a, b)
    tr = np.einsum("nij,nij->n", rt.quat_to_matrix(a), rt.quat_to_matrix(b))
    np.testing.assert_allclose(ang, np.arccos(np.clip((tr - 1) / 2, -1, 1)), atol=1e-7)


def test_geodesic_bi_invariance():
    rng = np.random.default_rng(31)
    a, b, g = (rt.sample_haar(50, rng) for _ in range(3))
    base = rt.geodesic_angle(a, b)
    np.testing.assert_allclose(rt.geodesic_angle(rt.compose(g, a), rt.compose(g, b)), base, atol=1e-9)
    np.testing.assert_allclose(rt.geodesic_angle(rt.compose(a, g), rt.compose(b, g)), base, atol=1e-9)


def test_canonicalize_idempotent_and_sign():
    rng = np.random.default_rng(41)
    q = rng.standard_normal((500, 4))
    c = rt.canonicalize(q)
    np.testing.assert_allclose(rt.canonicalize(c), c, atol=0)
    np.testing.assert_allclose(rt.canonicalize(-c), c, atol=0)
    assert np.all((c[:, 0] > 0) | (c[:, 0] == 0))
    np.testing.assert_allclose(np.linalg.norm(c, axis=1), 1.0, atol=1e-12)
    # w == 0 edge: first nonzero of (x, y, z) must be positive
    edge = rt.canonicalize(np.array([0.0, -1.0, 0.3, -0.2]))
    assert edge[0] == 0 and edge[1] > 0


def test_sample_haar_determinism_and_empty():
    assert rt.sample_haar(0, rng=0).shape == (0, 4)
    np.testing.assert_array_equal(rt.sample_haar(64, rng=123), rt.sample_haar(64, rng=123))


def test_sample_haar_angle_density():
    # oracle: Haar angle density (1 - cos t) / pi, chi-square over 32 bins
    n = 100_000
    q = rt.sample_haar(n, rng=99)
    ang = rt.geodesic_angle(q, rt.IDENTITY)
    edges = np.linspace(0, np.pi, 33)
    counts, _ = np.histogram(ang, bins=edges)
    cdf = (edges - np.sin(edges)) / np.pi
    expected = n * np.diff(cdf)
    chi2 = np.sum((counts - expected) ** 2 / expected)
    # 31 dof, 1% critical value
    from scipy.stats import chi2 as chi2_dist

    assert chi2 < chi2_dist.ppf(0.99, 31)


def test_sample_haar_mean_matrix_near_zero():
    q = rt.sample_haar(100_000, rng=7)
    mean = rt.quat_to_matrix(q).mean(axis=0)
    assert np.max(np.abs(mean)) < 0.02


def test_rotate_points_matches_matrix():
    rng = np.random.default_rng(8)
    q = rt.sample_haar(10, rng)
    pts = rng.standard_normal((17, 3))
    out = rt.rotate_points(q, pts)
    for i in range(10):
        np.testing.assert_allclose(out[i], pts @ rt.quat_to_matrix(q[i]).T, atol=1e-12)


def test_csv_row_roundtrip():
    q = rt.sample_haar(5, rng=17)
    for row in q:
        parsed = np.array([float(tok) for tok in rt.quat_to_csv_row(row).split(",")])
        np.testing.assert_array_equal(parsed, row)
