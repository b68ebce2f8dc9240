import numpy as np
import pytest

from rotdist import rotation as rt
from rotdist.encodings import (
    RotationEncoder,
    cube_pe,
    encoding_dim,
    ipdf_pe,
    nerf_pe,
    wigner_block,
    wigner_encoding,
)


def test_nerf_pe_zero_and_quarter_turn():
    np.testing.assert_allclose(nerf_pe(np.array([0.0]), 2), [0, 1, 0, 1], atol=0)
    np.testing.assert_allclose(nerf_pe(np.array([np.pi / 2]), 1), [1, 0], atol=1e-15)


def test_nerf_pe_matches_direct_evaluation():
    x = np.array([0.3, -0.7])
    got = nerf_pe(x, 3)
    # oracle: scalar sin/cos, frequency-major with interleaved sin/cos
    want = []
    for k in range(3):
        for xi in x:
            want += [np.sin(2**k * xi), np.cos(2**k * xi)]
    np.testing.assert_allclose(got, want, atol=0)
    assert got.shape == (12,)


def test_cube_pe_length_and_identity():
    q = rt.IDENTITY
    enc = cube_pe(q, 3)
    assert enc.shape == (144,)
    verts = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float
    ) / np.sqrt(3)
    want = np.concatenate([nerf_pe(v, 3) for v in verts])
    np.testing.assert_allclose(enc, want, atol=0)


def test_cube_pe_injectivity_sweep():
    rng = np.random.default_rng(0)
    a = rt.sample_haar(1000, rng)
    b = rt.sample_haar(1000, rng)
    sep = rt.geodesic_angle(a, b) > np.radians(1.0)
    ea, eb = cube_pe(a), cube_pe(b)
    gaps = np.max(np.abs(ea - eb), axis=1)
    assert np.all(gaps[sep] > 1e-6)


def test_cube_pe_not_symmetrized():
    # a 90 degree rotation permutes cube vertices but must change the encoding
    enc_rot = cube_pe(rt.rot_z(np.pi / 2))
    enc_id = cube_pe(rt.IDENTITY)
    assert np.max(np.abs(enc_rot - enc_id)) > 1e-6


def test_ipdf_pe_lengths_and_identity_raw():
    assert ipdf_pe(rt.sample_haar(1, rng=0)[0], 3, False).shape == (54,)
    enc = ipdf_pe(rt.IDENTITY, 1, True)
    assert enc.shape == (27,)
    np.testing.assert_allclose(enc[:9], np.eye(3).ravel(), atol=0)
    np.testing.assert_allclose(enc[9:], nerf_pe(np.eye(3).ravel(), 1), atol=0)


def test_ipdf_pe_matches_elementwise_oracle():
    q = rt.sample_haar(5, rng=4)
    enc = ipdf_pe(q, 2, False)
    for i in range(5):
        np.testing.assert_allclose(enc[i], nerf_pe(rt.quat_to_matrix(q[i]).ravel(), 2), atol=0)


def test_wigner_lengths():
    assert wigner_encoding(rt.IDENTITY, 5).shape == (286,)
    assert encoding_dim("wigner", max_degree=5) == 286
    assert encoding_dim("wigner", max_degree=0) == 1


def test_wigner_identity_blocks():
    for l in range(6):
        np.testing.assert_allclose(wigner_block(rt.IDENTITY, l)[0], np.eye(2 * l + 1), atol=1e-12)


def test_wigner_homomorphism():
    # oracle: the representation property D(a.b) = D(a) D(b)
    rng = np.random.default_rng(6)
    a = rt.sample_haar(20, rng)
    b = rt.sample_haar(20, rng)
    ab = rt.compose(a, b)
    for l in range(6):
        da, db, dab = wigner_block(a, l), wigner_block(b, l), wigner_block(ab, l)
        assert np.max(np.abs(dab - np.einsum("nij,njk->nik", da, db))) < 1e-8


def test_wigner_orthogonality():
    q = rt.sample_haar(30, rng=9)
    for l in (1, 3, 5):
        d = wigner_block(q, l)
        eye = np.einsum("nij,nik->njk", d, d)
        assert np.max(np.abs(eye - np.eye(2 * l + 1))) < 1e-8


def test_wigner_degree1_is_conjugated_matrix():
    q = rt.sample_haar(10, rng=12)
    # fixed change of basis: rows (-y, z, x)
    c = np.array([[0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    d1 = wigner_block(q, 1)
    want = np.einsum("ij,njk,lk->nil", c, rt.quat_to_matrix(q), c)
    np.testing.assert_allclose(d1, want, atol=1e-12)


def test_wigner_euler_degenerate_poses():
    # beta = 0 and beta = pi land in the degenerate branch of the Euler split
    for q in (rt.rot_z(0.7), rt.compose(rt.rot_z(0.4), rt.rot_y(np.pi))):
        da = wigner_block(np.array([q]), 3)[0]
        assert np.max(np.abs(da.T @ da - np.eye(7))) < 1e-10


@pytest.mark.parametrize("kind,dim", [("ipdf_pe", 54), ("cube_pe", 144), ("wigner", 286)])
def test_encoder_transform_shapes(kind, dim):
    enc = RotationEncoder(kind=kind)
    out = enc.fit_transform(rt.sample_haar(7, rng=1))
    assert out.shape == (7, dim)
    assert enc.dim == dim


def test_encoder_continuity():
    rng = np.random.default_rng(3)
    base = rt.sample_haar(50, rng)
    wiggle = np.array(
        [rt.from_axis_angle(rng.standard_normal(3), 1e-6) for _ in range(50)]
    )
    moved = rt.compose(wiggle, base)
    for kind in ("ipdf_pe", "cube_pe", "wigner"):
        enc = RotationEncoder(kind=kind)
        delta = np.max(np.abs(enc.transform(base) - enc.transform(moved)))
        assert delta <= 1e-4, kind


def test_encoder_params_and_config_roundtrip():
    enc = RotationEncoder(kind="ipdf_pe", n_freq=4, include_raw=True)
    assert enc.get_params()["n_freq"] == 4
    again = RotationEncoder.from_config(enc.to_config())
    assert again.get_params() == enc.get_params()


def test_encoder_rejects_bad_kind():
    with pytest.raises(ValueError, match="kind"):
        RotationEncoder(kind="fourier").fit()
