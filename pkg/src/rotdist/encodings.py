"""Rotation positional encodings: sinusoidal PE variants and Wigner-D blocks.

Three families, all mapping a rotation to a fixed-length real vector:

* ``ipdf_pe``: sinusoidal encoding applied to the 9 row-major rotation
  matrix entries, optionally with the raw entries prepended.
* ``cube_pe``: the 8 cube vertices are rotated and each rotated vertex is
  sinusoidally encoded; 144 dimensions at the default 3 frequencies.
* ``wigner``: real orthogonal Wigner-D block matrices of degree 0..L,
  flattened block-major; the degree-1 block is a fixed conjugation of the
  rotation matrix and higher blocks follow the group homomorphism.

Each family is also exposed as a scikit-learn transformer
(:class:`RotationEncoder`) over arrays of quaternions.
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .rotation import quat_to_matrix
from .validation import check_quaternions

ENCODING_KINDS = ("ipdf_pe", "cube_pe", "wigner")

# Cube vertices on the unit sphere, ordered lexicographically by sign pattern.
_CUBE_VERTICES = np.array(
    [[sx, sy, sz] for sx in (-1.0, 1.0) for sy in (-1.0, 1.0) for sz in (-1.0, 1.0)]
) / np.sqrt(3.0)


def nerf_pe(x: np.ndarray, n_freq: int) -> np.ndarray:
    """Sinusoidal positional encoding with doubling frequencies.

    For input components x_i, emits (sin(2^k x_i), cos(2^k x_i)) for
    k = 0..n_freq-1, frequency-major: all components at frequency 0 first.

    Args:
        x: (d,) or (n, d) array.
        n_freq: number of frequency octaves, >= 1.

    Returns:
        (d * 2 * n_freq,) or (n, d * 2 * n_freq) array.
    """
    if n_freq < 1:
        raise ValueError("n_freq must be >= 1")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    n, d = x.shape
    out = np.empty((n, d * 2 * n_freq))
    for k in range(n_freq):
        scaled = x * (2.0**k)
        block = out[:, k * 2 * d : (k + 1) * 2 * d]
        block[:, 0::2] = np.sin(scaled)
        block[:, 1::2] = np.cos(scaled)
    return out[0] if single else out


def cube_pe(q: np.ndarray, n_freq: int = 3) -> np.ndarray:
    """Encode rotation(s) by sinusoidally embedding the rotated cube vertices.

    The 8 vertices (+-1, +-1, +-1)/sqrt(3) are rotated, then each vertex is
    passed through :func:`nerf_pe` and the per-vertex encodings are
    concatenated in fixed vertex order.  Length 48 * n_freq (144 at 3).
    """
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    m = quat_to_matrix(np.atleast_2d(q))  # (n, 3, 3)
    verts = np.einsum("nij,vj->nvi", m, _CUBE_VERTICES)  # (n, 8, 3)
    n = verts.shape[0]
    per_vertex = nerf_pe(verts.reshape(n * 8, 3), n_freq).reshape(n, -1)
    return per_vertex[0] if single else per_vertex


def ipdf_pe(q: np.ndarray, n_freq: int = 3, include_raw: bool = False) -> np.ndarray:
    """Encode rotation(s) by sinusoidally embedding the 9 matrix entries.

    Length 18 * n_freq, plus 9 leading raw entries when ``include_raw``.
    """
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    flat = quat_to_matrix(np.atleast_2d(q)).reshape(-1, 9)
    enc = nerf_pe(flat, n_freq)
    if include_raw:
        enc = np.concatenate([flat, enc], axis=1)
    return enc[0] if single else enc


def _zyz_euler(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Z-Y-Z Euler angles from rotation matrices (n, 3, 3), degeneracy-safe."""
    sb = np.hypot(m[:, 0, 2], m[:, 1, 2])
    beta = np.arctan2(sb, m[:, 2, 2])
    regular = sb >= 1e-12
    alpha = np.where(
        regular,
        np.arctan2(m[:, 1, 2], m[:, 0, 2]),
        np.where(
            m[:, 2, 2] > 0,
            np.arctan2(m[:, 1, 0], m[:, 0, 0]),
            np.arctan2(-m[:, 1, 0], m[:, 1, 1]),
        ),
    )
    gamma = np.where(regular, np.arctan2(m[:, 2, 1], -m[:, 2, 0]), 0.0)
    return alpha, beta, gamma


@lru_cache(maxsize=None)
def _small_d_terms(l: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Term table (rows, cols, coef, cos_pow, sin_pow) for the d^l matrix."""
    rows, cols, coefs, cpow, spow = [], [], [], [], []
    for i, mp in enumerate(range(-l, l + 1)):
        for j, mm in enumerate(range(-l, l + 1)):
            pref = np.sqrt(
                float(factorial(l + mp) * factorial(l - mp) * factorial(l + mm) * factorial(l - mm))
            )
            for k in range(max(0, mm - mp), min(l + mm, l - mp) + 1):
                den = factorial(l + mm - k) * factorial(k) * factorial(mp - mm + k) * factorial(l - mp - k)
                rows.append(i)
                cols.append(j)
                coefs.append((-1.0) ** (mp - mm + k) * pref / den)
                cpow.append(2 * l + mm - mp - 2 * k)
                spow.append(mp - mm + 2 * k)
    return (
        np.array(rows),
        np.array(cols),
        np.array(coefs),
        np.array(cpow),
        np.array(spow),
    )


@lru_cache(maxsize=None)
def _real_basis(l: int) -> np.ndarray:
    """Unitary change of basis from complex to real harmonics of degree l."""
    dim = 2 * l + 1
    u = np.zeros((dim, dim), dtype=complex)
    isq = 1.0 / np.sqrt(2.0)
    for i, mu in enumerate(range(-l, l + 1)):
        if mu == 0:
            u[i, l] = 1.0
        elif mu > 0:
            u[i, l - mu] = isq
            u[i, l + mu] = (-1.0) ** mu * isq
        else:
            k = -mu
            u[i, l - k] = 1j * isq
            u[i, l + k] = -1j * (-1.0) ** k * isq
    return u


def wigner_block(q: np.ndarray, l: int) -> np.ndarray:
    """Real Wigner-D matrix of degree ``l``: (n, 4) -> (n, 2l+1, 2l+1).

    Satisfies D(a.b) = D(a) @ D(b) and D(a)^T D(a) = I; degree 1 equals a
    fixed signed-permutation conjugation of the rotation matrix.
    """
    q = np.atleast_2d(np.asarray(q, dtype=float))
    n = q.shape[0]
    if l == 0:
        return np.ones((n, 1, 1))
    alpha, beta, gamma = _zyz_euler(quat_to_matrix(q))
    c, s = np.cos(0.5 * beta), np.sin(0.5 * beta)
    rows, cols, coefs, cpow, spow = _small_d_terms(l)
    dim = 2 * l + 1
    d = np.zeros((n, dim, dim))
    # c, s >= 0 on beta in [0, pi]; 0**0 == 1 handles the boundary terms.
    np.add.at(
        d,
        (slice(None), rows, cols),
        coefs[None, :] * c[:, None] ** cpow[None, :] * s[:, None] ** spow[None, :],
    )
    m = np.arange(-l, l + 1)
    dc = np.exp(-1j * m[None, :, None] * alpha[:, None, None]) * d * np.exp(
        -1j * m[None, None, :] * gamma[:, None, None]
    )
    u = _real_basis(l)
    return np.einsum("ij,njk,lk->nil", u, dc, u.conj()).real


def wigner_encoding(q: np.ndarray, max_degree: int = 5) -> np.ndarray:
    """Concatenated real Wigner-D blocks of degree 0..max_degree, block-major.

    Output length sum_{l=0}^{L} (2l+1)^2, e.g. 286 at L = 5.
    """
    if not 0 <= max_degree <= 8:
        raise ValueError("max_degree must be in [0, 8]")
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    qb = np.atleast_2d(q)
    parts = [wigner_block(qb, l).reshape(qb.shape[0], -1) for l in range(max_degree + 1)]
    out = np.concatenate(parts, axis=1)
    return out[0] if single else out


def encoding_dim(kind: str, n_freq: int = 3, max_degree: int = 5, include_raw: bool = False) -> int:
    """Output dimension as a pure function of the encoding parameters."""
    if kind == "ipdf_pe":
        return 9 * 2 * n_freq + (9 if include_raw else 0)
    if kind == "cube_pe":
        return 8 * 3 * 2 * n_freq
    if kind == "wigner":
        return sum((2 * l + 1) ** 2 for l in range(max_degree + 1))
    raise ValueError(f"unknown encoding kind {kind!r}")


class RotationEncoder(TransformerMixin, BaseEstimator):
    """Stateless sklearn transformer from quaternions to encoding vectors.

    Parameters
    ----------
    kind : {"ipdf_pe", "cube_pe", "wigner"}
    n_freq : int
        Frequency octaves for the sinusoidal kinds.
    max_degree : int
        Highest Wigner-D degree (wigner kind only).
    include_raw : bool
        Prepend raw matrix entries (ipdf_pe kind only).
    """

    def __init__(self, kind: str = "cube_pe", n_freq: int = 3, max_degree: int = 5, include_raw: bool = False):
        self.kind = kind
        self.n_freq = n_freq
        self.max_degree = max_degree
        self.include_raw = include_raw

    @property
    def dim(self) -> int:
        return encoding_dim(self.kind, self.n_freq, self.max_degree, self.include_raw)

    def fit(self, X=None, y=None):
        if self.kind not in ENCODING_KINDS:
            raise ValueError(f"unknown encoding kind {self.kind!r}")
        if self.kind != "wigner" and self.n_freq < 1:
            raise ValueError("n_freq must be >= 1")
        return self

    def transform(self, X) -> np.ndarray:
        """Encode quaternions: (n, 4) -> (n, dim)."""
        self.fit()
        q = check_quaternions(X)
        if self.kind == "ipdf_pe":
            return ipdf_pe(q, self.n_freq, self.include_raw)
        if self.kind == "cube_pe":
            return cube_pe(q, self.n_freq)
        return wigner_encoding(q, self.max_degree)

    def to_config(self) -> dict:
        return {
            "kind": self.kind,
            "n_freq": self.n_freq,
            "max_degree": self.max_degree,
            "include_raw": self.include_raw,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "RotationEncoder":
        return cls(**{k: cfg[k] for k in ("kind", "n_freq", "max_degree", "include_raw") if k in cfg})
