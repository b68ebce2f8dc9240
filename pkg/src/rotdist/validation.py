"""Input validation helpers shared across the estimator-facing API."""

from __future__ import annotations

import numpy as np

from .rotation import canonicalize


def check_quaternions(X, *, normalize: bool = True) -> np.ndarray:
    """Validate an array of rotations as (n, 4) unit quaternions.

    Accepts shape (4,), (n, 4) or anything array-like coercible to those.
    Non-finite entries and wrong trailing dimensions raise ValueError.
    """
    q = np.asarray(X, dtype=float)
    if q.ndim == 1:
        q = q[None, :]
    if q.ndim != 2 or q.shape[1] != 4:
        raise ValueError(f"expected quaternions of shape (n, 4), got {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("quaternions contain non-finite values")
    norms = np.linalg.norm(q, axis=1)
    if np.any(norms < 1e-12):
        raise ValueError("zero-norm quaternion")
    if normalize:
        q = canonicalize(q)
    return q


def check_points(X) -> np.ndarray:
    """Validate an array of 3D points as (n, 3) float64."""
    p = np.asarray(X, dtype=float)
    if p.ndim == 1:
        p = p[None, :]
    if p.ndim != 2 or p.shape[1] != 3:
        raise ValueError(f"expected points of shape (n, 3), got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("points contain non-finite values")
    return p


def check_lengths_match(name_a: str, a, name_b: str, b) -> None:
    if len(a) != len(b):
        raise ValueError(f"{name_a} has length {len(a)} but {name_b} has length {len(b)}")


def check_positive(name: str, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        raise ValueError(f"{name} must be strictly positive")
    return values
