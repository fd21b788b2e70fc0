"""Dense linear-algebra kernels: SVD, singular-value thresholding,
pseudo-inverse least squares, and Frobenius norms."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "SvdFactors",
    "svd",
    "svt",
    "least_squares_xy",
    "frob_norm",
    "nuclear_norm",
]

# Singular values <= max(m, n) * sigma_max * PINV_RTOL count as zero in
# pseudo-inverse solves.
PINV_RTOL = 1e-12


class SvdFactors(NamedTuple):
    """Thin SVD ``u @ diag(sigma) @ v.T`` with canonical column signs."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


def _as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def svd(m) -> SvdFactors:
    """Thin SVD with nonincreasing singular values and deterministic signs.

    Each column of ``u`` (and the matching column of ``v``) is flipped so
    its largest-magnitude entry is nonnegative; the product is unchanged
    but the factors become a unique canonical choice. A convergence
    failure of the underlying factorization surfaces as
    ``numpy.linalg.LinAlgError``.
    """
    m = _as_matrix(m)
    u, sigma, vt = np.linalg.svd(m, full_matrices=False)
    v = vt.T
    pivot = np.argmax(np.abs(u), axis=0)
    signs = np.where(u[pivot, np.arange(u.shape[1])] < 0.0, -1.0, 1.0)
    return SvdFactors(u * signs, sigma, v * signs)


def svt(m, tau: float) -> np.ndarray:
    """Singular-value thresholding, the proximal operator of the
    nuclear norm.

    Shrinks every singular value of ``m`` by ``tau``, clipping at zero:
    ``u @ diag(max(sigma - tau, 0)) @ v.T``.
    """
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    u, sigma, v = svd(m)
    shrunk = np.maximum(sigma - tau, 0.0)
    return (u * shrunk) @ v.T


def least_squares_xy(a, b, side: str = "left") -> np.ndarray:
    """Minimum-norm least-squares solve via the pseudo-inverse.

    ``side="left"`` returns ``argmin_Z ||a @ Z - b||_F = pinv(a) @ b``;
    ``side="right"`` returns ``argmin_Z ||Z @ a - b||_F = b @ pinv(a)``.
    """
    a = _as_matrix(a)
    b = _as_matrix(b)
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if side == "left" and a.shape[0] != b.shape[0]:
        raise ValueError(f"row mismatch: a is {a.shape}, b is {b.shape}")
    if side == "right" and a.shape[1] != b.shape[1]:
        raise ValueError(f"column mismatch: a is {a.shape}, b is {b.shape}")
    pinv = np.linalg.pinv(a, rcond=max(a.shape) * PINV_RTOL)
    return pinv @ b if side == "left" else b @ pinv


def frob_norm(t) -> float:
    """Frobenius norm of a tensor or matrix: sqrt of the sum of squares."""
    t = np.asarray(t, dtype=np.float64)
    return float(np.linalg.norm(t.ravel()))


def nuclear_norm(m) -> float:
    """Sum of the singular values of a matrix."""
    return float(np.linalg.svd(_as_matrix(m), compute_uv=False).sum())
