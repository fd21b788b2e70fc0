"""Smoothed discreteness penalty and its convex quadratic surrogate.

For an alphabet ``{a_1, ..., a_K}`` the penalty on a vector of unobserved
entries ``x`` counts, through the smooth ratio
``|x_j - a_k|^2 / (|x_j - a_k|^2 + alpha)``, how far each entry sits from
each admissible value. The quadratic transform replaces every ratio with a
surrogate that is tight at the multiplier
``beta_{k,j} = sqrt(alpha) / (|x_j - a_k|^2 + alpha)``, which collapses the
penalty (up to constants) into the convex quadratic
``x' diag(B) x - 2 x' b`` whose coefficients are accumulated over the
alphabet. Minimizing that quadratic pulls every entry toward a weighted
blend of the nearby alphabet values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Alphabet",
    "FPAuxiliaries",
    "l0_approx",
    "update_auxiliaries",
    "h_value",
    "grad_h",
    "lipschitz_step",
]


class Alphabet:
    """Finite sorted set of admissible entry values."""

    def __init__(self, values):
        v = np.sort(np.asarray(values, dtype=np.float64).ravel())
        if v.size == 0:
            raise ValueError("alphabet must be nonempty")
        if not np.all(np.isfinite(v)):
            raise ValueError("alphabet values must be finite")
        if np.any(np.diff(v) == 0.0):
            raise ValueError("alphabet values must be distinct")
        self.values = v

    @classmethod
    def integer_range(cls, low: int, high: int) -> "Alphabet":
        """Alphabet {low, low+1, ..., high} of consecutive integers."""
        return cls(np.arange(int(low), int(high) + 1, dtype=np.float64))

    def __len__(self) -> int:
        return int(self.values.size)

    def __repr__(self):
        v = self.values
        if v.size > 4:
            body = f"[{v[0]:g}, {v[1]:g}, ..., {v[-1]:g}]"
        else:
            body = "[" + ", ".join(f"{x:g}" for x in v) + "]"
        return f"Alphabet({body}, size={v.size})"

    def nearest(self, x) -> np.ndarray:
        """Nearest alphabet value per entry; ties go to the smaller value."""
        x = np.asarray(x, dtype=np.float64)
        flat = x.ravel()
        v = self.values
        idx = np.searchsorted(v, flat)
        lo = np.clip(idx - 1, 0, v.size - 1)
        hi = np.clip(idx, 0, v.size - 1)
        pick = np.where(np.abs(v[hi] - flat) < np.abs(flat - v[lo]), hi, lo)
        return v[pick].reshape(x.shape)


@dataclass
class FPAuxiliaries:
    """Quadratic-surrogate state for one vector of unobserved entries.

    Attributes
    ----------
    beta : ndarray of shape (K, L), or None
        Surrogate multipliers, one per (alphabet value, entry) pair; each
        lies in ``(0, 1/sqrt(alpha)]`` with the maximum attained exactly
        when the entry equals that alphabet value. ``None`` when the
        caller asked :func:`update_auxiliaries` not to keep the matrix
        (the coefficients below are all the solvers need).
    b : ndarray, shape (L,)
        Linear coefficients ``sum_k a_k * beta_{k,j}^2``.
    B_diag : ndarray, shape (L,)
        Diagonal quadratic coefficients ``sum_k beta_{k,j}^2``; the full
        quadratic matrix is diagonal, so only its diagonal is kept.
    alpha : float
        Smoothing constant the state was built with.
    """

    beta: np.ndarray | None
    b: np.ndarray
    B_diag: np.ndarray
    alpha: float


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 0:
        raise ValueError("smoothing constant alpha must be positive")
    return alpha


def l0_approx(v, alpha: float) -> float:
    """Smooth count of nonzero entries: ``sum v_i^2 / (v_i^2 + alpha)``.

    Lies in ``[0, len(v))`` and tends to the exact nonzero count as
    ``alpha`` goes to zero.
    """
    alpha = _check_alpha(alpha)
    v = np.asarray(v, dtype=np.float64).ravel()
    sq = v * v
    return float(np.sum(sq / (sq + alpha)))


def update_auxiliaries(x_unobs, alphabet: Alphabet, alpha: float,
                       keep_beta: bool = True) -> FPAuxiliaries:
    """Surrogate multipliers and quadratic coefficients at the given point.

    Computes ``beta_{k,j} = sqrt(alpha) / (|x_j - a_k|^2 + alpha)`` for
    every alphabet value ``a_k`` and entry ``x_j``, then accumulates the
    diagonal quadratic coefficients ``B_diag`` and linear coefficients
    ``b`` over the alphabet. ``keep_beta=False`` skips materializing the
    (K, L) multiplier matrix, which large alphabets make the dominant
    cost of each solver iteration.
    """
    alpha = _check_alpha(alpha)
    x = np.asarray(x_unobs, dtype=np.float64).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("entries must be finite")
    a = alphabet.values
    root = np.sqrt(alpha)
    beta = np.empty((a.size, x.size)) if keep_beta else None
    B_diag = np.zeros(x.size)
    b = np.zeros(x.size)
    row = np.empty(x.size)
    for k, a_k in enumerate(a):
        np.subtract(x, a_k, out=row)
        row *= row
        row += alpha
        np.divide(root, row, out=row)
        if beta is not None:
            beta[k] = row
        row *= row
        B_diag += row
        b += a_k * row
    return FPAuxiliaries(beta=beta, b=b, B_diag=B_diag, alpha=alpha)


def _check_lengths(x: np.ndarray, aux: FPAuxiliaries) -> None:
    if x.size != aux.B_diag.size:
        raise ValueError(f"vector length {x.size} does not match "
                         f"auxiliary length {aux.B_diag.size}")


def h_value(x_unobs, aux: FPAuxiliaries) -> float:
    """Surrogate penalty ``x' diag(B) x - 2 x' b`` for frozen auxiliaries."""
    x = np.asarray(x_unobs, dtype=np.float64).ravel()
    _check_lengths(x, aux)
    return float(x @ (aux.B_diag * x) - 2.0 * (aux.b @ x))


def grad_h(x_unobs, aux: FPAuxiliaries) -> np.ndarray:
    """Gradient of :func:`h_value`: ``2 * (B_diag * x - b)`` elementwise."""
    x = np.asarray(x_unobs, dtype=np.float64).ravel()
    _check_lengths(x, aux)
    return 2.0 * (aux.B_diag * x - aux.b)


def lipschitz_step(aux: FPAuxiliaries) -> float:
    """Safe gradient step size ``1 / max(B_diag)``.

    One exact gradient step of this size on the frozen surrogate never
    increases :func:`h_value`.
    """
    if aux.B_diag.size == 0:
        raise ValueError("auxiliaries are empty")
    top = float(aux.B_diag.max())
    if not top > 0:
        raise ValueError("quadratic coefficients must be positive")
    return 1.0 / top
