"""Dense-tensor index algebra: mode unfolding/folding and observation masks.

Tensors are plain ``numpy.ndarray`` values with float64 entries. The
canonical element order is row-major (last index fastest) and modes are
numbered 1..N, following the usual multilinear-algebra convention.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "ObservationMask",
    "unfold",
    "fold",
    "mask_project",
    "vec_complement",
    "scatter_complement",
]


class ObservationMask:
    """Index bookkeeping for the observed entries of a fixed-shape tensor.

    Stores the boolean observation pattern together with precomputed
    row-major linearizations of the observed index set and its complement,
    so projections and complement (un)vectorization are O(1) lookups with
    a stable, reproducible ordering.

    Parameters
    ----------
    observed : array_like of bool
        Boolean tensor marking observed positions; its shape fixes the
        tensor shape the mask applies to.
    """

    def __init__(self, observed):
        observed = np.asarray(observed, dtype=bool)
        if observed.ndim < 1:
            raise ValueError("mask must have at least one mode")
        observed = np.ascontiguousarray(observed)
        self.observed = observed
        flat = observed.ravel()
        #: ascending row-major linear indices of the observed entries
        self.omega = np.flatnonzero(flat).astype(np.int64)
        #: ascending row-major linear indices of the unobserved entries
        self.omega_bar = np.flatnonzero(~flat).astype(np.int64)

    @classmethod
    def from_linear(cls, shape, omega):
        """Build a mask from row-major linear indices of the observed set."""
        shape = tuple(int(d) for d in shape)
        total = int(np.prod(shape, dtype=np.int64))
        omega = np.asarray(omega, dtype=np.int64).ravel()
        if omega.size and (omega.min() < 0 or omega.max() >= total):
            raise ValueError("observed index out of range for shape")
        flat = np.zeros(total, dtype=bool)
        flat[omega] = True
        return cls(flat.reshape(shape))

    @property
    def shape(self) -> tuple:
        return self.observed.shape

    @property
    def size(self) -> int:
        return int(self.observed.size)

    @property
    def n_observed(self) -> int:
        return int(self.omega.size)

    @property
    def n_unobserved(self) -> int:
        return int(self.omega_bar.size)

    def __repr__(self):
        return (f"ObservationMask(shape={self.shape}, "
                f"observed={self.n_observed}/{self.size})")


def unfold(t, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding (matricization) of a dense tensor.

    Entry ``t[i_1, ..., i_N]`` lands in row ``i_mode``; its column is the
    row-major rank of the remaining indices taken in increasing mode
    order. The mapping is a bijection inverted exactly by :func:`fold`.

    Parameters
    ----------
    t : array_like
        N-mode tensor.
    mode : int
        Mode to bring to the rows, 1-based (1 <= mode <= N).

    Returns
    -------
    ndarray
        Matrix of shape ``(I_mode, prod of remaining dims)``.
    """
    t = np.asarray(t, dtype=np.float64)
    if not 1 <= mode <= t.ndim:
        raise ValueError(f"mode {mode} out of range for a {t.ndim}-mode tensor")
    return np.moveaxis(t, mode - 1, 0).reshape(t.shape[mode - 1], -1)


def fold(m, mode: int, shape) -> np.ndarray:
    """Inverse of :func:`unfold` under the same index convention.

    Parameters
    ----------
    m : array_like
        Matrix with ``shape[mode-1]`` rows and ``prod(remaining dims)``
        columns.
    mode : int
        Mode the rows of ``m`` correspond to, 1-based.
    shape : sequence of int
        Target tensor shape.
    """
    shape = tuple(int(d) for d in shape)
    m = np.asarray(m, dtype=np.float64)
    if not 1 <= mode <= len(shape):
        raise ValueError(f"mode {mode} out of range for a {len(shape)}-mode tensor")
    rest = shape[:mode - 1] + shape[mode:]
    expected = (shape[mode - 1], int(np.prod(rest, dtype=np.int64)) if rest else 1)
    if m.shape != expected:
        raise ValueError(f"matrix shape {m.shape} inconsistent with "
                         f"shape {shape} at mode {mode}")
    return np.ascontiguousarray(np.moveaxis(m.reshape((shape[mode - 1],) + rest), 0, mode - 1))


def _check_shapes(t, mask):
    if t.shape != mask.shape:
        raise ValueError(f"tensor shape {t.shape} does not match mask shape {mask.shape}")


def mask_project(t, mask: ObservationMask, keep_observed: bool = True) -> np.ndarray:
    """Keep the entries inside the (un)observed set and zero the rest."""
    t = np.asarray(t, dtype=np.float64)
    _check_shapes(t, mask)
    keep = mask.observed if keep_observed else ~mask.observed
    return np.where(keep, t, 0.0)


def vec_complement(t, mask: ObservationMask) -> np.ndarray:
    """Vector of the unobserved entries in ascending row-major order."""
    t = np.asarray(t, dtype=np.float64)
    _check_shapes(t, mask)
    return t.ravel()[mask.omega_bar]


def scatter_complement(v, mask: ObservationMask, base) -> np.ndarray:
    """Copy of ``base`` with the unobserved positions overwritten by ``v``.

    ``v`` must list the new values in the same ascending row-major order
    used by :func:`vec_complement`; observed positions are untouched.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    base = np.asarray(base, dtype=np.float64)
    _check_shapes(base, mask)
    if v.size != mask.n_unobserved:
        raise ValueError(f"value vector has length {v.size}, "
                         f"expected {mask.n_unobserved}")
    out = np.array(base, dtype=np.float64, order="C", copy=True)
    out.reshape(-1)[mask.omega_bar] = v
    return out
