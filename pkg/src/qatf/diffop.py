"""Weighted r-th order difference operators as banded matrices.

The order-r operator maps length-n vectors to length n-r vectors; row i
touches only entries i..i+r, so the whole matrix is held as an
(n-r, r+1) band array.  Order 0 is the identity; order 1 takes first
differences; higher orders are built recursively, interleaving first
differences with diagonal weights (r-1)/(x[i+r-1] - x[i]) that account
for uneven spacing.  The null space of the order-r operator is exactly
the degree-(r-1) polynomials evaluated at x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import LengthMismatchError, NotSortedError, OrderTooLargeError


@dataclass(frozen=True)
class DifferenceOperator:
    """Banded (n-r) x n difference operator of a given order."""

    order: int
    x: np.ndarray
    bands: np.ndarray

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def rows(self) -> int:
        return self.bands.shape[0]

    def to_dense(self) -> np.ndarray:
        r, m, n = self.order, self.rows, self.n
        dense = np.zeros((m, n))
        for k in range(r + 1):
            dense[np.arange(m), np.arange(m) + k] = self.bands[:, k]
        return dense


def build_diff_operator(x, r: int) -> DifferenceOperator:
    """Construct the order-r weighted difference operator on abscissae x.

    Parameters
    ----------
    x : array-like
        Strictly increasing abscissae, length n.
    r : int
        Difference order, 0 <= r <= n - 1.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise NotSortedError("abscissae must be a 1-D vector")
    n = x.size
    if r < 0:
        raise ValueError(f"order must be >= 0, got {r}")
    if n < r + 1:
        raise OrderTooLargeError(f"need n >= r + 1, got n={n}, r={r}")
    if n >= 2 and not np.all(np.diff(x) > 0):
        raise NotSortedError("abscissae must be strictly increasing")

    bands = np.ones((n, 1))
    for level in range(1, r + 1):
        if level == 1:
            prev = bands  # identity
            weighted = prev
        else:
            # i-th weight spans the level-wide gap x[i+level-1] - x[i]
            w = (level - 1) / (x[level - 1:] - x[: n - level + 1])
            weighted = w[:, None] * bands
        m = n - level
        nxt = np.zeros((m, level + 1))
        nxt[:, :-1] -= weighted[:-1, :]
        nxt[:, 1:] += weighted[1:, :]
        bands = nxt

    bands.setflags(write=False)
    return DifferenceOperator(order=r, x=x, bands=bands)


def apply(op: DifferenceOperator, theta) -> np.ndarray:
    """Banded product D @ theta in O(n * r) time."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (op.n,):
        raise LengthMismatchError(f"expected length {op.n}, got {theta.shape}")
    if op.order == 0:
        return theta.copy()
    win = sliding_window_view(theta, op.order + 1)
    return np.einsum("ij,ij->i", op.bands, win)


def apply_transpose(op: DifferenceOperator, v) -> np.ndarray:
    """Banded product D.T @ v in O(n * r) time."""
    v = np.asarray(v, dtype=float)
    m = op.rows
    if v.shape != (m,):
        raise LengthMismatchError(f"expected length {m}, got {v.shape}")
    out = np.zeros(op.n)
    for k in range(op.order + 1):
        out[k:k + m] += op.bands[:, k] * v
    return out


def gram_banded(op: DifferenceOperator, rho: float) -> np.ndarray:
    """Upper-banded storage of I + rho * D.T @ D.

    Returns an (r+1, n) array in the layout accepted by
    ``scipy.linalg.cholesky_banded`` / ``solveh_banded`` with
    ``lower=False``: row r holds the main diagonal and row r-s holds the
    s-th superdiagonal, right-aligned.  The matrix is symmetric positive
    definite with eigenvalues >= 1.
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    r, n, m = op.order, op.n, op.rows
    ab = np.zeros((r + 1, n))
    for s in range(r + 1):
        acc = np.zeros(n - s)
        for k in range(r + 1 - s):
            acc[k:k + m] += op.bands[:, k] * op.bands[:, k + s]
        if s == 0:
            ab[r, :] = 1.0 + rho * acc
        else:
            ab[r - s, s:] = rho * acc
    return ab
