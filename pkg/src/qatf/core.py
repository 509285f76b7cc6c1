"""Shared domain types, validation, and dataset CSV I/O."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

TIE_EPS = 1e-12
CENTER_EPS = 1e-8


class QatfError(Exception):
    """Base class for all errors raised by this package."""


class EmptyDesignError(QatfError):
    pass


class NonFiniteError(QatfError):
    pass


class DomainError(QatfError):
    """Design values outside (0, 1] without rescaling enabled."""


class NotSortedError(QatfError):
    pass


class OrderTooLargeError(QatfError):
    pass


class LengthMismatchError(QatfError):
    pass


class DimensionMismatchError(QatfError):
    pass


class DegenerateComponentError(QatfError):
    pass


class EmptyVectorError(QatfError):
    pass


class InsufficientPointsError(QatfError):
    pass


@dataclass(frozen=True)
class TauLevel:
    """Quantile level in the open interval (0, 1)."""

    tau: float

    def __post_init__(self):
        t = float(self.tau)
        if not np.isfinite(t) or not 0.0 < t < 1.0:
            raise ValueError(f"quantile level must lie in (0, 1), got {self.tau!r}")
        object.__setattr__(self, "tau", t)

    def __float__(self):
        return self.tau


def as_tau(tau) -> float:
    """Coerce a float or TauLevel to a validated float in (0, 1)."""
    if isinstance(tau, TauLevel):
        return tau.tau
    return TauLevel(tau).tau


def as_signal(values) -> np.ndarray:
    """Return a 1-D float array, checking every entry is finite."""
    y = np.asarray(values, dtype=float)
    if y.ndim != 1:
        raise DimensionMismatchError(f"signal must be 1-D, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise NonFiniteError("signal contains NaN or Inf")
    return y


@dataclass(frozen=True)
class SortedDesign:
    """Per-dimension sorted design matrix with sort permutations.

    Attributes
    ----------
    columns : (n, d) array
        Each column strictly increasing, values in (0, 1].
    perms : (n, d) int array
        ``perms[k, j]`` is the original row index of the k-th smallest
        value in dimension j, so ``columns[:, j] == raw[perms[:, j], j]``.
    tie_perturbed : bool
        True when duplicate abscissae were broken by tiny offsets.
    """

    columns: np.ndarray
    perms: np.ndarray
    tie_perturbed: bool = False

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def d(self) -> int:
        return self.columns.shape[1]

    def to_sorted(self, j: int, values: np.ndarray) -> np.ndarray:
        """Reorder a row-ordered vector into dimension-j sorted order."""
        return values[self.perms[:, j]]

    def from_sorted(self, j: int, values: np.ndarray) -> np.ndarray:
        """Scatter a dimension-j sorted vector back to original row order."""
        out = np.empty_like(values)
        out[self.perms[:, j]] = values
        return out


@dataclass(frozen=True)
class AdditiveFit:
    """Fitted additive model: intercept plus d centered component vectors.

    ``components`` has shape (n, d) and is stored in original row order;
    each column has (numerically) zero mean, the level living in
    ``intercept``.
    """

    intercept: float
    components: np.ndarray
    order: int
    tau: float
    lam: float

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if comps.ndim != 2:
            raise DimensionMismatchError("components must be an (n, d) array")
        object.__setattr__(self, "components", comps)
        n = comps.shape[0]
        if n and comps.size:
            scale = np.maximum(1.0, np.max(np.abs(comps), axis=0))
            if np.any(np.abs(comps.sum(axis=0)) > n * CENTER_EPS * scale):
                raise ValueError("component columns must be centered to mean zero")

    @property
    def n(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.components.shape[1]


def _rescale_column(col: np.ndarray) -> np.ndarray:
    lo, hi = float(col.min()), float(col.max())
    span = hi - lo
    if span == 0.0:
        return np.full_like(col, 1.0)
    # shift by span/n so the smallest value stays strictly positive
    s = span / col.size
    return (col - lo + s) / (span + s)


def _break_ties(col: np.ndarray) -> tuple[np.ndarray, bool]:
    """Perturb duplicate values in a sorted column so it is strictly increasing."""
    if col.size < 2:
        return col, False
    diffs = np.diff(col)
    if np.all(diffs > 0):
        return col, False
    out = col.copy()
    k = 0
    for i in range(1, out.size):
        if out[i] <= out[i - 1]:
            k += 1
            out[i] = out[i] + k * TIE_EPS
            if out[i] <= out[i - 1]:
                out[i] = out[i - 1] + TIE_EPS
        else:
            k = 0
    if np.any(np.diff(out) <= 0):
        raise NotSortedError("could not break ties: values too densely packed")
    return out, True


def validate_design(raw, rescale: bool = False) -> SortedDesign:
    """Validate and sort a raw n-by-d design matrix.

    Each column is sorted ascending (stable), duplicates are broken by
    adding multiples of ``TIE_EPS``, and the permutation from sorted
    position back to original row index is recorded per dimension.

    Parameters
    ----------
    raw : array-like, shape (n, d)
        Design matrix, values in (0, 1] unless ``rescale`` is set.
    rescale : bool
        Affinely rescale each column into (0, 1] instead of erroring.
    """
    x = np.asarray(raw, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
        raise EmptyDesignError(f"design must be non-empty 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("design contains NaN or Inf")

    n, d = x.shape
    if rescale:
        x = np.column_stack([_rescale_column(x[:, j]) for j in range(d)])
    elif np.any(x <= 0.0) or np.any(x > 1.0):
        raise DomainError("design values must lie in (0, 1]; pass rescale=True to rescale")

    columns = np.empty_like(x)
    perms = np.empty((n, d), dtype=np.int64)
    perturbed = False
    for j in range(d):
        order = np.argsort(x[:, j], kind="stable")
        col, tied = _break_ties(x[order, j], )
        columns[:, j] = col
        perms[:, j] = order
        perturbed = perturbed or tied

    columns.setflags(write=False)
    perms.setflags(write=False)
    return SortedDesign(columns=columns, perms=perms, tie_perturbed=perturbed)


def read_dataset_csv(path):
    """Read a dataset CSV with header ``x1,...,xd,y[,f_star]``.

    Returns ``(x, y, f_star)`` where ``f_star`` is None when the column
    is absent.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDesignError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        has_fstar = header and header[-1] == "f_star"
        ncol = len(header)
        d = ncol - 1 - (1 if has_fstar else 0)
        expected = [f"x{j + 1}" for j in range(d)] + ["y"] + (["f_star"] if has_fstar else [])
        if d < 1 or header != expected:
            raise QatfError(f"{path}: bad header {header!r}, expected x1..xd,y[,f_star]")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != ncol:
                raise QatfError(f"{path}:{lineno}: expected {ncol} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise QatfError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise EmptyDesignError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    x = data[:, :d]
    y = data[:, d]
    f_star = data[:, d + 1] if has_fstar else None
    return x, y, f_star


def write_dataset_csv(path, x, y, f_star=None):
    """Write a dataset CSV in the ``x1,...,xd,y[,f_star]`` format, full precision."""
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    header = [f"x{j + 1}" for j in range(d)] + ["y"]
    cols = [x[:, j] for j in range(d)] + [np.asarray(y, dtype=float)]
    if f_star is not None:
        header.append("f_star")
        cols.append(np.asarray(f_star, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(n):
            writer.writerow([repr(float(c[i])) for c in cols])
