"""Loss functionals and fit metrics: check loss, Huber-type discrepancy,
total-variation seminorm, and mean squared error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LengthMismatchError, as_tau
from .diffop import DifferenceOperator, apply as diff_apply


@dataclass(frozen=True)
class LossReport:
    check_sum: float
    delta2_sum: float
    delta2_mean: float
    mse: float


def check_loss(u, tau) -> np.ndarray | float:
    """Asymmetric absolute loss max(tau*u, (tau-1)*u).

    Nonnegative, zero only at u = 0; the max form is branch-free and
    exact at the kink.  Accepts scalars or arrays.
    """
    t = as_tau(tau)
    u = np.asarray(u, dtype=float)
    out = np.maximum(t * u, (t - 1.0) * u)
    return float(out) if out.ndim == 0 else out


def delta2(delta) -> tuple[float, float]:
    """Sum and mean of min(|delta_i|, delta_i^2).

    This clipped quadratic behaves like a squared error for small
    entries and an absolute error for large ones; both the sum and the
    per-point mean are returned to keep factors of n explicit.
    """
    d = np.asarray(delta, dtype=float)
    a = np.abs(d)
    total = float(np.sum(np.minimum(a, d * d)))
    return total, total / d.size


def tv_seminorm(op: DifferenceOperator, theta) -> float:
    """L1 norm of the order-r weighted differences of theta."""
    return float(np.sum(np.abs(diff_apply(op, theta))))


def empirical_loss_gap(f_i: float, g_i: float, y_i: float, tau) -> float:
    """Per-point check-loss difference between two fitted values.

    Bounded in magnitude by |f_i - g_i| (asserted in the test suite,
    not enforced here).
    """
    t = as_tau(tau)
    return float(check_loss(y_i - f_i, t) - check_loss(y_i - g_i, t))


def mse(fit, truth) -> float:
    """Mean squared error (1/n) sum (fit_i - truth_i)^2."""
    f = np.asarray(fit, dtype=float)
    g = np.asarray(truth, dtype=float)
    if f.shape != g.shape:
        raise LengthMismatchError(f"shape mismatch {f.shape} vs {g.shape}")
    diff = f - g
    return float(np.dot(diff, diff) / f.size)


def loss_report(fit, truth, y, tau) -> LossReport:
    """Bundle of fit metrics against a reference vector."""
    fit = np.asarray(fit, dtype=float)
    resid = np.asarray(y, dtype=float) - fit
    d2_sum, d2_mean = delta2(fit - np.asarray(truth, dtype=float))
    return LossReport(
        check_sum=float(np.sum(check_loss(resid, tau))),
        delta2_sum=d2_sum,
        delta2_mean=d2_mean,
        mse=mse(fit, truth),
    )
