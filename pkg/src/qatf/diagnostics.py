"""Executable checks of the mathematical identities the estimator rests on.

Polynomial projectors verify that the difference operator annihilates
exactly the low-degree polynomial space; randomized sweeps confirm the
per-point 1-Lipschitz property of check-loss differences and the
norm inequality linking the empirical L2 norm to the clipped
(Huber-type) discrepancy.  Everything here is deterministic given a
seed and reports worst-case slacks rather than averages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LengthMismatchError
from .diffop import DifferenceOperator, apply as d_apply
from .losses import delta2
from .rng import Stream


@dataclass(frozen=True)
class PolyProjector:
    """Orthonormal basis of degree < r polynomials evaluated at x."""

    order: int
    x: np.ndarray
    basis: np.ndarray  # (n, r), orthonormal columns under the dot product

    @property
    def n(self) -> int:
        return self.x.size


def build_poly_projector(x, r: int) -> PolyProjector:
    """Orthonormalize the Vandermonde columns 1, x, ..., x^(r-1).

    Modified Gram-Schmidt with one reorthogonalization pass keeps the
    basis orthonormal to ~1e-10 even for clustered abscissae.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if not 1 <= r <= n:
        raise ValueError(f"order must satisfy 1 <= r <= n, got r={r}, n={n}")
    v = np.vander(x, r, increasing=True).astype(float)
    q = np.empty_like(v)
    for j in range(r):
        u = v[:, j].copy()
        for _ in range(2):
            for i in range(j):
                u -= np.dot(q[:, i], u) * q[:, i]
        norm = np.linalg.norm(u)
        if norm == 0.0:
            raise ValueError("degenerate abscissae: polynomial basis is rank-deficient")
        q[:, j] = u / norm
    q.setflags(write=False)
    return PolyProjector(order=r, x=x, basis=q)


def project_p(proj: PolyProjector, delta) -> np.ndarray:
    """Orthogonal projection onto the polynomial space."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (proj.n,):
        raise LengthMismatchError(f"expected length {proj.n}, got {delta.shape}")
    return proj.basis @ (proj.basis.T @ delta)


def project_q(proj: PolyProjector, delta) -> np.ndarray:
    """Projection onto the orthogonal complement of the polynomial space."""
    delta = np.asarray(delta, dtype=float)
    return delta - project_p(proj, delta)


def check_lipschitz(samples: int, seed: int = 0) -> float:
    """Worst |check-loss gap| / |f - g| over random draws; must be <= 1.

    Draws (y, f, g) from a mix of normal and heavy-tailed laws and tau
    uniformly inside (0, 1).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    stream = Stream(seed)
    y = 3.0 * stream.normal(samples)
    f = 3.0 * stream.normal(samples) + stream.cauchy(samples)
    g = 3.0 * stream.normal(samples) + stream.cauchy(samples)
    tau = 0.02 + 0.96 * stream.uniform_open(samples)
    gap = np.abs(np.maximum(tau * (y - f), (tau - 1.0) * (y - f))
                 - np.maximum(tau * (y - g), (tau - 1.0) * (y - g)))
    denom = np.abs(f - g)
    keep = denom > 0
    return float(np.max(gap[keep] / denom[keep]))


def check_lemma_norm_bound(samples: int, seed: int = 0) -> float:
    """Worst slack of max(||d||_inf, 1) * Delta2(d)/n - ||d||_n^2 over draws.

    Nonnegative slack everywhere confirms the clipped discrepancy
    dominates the empirical squared norm after the sup-norm correction.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    stream = Stream(seed)
    worst = np.inf
    for i in range(samples):
        n = 1 + int(stream.u64(1)[0] % 50)
        scale = 10.0 ** (stream.uniform_open(1)[0] * 4 - 2)
        delta = scale * stream.normal(n)
        total, _ = delta2(delta)
        rhs = max(float(np.max(np.abs(delta))), 1.0) * total / n
        lhs = float(np.dot(delta, delta)) / n
        worst = min(worst, rhs - lhs)
    return float(worst)


def operator_annihilates_projection(op: DifferenceOperator, proj: PolyProjector,
                                    probes: int = 20, seed: int = 0) -> float:
    """Worst relative residual of D(P delta) over random probe vectors."""
    stream = Stream(seed)
    worst = 0.0
    dense_scale = float(np.max(np.abs(op.bands)))
    for _ in range(probes):
        delta = stream.normal(op.n)
        p = project_p(proj, delta)
        resid = np.max(np.abs(d_apply(op, p)))
        scale = max(1.0, dense_scale * float(np.max(np.abs(p))))
        worst = max(worst, resid / scale)
    return worst


def diagnostic_table(seed: int = 0, lipschitz_samples: int = 100_000,
                     norm_samples: int = 10_000) -> list[tuple[str, float, float, bool]]:
    """Run the full suite; rows are (name, worst_value, bound, passed)."""
    from .diffop import build_diff_operator

    stream = Stream(seed ^ 0xD1A6)
    rows = []

    ratio = check_lipschitz(lipschitz_samples, seed)
    rows.append(("check-loss 1-Lipschitz ratio", ratio, 1.0 + 1e-12, ratio <= 1.0 + 1e-12))

    slack = check_lemma_norm_bound(norm_samples, seed)
    rows.append(("norm-bound worst slack", slack, -1e-12, slack >= -1e-12))

    worst_orth = worst_idem = worst_annih = 0.0
    for r in (1, 2, 3, 4):
        n = 40
        x = np.sort(stream.uniform_open_closed(n))
        proj = build_poly_projector(x, r)
        gram = proj.basis.T @ proj.basis
        worst_orth = max(worst_orth, float(np.max(np.abs(gram - np.eye(r)))))
        delta = stream.normal(n)
        once = project_p(proj, delta)
        twice = project_p(proj, once)
        worst_idem = max(worst_idem, float(np.max(np.abs(twice - once))))
        op = build_diff_operator(x, r)
        worst_annih = max(worst_annih, operator_annihilates_projection(op, proj, seed=seed))
    rows.append(("projector orthonormality", worst_orth, 1e-10, worst_orth <= 1e-10))
    rows.append(("projector idempotence", worst_idem, 1e-10, worst_idem <= 1e-10))
    rows.append(("operator annihilates projection", worst_annih, 1e-8, worst_annih <= 1e-8))
    return rows
