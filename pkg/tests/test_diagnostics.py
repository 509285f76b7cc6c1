import numpy as np
import pytest

from qatf.core import LengthMismatchError
from qatf.diffop import apply, build_diff_operator
from qatf.diagnostics import (
    build_poly_projector,
    check_lemma_norm_bound,
    check_lipschitz,
    diagnostic_table,
    operator_annihilates_projection,
    project_p,
    project_q,
)
from qatf.losses import tv_seminorm


@pytest.fixture
def projector():
    rng = np.random.default_rng(0)
    x = np.sort(rng.uniform(0.01, 1.0, 30))
    return x, build_poly_projector(x, 3)


def test_basis_orthonormal(projector):
    _, proj = projector
    gram = proj.basis.T @ proj.basis
    assert np.max(np.abs(gram - np.eye(3))) <= 1e-10


def test_projection_fixes_polynomials(projector):
    x, proj = projector
    poly = 1.5 - 2.0 * x + 0.7 * x ** 2
    assert np.max(np.abs(project_p(proj, poly) - poly)) <= 1e-9


def test_projection_idempotent(projector):
    _, proj = projector
    rng = np.random.default_rng(1)
    for _ in range(20):
        delta = rng.normal(size=30)
        once = project_p(proj, delta)
        assert np.max(np.abs(project_p(proj, once) - once)) <= 1e-10


def test_projection_matches_least_squares(projector):
    x, proj = projector
    rng = np.random.default_rng(2)
    vander = np.vander(x, 3, increasing=True)
    for _ in range(10):
        delta = rng.normal(size=30)
        coef, *_ = np.linalg.lstsq(vander, delta, rcond=None)
        assert np.max(np.abs(project_p(proj, delta) - vander @ coef)) <= 1e-9


def test_complement_projection(projector):
    x, proj = projector
    rng = np.random.default_rng(3)
    delta = rng.normal(size=30)
    p = project_p(proj, delta)
    q = project_q(proj, delta)
    assert np.allclose(p + q, delta)
    assert np.max(np.abs(proj.basis.T @ q)) <= 1e-9
    poly = 2.0 + x
    assert np.max(np.abs(project_q(proj, poly))) <= 1e-9


def test_penalty_ignores_polynomial_part(projector):
    x, proj = projector
    op = build_diff_operator(x, 3)
    rng = np.random.default_rng(4)
    for _ in range(10):
        delta = rng.normal(size=30)
        q = project_q(proj, delta)
        tv_all = tv_seminorm(op, delta)
        tv_q = tv_seminorm(op, q)
        scale = max(1.0, np.max(np.abs(op.bands)) * np.max(np.abs(delta)))
        assert abs(tv_all - tv_q) <= 1e-8 * scale * op.rows


def test_operator_annihilates_projection_property(projector):
    x, proj = projector
    op = build_diff_operator(x, 3)
    assert operator_annihilates_projection(op, proj, probes=30, seed=5) <= 1e-8


def test_projection_length_mismatch(projector):
    _, proj = projector
    with pytest.raises(LengthMismatchError):
        project_p(proj, np.zeros(7))


def test_check_lipschitz_bound_and_determinism():
    a = check_lipschitz(50_000, seed=0)
    b = check_lipschitz(50_000, seed=0)
    assert a == b
    assert a <= 1.0 + 1e-12
    assert a > 0.5  # the sweep reaches well into the sharp regime


def test_lipschitz_hand_ratio():
    # tau=0.5, y=0, f=eps, g=-eps: |rho(-eps) - rho(eps)| / |2 eps| = 0.5... 0 gap
    eps = 1e-3
    tau = 0.5
    gap = abs(max(tau * -eps, (tau - 1) * -eps) - max(tau * eps, (tau - 1) * eps))
    assert gap / (2 * eps) == pytest.approx(0.0, abs=1e-12)
    # tau=0.9 makes the same pair asymmetric: ratio 0.4 / ... < 1
    tau = 0.9
    gap = abs(max(tau * -eps, (tau - 1) * -eps) - max(tau * eps, (tau - 1) * eps))
    assert gap / (2 * eps) <= 1.0


def test_norm_bound_sweep_no_violation():
    worst = check_lemma_norm_bound(10_000, seed=0)
    assert worst >= -1e-12


def test_diagnostic_table_all_pass():
    rows = diagnostic_table(seed=0, lipschitz_samples=20_000, norm_samples=2_000)
    assert all(passed for *_, passed in rows)
    names = [name for name, *_ in rows]
    assert len(names) == len(set(names))
