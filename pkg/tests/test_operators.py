"""Pointwise operator quadrature and grid matrices."""

import math

import numpy as np
import pytest

from stablelab.geometry import HalfLine, Interval, Square
from stablelab.kernels import K_alpha_beta, symbol_constant
from stablelab.levy import axis_measure, fractional_laplacian_measure, unit_pair_measure
from stablelab.operators import (
    ConvergenceError,
    QuadratureControls,
    StableOperator,
    apply,
    assemble_matrix_1d,
    assemble_matrix_2d_axes,
    hat_weights,
    indicator_decay_check,
)
from stablelab.solve import bump


def _fl_op(alpha, **quad_kwargs):
    quad = QuadratureControls(**quad_kwargs) if quad_kwargs else QuadratureControls()
    return StableOperator(unit_pair_measure(alpha), quad, "fractional_laplacian")


def test_operator_requires_symmetric_measure():
    from stablelab.levy import SpectralMeasure

    lopsided = SpectralMeasure(1.0, 1, np.array([[1.0], [-1.0]]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        StableOperator(lopsided)
    with pytest.raises(ValueError):
        StableOperator(unit_pair_measure(1.0), normalization="nope")


def test_effective_atoms_normalization_scale():
    from stablelab.kernels import fl_scale

    raw = StableOperator(unit_pair_measure(1.3))
    fl = StableOperator(unit_pair_measure(1.3), normalization="fractional_laplacian")
    _, w_raw = raw.effective_atoms()
    _, w_fl = fl.effective_atoms()
    np.testing.assert_allclose(w_fl, w_raw * fl_scale(1.3))


def test_symmetric_pairs_merge():
    op = StableOperator(axis_measure(0.9, 1, [2.0, 2.0]))
    pairs = op.symmetric_pairs()
    assert len(pairs) == 1
    assert pairs[0][1] == pytest.approx(2.0)


def test_refined_controls_strictly_finer():
    c = QuadratureControls()
    r = c.refined()
    assert r.n_inner > c.n_inner and r.n_panel > c.n_panel and r.n_edge > c.n_edge
    assert r.inner_radius < c.inner_radius and r.growth < c.growth
    assert r.tail_radius > c.tail_radius


def test_apply_translation_invariance():
    op = _fl_op(1.1)
    u = lambda y: np.exp(-np.asarray(y) ** 2)
    shifted = lambda y: np.exp(-(np.asarray(y) - 0.1) ** 2)
    a = apply(op, u, 0.3)
    b = apply(op, shifted, 0.4)
    assert b == pytest.approx(a, rel=1e-12)


def test_apply_scaling_covariance():
    # L[u(lam .)](x) = lam^alpha (L u)(lam x)
    alpha, lam = 0.8, 2.0
    op = _fl_op(alpha)
    u = lambda y: np.exp(-np.asarray(y) ** 2)
    left = apply(op, lambda y: u(lam * np.asarray(y)), 0.25)
    right = lam**alpha * apply(op, u, 0.5)
    assert left == pytest.approx(right, rel=1e-7)


def test_apply_symbol_on_cosine():
    # L cos(xi .)(0) = -pi |xi|^alpha under the fractional_laplacian tag
    alpha, xi = 1.5, 1.0
    op = _fl_op(alpha, tail_radius=1000.0, max_panel_width=0.3)
    val = apply(op, lambda y: np.cos(xi * np.asarray(y)), 0.0)
    assert val == pytest.approx(-math.pi * xi**alpha, rel=1e-4)


def test_apply_symbol_2d_matches_path_symbol():
    # the quadrature route and the closed-form symbol used by the sampler
    # must agree on plane waves
    from stablelab.stable_mc import PathConfig

    alpha = 1.2
    m = axis_measure(alpha, 2, [1.0, 1.0, 0.5, 0.5])
    op = StableOperator(m, QuadratureControls(tail_radius=1000.0, max_panel_width=0.3))
    cfg = PathConfig(m, dt=0.01, seed=0, n_paths=1000, domain=Square(1.0))
    xi = np.array([0.7, -0.4])
    u = lambda p: np.cos(np.asarray(p) @ xi)
    val = apply(op, u, np.array([0.0, 0.0]))
    assert val == pytest.approx(cfg.symbol(xi), rel=1e-4)


def test_apply_halfline_power_matches_kernel_constant():
    # L[(x_+)^beta](1) = pi K(alpha, beta) under the fractional_laplacian tag;
    # exercises the edge-power and tail-power quadrature branches together
    for alpha, beta in [(1.3, 0.2), (0.7, -0.2)]:
        op = _fl_op(alpha)

        def u(y):
            y = np.asarray(y, dtype=float)
            return np.where(y > 0.0, np.abs(y) ** beta, 0.0)

        val = apply(op, u, 1.0, support=HalfLine(), edge_power=beta, tail_power=beta)
        assert val == pytest.approx(math.pi * K_alpha_beta(alpha, beta), rel=1e-5)


def test_apply_raw_halfline_power():
    alpha, beta = 1.1, 0.3
    op = StableOperator(unit_pair_measure(alpha))

    def u(y):
        y = np.asarray(y, dtype=float)
        return np.where(y > 0.0, np.abs(y) ** beta, 0.0)

    val = apply(op, u, 1.0, support=HalfLine(), edge_power=beta, tail_power=beta)
    assert val == pytest.approx(K_alpha_beta(alpha, beta, normalization="raw"), rel=1e-5)


def test_apply_tail_power_validation():
    op = _fl_op(1.0)
    with pytest.raises(ValueError):
        apply(op, lambda y: np.asarray(y), 1.0, tail_power=1.5)


def test_apply_check_flag_settles():
    op = _fl_op(1.2)
    u = lambda y: np.exp(-np.asarray(y) ** 2)
    val = apply(op, u, 0.2, check=True)
    assert math.isfinite(val)


def test_apply_nonfinite_raises():
    op = _fl_op(1.0)

    def u(y):
        y = np.asarray(y, dtype=float)
        return np.where(np.abs(y) > 2.0, np.inf, 0.0)

    with pytest.raises(ConvergenceError):
        apply(op, u, 0.0)


# ---------------------------------------------------------------------------
# grid matrices


def test_hat_weights_positive_and_decaying():
    for alpha in (0.5, 1.0, 1.5):
        c = hat_weights(alpha, 64)
        assert np.all(c > 0.0)
        # kernel decay: c_k ~ k^{-1-alpha} for large k
        ratio = c[40] / c[20]
        assert ratio == pytest.approx((41.0 / 21.0) ** (-1.0 - alpha), rel=0.05)


def test_matrix_1d_structure():
    op = _fl_op(1.2)
    A, nodes, h = assemble_matrix_1d(op, Interval(-1.0, 1.0), 64)
    assert h == pytest.approx(2.0 / 65.0)
    np.testing.assert_allclose(A, A.T)
    off = A - np.diag(np.diag(A))
    assert np.all(off >= 0.0)
    assert np.all(np.diag(A) < 0.0)
    # exterior-zero convention: strictly negative row sums (mass escapes)
    assert np.all(A @ np.ones(len(A)) < 0.0)


def test_matrix_1d_toeplitz():
    op = _fl_op(0.7)
    A, _, _ = assemble_matrix_1d(op, Interval(0.0, 1.0), 32)
    for k in range(1, 5):
        band = np.diagonal(A, offset=k)
        np.testing.assert_allclose(band, band[0])


def test_matrix_2d_kronecker_separability():
    # for the axis measure, A2 (u (x) v) = (A1 u) (x) v + u (x) (A1 v)
    n = 24
    side = 1.0
    op2 = StableOperator(axis_measure(1.1, 2))
    A2, nodes, h = assemble_matrix_2d_axes(op2, Square(side), n)
    op1 = StableOperator(unit_pair_measure(1.1))
    A1, _, h1 = assemble_matrix_1d(op1, Interval(0.0, side), n)
    assert h == pytest.approx(h1)
    rng = np.random.default_rng(5)
    u = rng.standard_normal(n)
    v = rng.standard_normal(n)
    uv = np.outer(u, v).ravel()
    lhs = A2 @ uv
    rhs = np.outer(A1 @ u, v).ravel() + np.outer(u, A1 @ v).ravel()
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_matrix_2d_rejects_off_axis_atoms():
    diag = np.array([[1.0, 1.0], [-1.0, -1.0]]) / math.sqrt(2.0)
    from stablelab.levy import SpectralMeasure

    m = SpectralMeasure(1.0, 2, diag, np.array([1.0, 1.0]))
    op = StableOperator(m)
    with pytest.raises(ValueError):
        assemble_matrix_2d_axes(op, Square(1.0), 8)


def test_matrix_consistent_with_apply():
    # A u at an interior node approaches the quadrature value as h -> 0
    alpha = 0.8
    D = Interval(0.0, 1.0)
    u = bump(0.3, 0.7)
    op = _fl_op(alpha)
    support = Interval(0.3, 0.7)

    def matrix_value(n):
        A, nodes, _ = assemble_matrix_1d(op, D, n)
        k = np.argmin(np.abs(nodes - 0.5))
        return (A @ u(nodes))[k], nodes[k]

    coarse, x_c = matrix_value(255)
    fine, x_f = matrix_value(511)
    exact_c = apply(op, u, x_c, support=support)
    exact_f = apply(op, u, x_f, support=support)
    err_c = abs(coarse - exact_c) / abs(exact_c)
    err_f = abs(fine - exact_f) / abs(exact_f)
    assert err_f < err_c
    assert err_f < 5e-3


def test_indicator_decay_exact_values():
    alpha = 1.0
    op = StableOperator(unit_pair_measure(alpha))
    D = Interval(0.0, 1.0)
    report = indicator_decay_check(op, D)
    assert report["passed"]
    assert report["slope"] == pytest.approx(-alpha, abs=0.1)
    for x, val in zip(2.0 ** -np.arange(3, 11), report["values"]):
        expected = -(x**-alpha + (1.0 - x) ** -alpha) / alpha
        assert val == pytest.approx(expected, rel=1e-12)
