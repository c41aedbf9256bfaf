"""Elliptic/parabolic Dirichlet solvers and boundary diagnostics."""

import math

import numpy as np
import pytest

from stablelab.geometry import GridFunction, Interval, Square
from stablelab.kernels import ball_profile_constant
from stablelab.levy import LevyFamily, axis_measure, unit_pair_measure
from stablelab.operators import StableOperator
from stablelab.solve import (
    EllipticProblem,
    ParabolicProblem,
    barrier_check,
    boundary_exponent_fit,
    bump,
    hardy_c_window,
    hardy_check,
    solve_elliptic,
    solve_parabolic,
)

D11 = Interval(-1.0, 1.0)


def _fl_op(alpha):
    return StableOperator(unit_pair_measure(alpha), normalization="fractional_laplacian")


def _solve(alpha, n, f, domain=D11):
    op = _fl_op(alpha) if domain.dim == 1 else StableOperator(
        axis_measure(alpha, 2), normalization="fractional_laplacian"
    )
    return solve_elliptic(EllipticProblem.build(op, domain, n, f))


def test_zero_rhs_gives_zero():
    u = _solve(1.0, 63, lambda x: np.zeros_like(x))
    assert np.max(np.abs(u.values)) == 0.0
    u2 = _solve(1.0, 12, lambda X, Y: np.zeros_like(X), domain=Square(1.0))
    assert np.max(np.abs(u2.values)) == 0.0


def test_linearity():
    f1 = lambda x: np.sin(math.pi * x)
    f2 = lambda x: x**2
    ua = _solve(0.8, 127, f1)
    ub = _solve(0.8, 127, f2)
    uc = _solve(0.8, 127, lambda x: f1(x) + 2.0 * f2(x))
    np.testing.assert_allclose(uc.values, ua.values + 2.0 * ub.values, atol=1e-11)


def test_maximum_principle_1d():
    u = _solve(1.2, 255, lambda x: -np.ones_like(x))
    assert np.min(u.values) >= -1e-12
    assert np.max(u.values) <= 1.0  # |u| <= barrier scale for |f| = 1


def test_nonfinite_rhs_rejected():
    op = _fl_op(1.0)
    with pytest.raises(ValueError):
        EllipticProblem.build(op, D11, 31, lambda x: np.where(x > 0, np.inf, 1.0))


def test_profile_solution_interior_accuracy():
    # f = -1 under the fractional_laplacian tag solves to
    # (C_alpha / pi) (1 - x^2)^(alpha/2) on (-1, 1)
    for alpha in (0.6, 1.0, 1.4):
        u = _solve(alpha, 255, lambda x: -np.ones_like(x))
        exact = (ball_profile_constant(alpha) / math.pi) * (
            1.0 - u.nodes**2
        ) ** (alpha / 2.0)
        mask = D11.dist(u.nodes) >= 0.2
        rel = np.max(np.abs(u.values[mask] - exact[mask]) / exact[mask])
        assert rel <= 2e-2  # measured 4.9e-3 / 7.1e-3 / 9.3e-3 at n = 255


def test_profile_error_shrinks_under_refinement():
    errs = []
    for n in (255, 511):
        u = _solve(1.0, n, lambda x: -np.ones_like(x))
        exact = (1.0 / math.pi) * (1.0 - u.nodes**2) ** 0.5
        mask = D11.dist(u.nodes) >= 0.2
        errs.append(np.max(np.abs(u.values[mask] - exact[mask]) / exact[mask]))
    assert errs[1] < errs[0]


def test_solve_2d_symmetry_and_sign():
    u = _solve(1.0, 25, lambda X, Y: -np.ones_like(X), domain=Square(1.0))
    assert np.min(u.values) >= -1e-12
    np.testing.assert_allclose(u.values, u.values.T, atol=1e-11)
    k = u.values.shape[0] // 2  # odd n: node k sits at the exact center
    assert np.max(u.values) - u.values[k, k] <= 1e-12 * np.max(u.values)


# ---------------------------------------------------------------------------
# boundary exponent


def test_exponent_fit_recovers_exact_power():
    u = GridFunction.from_callable(D11, 511, lambda x: D11.dist(x) ** 0.6)
    fit = boundary_exponent_fit(u, D11)
    assert fit["slope"] == pytest.approx(0.6, abs=1e-6)
    assert fit["stderr"] <= 1e-6


def test_exponent_fit_linear_control():
    u = GridFunction.from_callable(D11, 511, lambda x: D11.dist(x))
    fit = boundary_exponent_fit(u, D11)
    assert fit["slope"] == pytest.approx(1.0, abs=1e-6)


def test_exponent_fit_thin_window_rejected():
    u = GridFunction.from_callable(D11, 63, lambda x: D11.dist(x))
    with pytest.raises(ValueError):
        boundary_exponent_fit(u, D11, window=(0.4 * u.h, 0.5 * u.h))


def test_solved_exponent_near_alpha_half():
    u = _solve(1.0, 511, lambda x: -np.ones_like(x))
    fit = boundary_exponent_fit(u, D11)
    assert fit["slope"] == pytest.approx(0.5, abs=0.03)


# ---------------------------------------------------------------------------
# barriers


def test_barrier_negative_inside_window():
    op = StableOperator(unit_pair_measure(1.2))
    report = barrier_check(op, D11, 0.1)
    assert report["in_lemma_range"]
    assert report["all_negative"]
    assert report["delta_hat"] > 0.0
    assert report["slope"] == pytest.approx(report["slope_target"], abs=0.1)
    assert report["passed"]


def test_barrier_sign_flips_above_window():
    # beta above alpha/2: the kernel constant turns positive near the wall
    op = StableOperator(unit_pair_measure(1.2))
    report = barrier_check(op, D11, 0.7)
    assert not report["in_lemma_range"]
    assert not report["passed"]
    nearest = int(np.argmin(report["distances"]))
    assert report["values"][nearest] > 0.0


def test_barrier_beta_domain_enforced():
    op = StableOperator(unit_pair_measure(0.8))
    with pytest.raises(ValueError):
        barrier_check(op, D11, 0.9)  # beta must stay below alpha
    with pytest.raises(ValueError):
        barrier_check(op, D11, -1.0)


# ---------------------------------------------------------------------------
# Hardy inequality


def test_bump_support_and_peak():
    u = bump(0.2, 0.6)
    x = np.array([0.2, 0.4, 0.6, 0.7, 0.1])
    v = u(x)
    assert v[0] == 0.0 and v[2] == 0.0 and v[3] == 0.0 and v[4] == 0.0
    assert v[1] == pytest.approx(math.exp(-4.0))


def test_hardy_window():
    lo, hi = hardy_c_window(1.2, 2.0)
    assert lo == pytest.approx(-1.0)
    assert hi == pytest.approx(1.0)


def test_hardy_small_family():
    op = StableOperator(unit_pair_measure(1.2))
    family = [(0.4, 0.6), (0.25, 0.5), (1.0, 2.0)]
    report = hardy_check(op, 2.0, 0.0, test_family=family, n_panels=4)
    assert report["rhs_positive"]
    assert math.isfinite(report["sup_ratio"]) and report["sup_ratio"] > 0.0
    assert report["refinement_change"] < 0.05
    assert report["passed"]


def test_hardy_c_outside_window_rejected():
    op = StableOperator(unit_pair_measure(1.2))
    with pytest.raises(ValueError):
        hardy_check(op, 2.0, 1.5, test_family=[(0.4, 0.6)])


def test_hardy_bad_bump_rejected():
    op = StableOperator(unit_pair_measure(1.2))
    with pytest.raises(ValueError):
        hardy_check(op, 2.0, 0.0, test_family=[(-0.1, 0.5)])


# ---------------------------------------------------------------------------
# parabolic


def _family(alpha=1.0, switch=0.5, T=1.0):
    ma = axis_measure(alpha, 1, 1.0)
    mb = axis_measure(alpha, 1, 2.0)
    env = axis_measure(alpha, 1, 0.5)
    return LevyFamily(breakpoints=[0.0, switch, T], pieces=[ma, mb], lower_envelope=env)


def test_parabolic_zero_data_stays_zero():
    P = ParabolicProblem(_family(), D11, 32, lambda t, x: np.zeros_like(x),
                         None, 1.0, 0.25)
    sol = solve_parabolic(P)
    for s in sol.snapshots:
        assert np.max(np.abs(s.values)) == 0.0
    assert sol.piece_indices == [0, 0, 1, 1]


def test_parabolic_max_principle_negative_forcing():
    P = ParabolicProblem(_family(T=0.5, switch=0.25), D11, 32,
                         lambda t, x: -np.ones_like(x), None, 0.5, 0.125)
    sol = solve_parabolic(P)
    final = sol.snapshots[-1].values
    assert np.max(final) <= 1e-12
    assert np.min(final) >= -0.5 - 1e-9  # |u| <= t * ||f||


def test_parabolic_decay_from_initial_data():
    # no forcing: implicit Euler contracts the sup norm at every step
    P = ParabolicProblem(_family(), D11, 32, lambda t, x: np.zeros_like(x),
                         lambda x: np.sin(math.pi * (x + 1.0) / 2.0), 1.0, 0.25)
    sol = solve_parabolic(P)
    sups = [float(np.max(np.abs(s.values))) for s in sol.snapshots]
    assert all(b < a for a, b in zip(sups[:-1], sups[1:]))
    assert np.min(sol.snapshots[-1].values) >= -1e-12


def test_parabolic_alignment_validation():
    with pytest.raises(ValueError):
        ParabolicProblem(_family(), D11, 16, lambda t, x: np.zeros_like(x),
                         None, 1.0, 0.3)  # dt does not divide T
    with pytest.raises(ValueError):
        ParabolicProblem(_family(switch=0.37), D11, 16,
                         lambda t, x: np.zeros_like(x), None, 1.0, 0.25)
