"""Domains, distances, ray exits, dyadic bands, regularized distance."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stablelab.geometry import (
    Disk,
    DyadicPartition,
    GridFunction,
    HalfLine,
    Interval,
    PartitionError,
    Square,
    build_partition,
    convexity_gap_check,
    dist,
    interval_nodes,
    regularized_distance,
    tail_integral_check,
)
from stablelab.levy import axis_measure, unit_pair_measure


def test_distance_spot_values():
    assert Interval(0.0, 1.0).dist(0.3) == pytest.approx(0.3)
    assert Square(2.0).dist(np.array([0.4, 1.0])) == pytest.approx(0.4)
    assert Disk(1.0).dist(np.array([0.8, 0.0])) == pytest.approx(0.2)
    assert HalfLine().dist(2.5) == pytest.approx(2.5)
    assert dist(-1.0, HalfLine()) == 0.0


def test_domain_validation():
    with pytest.raises(ValueError):
        Interval(1.0, 1.0)
    with pytest.raises(ValueError):
        Square(0.0)
    with pytest.raises(ValueError):
        Disk(-2.0)


def test_interval_nodes_layout():
    D = Interval(0.0, 1.0)
    nodes, h = interval_nodes(D, 3)
    assert h == pytest.approx(0.25)
    np.testing.assert_allclose(nodes, [0.25, 0.5, 0.75])


def test_cell_bounds_cover_interval():
    u = GridFunction.from_callable(Interval(-1.0, 1.0), 16, lambda x: x)
    lo, hi = u.cell_bounds()
    assert lo[0] == -1.0 and hi[-1] == 1.0
    np.testing.assert_allclose(hi[:-1], lo[1:])
    assert np.sum(hi - lo) == pytest.approx(2.0)


def test_grid_function_2d_layout():
    u = GridFunction.from_callable(Square(1.0), 8, lambda X, Y: X + 10.0 * Y)
    assert u.values.shape == (8, 8)
    xn, yn = u.nodes
    assert u.values[2, 5] == pytest.approx(xn[2] + 10.0 * yn[5])
    d = u.dist_nodes()
    assert d.shape == (8, 8)
    assert np.all(d > 0.0)


@settings(max_examples=80, deadline=None)
@given(x=st.floats(0.01, 0.99), up=st.booleans())
def test_interval_ray_exit_hits_boundary(x, up):
    D = Interval(0.0, 1.0)
    theta = 1.0 if up else -1.0
    rc = D.ray_exit(x, theta)
    end = x + rc * theta
    assert D.dist(end) == pytest.approx(0.0, abs=1e-12)
    assert bool(D.contains(x + 0.999 * rc * theta))


@settings(max_examples=80, deadline=None)
@given(
    r=st.floats(0.0, 0.95),
    phi=st.floats(0.0, 2.0 * math.pi),
    ang=st.floats(0.0, 2.0 * math.pi),
)
def test_disk_ray_exit_lands_on_circle(r, phi, ang):
    D = Disk(1.0)
    x = np.array([r * math.cos(phi), r * math.sin(phi)])
    theta = np.array([math.cos(ang), math.sin(ang)])
    rc = D.ray_exit(x, theta)
    assert rc > 0.0
    assert np.hypot(*(x + rc * theta)) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=80, deadline=None)
@given(x=st.floats(-0.99, 0.99), y=st.floats(-0.99, 0.99))
def test_interval_distance_is_lipschitz(x, y):
    D = Interval(-1.0, 1.0)
    assert abs(float(D.dist(x)) - float(D.dist(y))) <= abs(x - y) + 1e-12


def test_square_ray_exit_corner_ray():
    D = Square(1.0)
    x = np.array([0.25, 0.25])
    theta = np.array([1.0, 1.0]) / math.sqrt(2.0)
    rc = D.ray_exit(x, theta)
    assert rc == pytest.approx(0.75 * math.sqrt(2.0))


def test_square_corner_distance():
    D = Square(2.0)
    assert D.corner_distance(np.array([0.1, 0.2])) == pytest.approx(math.hypot(0.1, 0.2))


def test_convexity_gap_all_domains():
    for D in (Interval(-1.0, 1.0), Square(1.0), Disk(1.0)):
        report = convexity_gap_check(D, sample_count=2000, seed=3)
        assert report["passed"]
        assert report["worst_margin"] >= -1e-12


# ---------------------------------------------------------------------------
# dyadic bands


def test_partition_covers_distance_range():
    D = Interval(0.0, 1.0)
    part = build_partition(D)
    d = np.exp(np.linspace(math.log(1e-5), math.log(0.5), 400))
    total = np.zeros_like(d)
    for n in part.active_range(d.min(), d.max()):
        total += part.zeta_of_distance(n, d)
    assert np.all(total > 0.5)
    # and each band is supported only inside (c1 e^{-n}, c2 e^{-n})
    z = part.zeta_of_distance(3, d)
    support = d[z > 0]
    assert support.min() >= part.c1 * math.exp(-3) - 1e-12
    assert support.max() <= part.c2 * math.exp(-3) + 1e-12


def test_partition_sum_on_grid():
    D = Interval(0.0, 1.0)
    part = build_partition(D)
    x = np.linspace(0.01, 0.99, 50)
    total = part.partition_sum(x)
    assert np.all(total > 0.5)


def test_band_profile_plateau():
    part = DyadicPartition(Interval(0.0, 1.0))
    t = np.array([part.c1 + part.width, 0.5 * (part.c1 + part.c2), part.c2 - part.width])
    np.testing.assert_allclose(part.band_profile(t), 1.0)
    assert part.band_profile(np.array([part.c1]))[0] == 0.0
    assert part.band_profile(np.array([part.c2]))[0] == 0.0


def test_build_partition_rejects_bad_bands():
    D = Interval(0.0, 1.0)
    with pytest.raises(PartitionError):
        build_partition(D, c1=1.0, c2=2.0)  # ratio below e
    with pytest.raises(PartitionError):
        build_partition(D, c1=1.0, c2=math.e**2, mollifier_width=0.5 * (math.e**2 - 1.0))


# ---------------------------------------------------------------------------
# regularized distance


@pytest.mark.parametrize(
    "domain",
    [HalfLine(), Interval(-1.0, 1.0), Disk(1.0), Square(1.0)],
    ids=["halfline", "interval", "disk", "square"],
)
def test_smooth_psi_comparable_to_distance(domain):
    psi = regularized_distance(domain, kind="smooth")
    N = psi.comparability
    rng = np.random.default_rng(0)
    x = domain.sample_interior(rng, 500)
    d = domain.dist(x)
    p = psi(x)
    assert np.all(p <= N * d + 1e-12)
    assert np.all(d <= N * p + 1e-12)


def test_smooth_psi_hessian_bounded():
    # tau = 1: |D^2 psi| stays bounded as d -> 0
    psi = regularized_distance(Interval(0.0, 1.0), kind="smooth")
    assert psi.tau == 1.0
    for x in (0.5, 0.1, 0.01, 0.001):
        assert psi.hessian_norm(x) <= 2.0 + 1e-6  # |psi''| = 2/(b-a) = 2


def test_dyadic_psi_hessian_blows_up_no_faster_than_one_over_d():
    D = Interval(0.0, 1.0)
    psi = regularized_distance(D, kind="dyadic")
    assert psi.tau == 0.0
    # |D^2 psi| <= C d^{tau-1} = C / d; verify the scaling over two decades
    for x in (0.05, 0.005, 0.0005):
        H = psi.hessian_norm(x, step=1e-4 * x)
        assert H <= 60.0 / x  # generous constant; the point is the 1/d scaling


def test_dyadic_psi_comparable():
    D = Interval(0.0, 1.0)
    psi = regularized_distance(D, kind="dyadic")
    x = np.linspace(1e-4, 0.5, 300)
    d = D.dist(x)
    p = psi(x)
    N = psi.comparability
    assert np.all(p <= N * d + 1e-12)
    assert np.all(d <= N * p + 1e-12)


def test_disk_psi_values():
    psi = regularized_distance(Disk(1.0), kind="smooth")
    # (R^2 - r^2)/(2R) at the center equals R/2
    assert psi(np.array([0.0, 0.0])) == pytest.approx(0.5)
    assert psi(np.array([2.0, 0.0])) == 0.0


# ---------------------------------------------------------------------------
# tail integrals


def test_tail_integral_closed_form_kappa2_zero():
    # kappa2 = 0: LHS = total_mass * rho^{-kappa1}/kappa1 exactly, so every
    # ratio equals total_mass/kappa1
    D = Interval(-1.0, 1.0)
    m = unit_pair_measure(1.2)
    report = tail_integral_check(D, m, 1.2, 0.0, [0.0, 0.5, -0.7])
    assert report["passed"]
    for row in report["rows"]:
        assert row["ratio"] == pytest.approx(2.0 / 1.2)


def test_tail_integral_interval_nonzero_kappa2():
    D = Interval(-1.0, 1.0)
    m = unit_pair_measure(1.2)
    report = tail_integral_check(D, m, 1.2, 0.6, [0.0, 0.5, 0.9])
    assert report["passed"]
    assert report["sup_ratio"] < 20.0
    assert report["refinement_growth"] < 0.05


def test_tail_integral_square_axes():
    D = Square(1.0)
    m = axis_measure(1.0, 2)
    pts = [np.array([0.5, 0.5]), np.array([0.5, 0.1])]
    report = tail_integral_check(D, m, 1.0, 0.4, pts)
    assert report["passed"]


def test_tail_integral_parameter_validation():
    D = Interval(-1.0, 1.0)
    m = unit_pair_measure(1.0)
    with pytest.raises(ValueError):
        tail_integral_check(D, m, 0.0, 0.0, [0.0])
    with pytest.raises(ValueError):
        tail_integral_check(D, m, 1.0, 1.5, [0.0])  # kappa2 must stay below kappa1
