"""Spectral measures, symmetry, nondegeneracy, and time-piecewise families."""

import numpy as np
import pytest

from stablelab.levy import (
    DegenerateMeasureError,
    LevyFamily,
    SpectralMeasure,
    axis_measure,
    check_envelope,
    directional_alpha_integral,
    fractional_laplacian_measure,
    is_symmetric,
    measure_from_json,
    measure_to_json,
    nondegeneracy_lambda,
    quadrature_atoms,
    scale_weights,
    symmetrize,
    total_mass,
    uniform_measure,
    unit_pair_measure,
)
from stablelab.kernels import fl_scale


def test_axis_measure_layout():
    m = axis_measure(0.7, 2)
    assert m.n_atoms == 4
    assert total_mass(m) == pytest.approx(4.0)
    # atoms come in +-pairs along each coordinate axis
    assert is_symmetric(m)
    np.testing.assert_allclose(np.abs(m.directions).sum(axis=1), 1.0)


def test_axis_measure_weight_shape():
    m = axis_measure(1.1, 2, [1.0, 1.0, 2.0, 2.0])
    assert total_mass(m) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        axis_measure(1.1, 2, [1.0, 1.0])


def test_alpha_window_enforced():
    for bad in (0.0, 2.0, -0.3, 2.5):
        with pytest.raises(ValueError):
            SpectralMeasure(bad, 1, np.array([[1.0], [-1.0]]), np.array([1.0, 1.0]))


def test_direction_renormalization_warns():
    with pytest.warns(UserWarning):
        m = SpectralMeasure(1.0, 1, np.array([[2.0], [-2.0]]), np.array([1.0, 1.0]))
    np.testing.assert_allclose(np.linalg.norm(m.directions, axis=1), 1.0)


def test_zero_mass_rejected():
    with pytest.raises(DegenerateMeasureError):
        SpectralMeasure(1.0, 1, np.array([[1.0], [-1.0]]), np.array([0.0, 0.0]))


def test_negative_weight_rejected():
    with pytest.raises(ValueError):
        SpectralMeasure(1.0, 1, np.array([[1.0], [-1.0]]), np.array([1.0, -1.0]))


def test_symmetrize_one_sided_atom():
    m = SpectralMeasure(0.9, 1, np.array([[1.0]]), np.array([2.0]))
    assert not is_symmetric(m)
    s = symmetrize(m)
    assert is_symmetric(s)
    assert total_mass(s) == pytest.approx(total_mass(m))
    # mass splits evenly over the pair
    np.testing.assert_allclose(np.sort(s.weights), [1.0, 1.0])


def test_symmetrize_fixes_symmetric_measure():
    m = axis_measure(1.3, 2, [0.5, 0.5, 2.0, 2.0])
    s = symmetrize(m)
    assert s.n_atoms == m.n_atoms
    assert total_mass(s) == pytest.approx(total_mass(m))


def test_unit_pair_nondegeneracy():
    # two unit atoms: int |rho . theta|^alpha = 2 for rho = +-1
    for alpha in (0.5, 1.0, 1.5):
        m = unit_pair_measure(alpha)
        assert nondegeneracy_lambda(m) == pytest.approx(2.0, abs=1e-12)
        assert directional_alpha_integral(m, [1.0]) == pytest.approx(2.0)


def test_nondegeneracy_grid_refinement_monotone():
    # the coarse angular grid is a subset of the doubled one, so the grid
    # minimum can only go down under refinement
    m = axis_measure(0.8, 2, [1.0, 1.0, 0.3, 0.3])
    lam_coarse = nondegeneracy_lambda(m, sphere_resolution=64)
    lam_fine = nondegeneracy_lambda(m, sphere_resolution=128)
    assert lam_fine <= lam_coarse + 1e-15
    assert lam_fine > 0.0


def test_fractional_laplacian_measure_scale():
    alpha = 1.3
    m = fractional_laplacian_measure(alpha)
    np.testing.assert_allclose(m.weights, fl_scale(alpha))


def test_scale_weights():
    m = unit_pair_measure(1.0)
    assert total_mass(scale_weights(m, 3.0)) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        scale_weights(m, 0.0)


def test_uniform_measure_d1_is_two_atoms():
    m = uniform_measure(0.7, 1, mass=3.0)
    assert m.n_atoms == 2
    np.testing.assert_allclose(m.weights, 1.5)


def test_quadrature_atoms_density_split():
    m = uniform_measure(1.2, 2, mass=4.0)
    dirs, ws = quadrature_atoms(m, n_angular=8)
    assert len(ws) == 8
    assert np.sum(ws) == pytest.approx(4.0)
    # the angle grid must itself be symmetric for pairwise quadrature
    assert is_symmetric(SpectralMeasure(1.2, 2, dirs, ws))


def test_json_round_trip():
    m = axis_measure(1.4, 2, [1.0, 1.0, 0.25, 0.25])
    m2 = measure_from_json(measure_to_json(m))
    assert m2.alpha == m.alpha and m2.dim == m.dim
    np.testing.assert_allclose(m2.directions, m.directions)
    np.testing.assert_allclose(m2.weights, m.weights)
    assert m2.density is None

    u = uniform_measure(0.9, 2, mass=2.5)
    u2 = measure_from_json(measure_to_json(u))
    assert u2.density == ("uniform", 2.5)


# ---------------------------------------------------------------------------
# piecewise-in-time families


def _family(alpha=1.0):
    ma = axis_measure(alpha, 1, 1.0)
    mb = axis_measure(alpha, 1, 2.0)
    env = axis_measure(alpha, 1, 0.5)
    return LevyFamily(breakpoints=[0.0, 0.5, 1.0], pieces=[ma, mb], lower_envelope=env)


def test_piece_lookup_boundaries():
    f = _family()
    # piece k is active on (t_k, t_{k+1}]
    assert f.piece_index_at(0.25) == 0
    assert f.piece_index_at(0.5) == 0
    assert f.piece_index_at(0.5000001) == 1
    assert f.piece_index_at(1.0) == 1
    # clamped outside the time range
    assert f.piece_index_at(0.0) == 0
    assert f.piece_index_at(7.0) == 1
    assert f.piece_at(0.75) is f.pieces[1]


def test_family_validation():
    ma = axis_measure(1.0, 1)
    env = axis_measure(1.0, 1, 0.5)
    with pytest.raises(ValueError):
        LevyFamily(breakpoints=[0.0, 1.0], pieces=[ma, ma], lower_envelope=env)
    with pytest.raises(ValueError):
        LevyFamily(breakpoints=[0.0, 0.5, 0.5], pieces=[ma, ma], lower_envelope=env)
    with pytest.raises(ValueError):
        LevyFamily(breakpoints=[0.0, 1.0], pieces=[ma],
                   lower_envelope=axis_measure(1.5, 1, 0.5))


def test_check_envelope_pass_and_fail():
    f = _family()
    ok, report = check_envelope(f)
    assert ok and not report["failures"]

    big_env = axis_measure(1.0, 1, 1.5)  # exceeds piece 0 (weights 1.0)
    g = LevyFamily(breakpoints=[0.0, 0.5, 1.0],
                   pieces=[f.pieces[0], f.pieces[1]], lower_envelope=big_env)
    ok, report = check_envelope(g)
    assert not ok
    pieces_flagged = {k for k, _, _ in report["failures"]}
    assert pieces_flagged == {0}  # piece 1 (weights 2.0) still dominates
