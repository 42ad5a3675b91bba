import logging
import math

import numpy as np
import pytest

from coralsim.errors import ValidationError
from coralsim.fluid import PoissonSolver
from coralsim.grid_ops import divergence, gradient, make_grid
from coralsim.model import (GaussianBlobs, HomogeneousPair, ModelParams, RandomSmooth, SensitivityKind, SimState,
                            buoyancy_force, chemotactic_velocity, cutoff_on_faces, cutoff_rho, eval_sensitivity,
                            make_initial_state, make_potential, regularized_flux)


def params_for(grid, **kwargs):
    kind = 'zero' if grid.periodic else 'linear'
    return ModelParams(grid=grid, phi=make_potential(grid, kind), **kwargs)


@pytest.mark.parametrize('kind', list(SensitivityKind))
@pytest.mark.parametrize('dim', [2, 3])
def test_sensitivity_norm_bound(kind, dim):
    grid = make_grid(dim, (4,) * dim, (1.0,) * dim)
    params = params_for(grid, alpha=0.3, c_s=2.0, sensitivity_kind=kind, rotation_angle=0.7)
    rng = np.random.default_rng(3)
    for n, c in rng.uniform(0.0, 50.0, size=(20, 2)):
        norm = eval_sensitivity(params, np.full(dim, 0.5), n, c).operator_norm()
        assert norm <= 2.0 * (1.0 + n) ** -0.3 + 1e-12


def test_rotational_sensitivity_is_isometric(box):
    params = params_for(box, sensitivity_kind='rotational', rotation_angle=1.1)
    norm = eval_sensitivity(params, (0.5, 0.5), 3.0, 1.0).operator_norm()
    assert math.isclose(norm, 4.0 ** -0.5, rel_tol=1e-12)


def test_diagonal_default_scales(box):
    params = params_for(box, sensitivity_kind='diagonal')
    np.testing.assert_allclose(np.diag(params.shape_matrix), [1.0, 0.5])


def test_sensitivity_rejects_negative_arguments(box):
    with pytest.raises(ValidationError):
        eval_sensitivity(params_for(box), (0.5, 0.5), -1.0, 0.0)


def test_cutoff_identity_without_margin(box):
    params = params_for(box, epsilon=0.1)
    assert cutoff_rho(params, (0.0, 0.3)) == 1.0
    assert np.all(cutoff_on_faces(params, 0) == 1.0)


def test_cutoff_profile(box):
    params = params_for(box, epsilon=0.2, cutoff_margin=0.25)
    assert cutoff_rho(params, (0.0, 0.5)) == 0.0
    assert cutoff_rho(params, (0.5, 0.5)) == 1.0
    rho = cutoff_on_faces(params, 0)
    assert rho.min() >= 0.0 and rho.max() <= 1.0


def test_flux_vanishes_on_walls(box):
    params = params_for(box, epsilon=0.05)
    state = make_initial_state(box, GaussianBlobs(width=0.15))
    flux = regularized_flux(params, state)
    assert np.all(flux[0][[0, -1], :] == 0)
    assert np.all(flux[1][:, [0, -1]] == 0)
    assert np.abs(chemotactic_velocity(params, state)[0]).max() > 0


def test_regularization_damps_flux(box):
    state = make_initial_state(box, GaussianBlobs(width=0.15))
    plain = regularized_flux(params_for(box), state).max_abs()
    damped = regularized_flux(params_for(box, epsilon=1.0), state).max_abs()
    assert damped < plain


def test_params_validation(box):
    with pytest.raises(ValidationError):
        params_for(box, alpha=-0.1)
    with pytest.raises(ValidationError):
        params_for(box, c_s=0.0)
    with pytest.raises(ValidationError):
        params_for(box, epsilon=-1.0)
    with pytest.raises(ValidationError):
        params_for(box, diagonal_scales=(0.5, 1.5))


def test_alpha_zero_warns(box, caplog):
    with caplog.at_level(logging.WARNING, logger='coralsim.model'):
        params = params_for(box, alpha=0.0)
    assert params.outside_theorem
    assert 'outside the global-existence regime' in caplog.text


def test_with_changes_revalidates(box):
    params = params_for(box)
    assert params.with_changes(epsilon=0.1).epsilon == 0.1
    with pytest.raises(ValidationError):
        params.with_changes(alpha=-1.0)


def test_linear_potential_needs_walls(torus):
    with pytest.raises(ValidationError):
        make_potential(torus, 'linear')


def test_homogeneous_preset(box):
    state = make_initial_state(box, HomogeneousPair(2.0, 1.0, 0.5))
    assert np.all(state.n.values == 2.0) and np.all(state.c.values == 0.5)
    assert state.u.max_abs() == 0.0


@pytest.mark.parametrize('preset', [GaussianBlobs(velocity=1.0), RandomSmooth(seed=4, velocity=0.3)])
@pytest.mark.parametrize('bc', ['paperbox', 'periodic'])
def test_presets_are_admissible(preset, bc):
    grid = make_grid(2, (16, 16), (1.0, 1.0), bc)
    state = make_initial_state(grid, preset, PoissonSolver(grid, tol=1e-12))
    assert state.min_density() >= 0.0
    assert state.u.max_abs() > 0
    assert np.abs(divergence(state.u).values).max() <= 1e-8


def test_random_preset_is_seeded(box):
    a = make_initial_state(box, RandomSmooth(seed=7))
    b = make_initial_state(box, RandomSmooth(seed=7))
    np.testing.assert_array_equal(a.n.values, b.n.values)


def test_preset_validation(box):
    with pytest.raises(ValidationError):
        make_initial_state(box, HomogeneousPair(0.0, 1.0))
    with pytest.raises(ValidationError):
        make_initial_state(box, 'blobs')


def linear_state(grid, n_values):
    """State with c = x and the given n; m = 1, u = 0."""
    state = SimState.zeros(grid)
    state.c.values[...] = grid.cell_coordinates()[0]
    state.n.values[...] = n_values
    state.m.values[...] = 1.0
    return state


def test_flux_stencil_by_hand(box):
    params = params_for(box, alpha=0.5, c_s=2.0, epsilon=0.25)
    x = box.cell_coordinates()[0]
    flux = regularized_flux(params, linear_state(box, x))
    # n = x and c = x: face mean of n is the face position, the face gradient of c is 1
    xf = box.face_coordinates(0)[0][1:-1, :]
    expected = 2.0 * xf * (1.0 + xf) ** -0.5 / (1.0 + 0.25 * xf)
    np.testing.assert_allclose(flux[0][1:-1, :], expected, rtol=1e-12)
    assert np.all(flux[0][[0, -1], :] == 0)
    assert np.all(flux[1] == 0)


def test_flux_of_uniform_density(box):
    params = params_for(box, alpha=0.5, c_s=2.0, epsilon=0.25)
    flux = regularized_flux(params, linear_state(box, 3.0))
    np.testing.assert_allclose(flux[0][1:-1, :], 12.0 / 7.0, rtol=1e-12)


@pytest.mark.parametrize('eps', [0.05, 0.5])
def test_flux_is_bounded_by_regularization(box, eps):
    rng = np.random.default_rng(8)
    state = linear_state(box, rng.uniform(0.0, 100.0, box.shape))
    state.c.values[...] = rng.uniform(0.0, 1.0, box.shape)
    params = params_for(box, alpha=0.2, c_s=1.5, epsilon=eps)
    flux = regularized_flux(params, state)
    grad_c = gradient(state.c)
    for axis in range(2):
        assert np.all(np.abs(flux[axis]) <= 1.5 / eps * np.abs(grad_c[axis]) + 1e-12)


def test_unit_buoyancy_for_linear_potential(box):
    params = ModelParams(grid=box, phi=make_potential(box, 'linear', axis=0))
    state = make_initial_state(box, HomogeneousPair(0.5, 0.5))
    force = buoyancy_force(params, state)
    np.testing.assert_allclose(force[0][1:-1, :], 1.0, rtol=1e-12)
    assert np.all(force[0][[0, -1], :] == 0)
    assert np.all(force[1] == 0)


def test_cutoff_shrinks_as_epsilon_grows(box):
    rng = np.random.default_rng(2)
    points = rng.uniform(0.0, 1.0, size=(50, 2))
    base = params_for(box, cutoff_margin=0.25)
    profiles = [cutoff_rho(base.with_changes(epsilon=eps), points) for eps in (0.05, 0.1, 0.2, 0.4)]
    for wide, narrow in zip(profiles, profiles[1:]):
        assert np.all(narrow <= wide)
    assert profiles[-1].min() < profiles[0].min()


def test_random_preset_velocity_is_band_limited(torus):
    modes = 3
    state = make_initial_state(torus, RandomSmooth(seed=5, modes=modes, velocity=1.0),
                               PoissonSolver(torus, 'spectral'))
    for axis in range(2):
        spectrum = np.abs(np.fft.fft2(state.u[axis]))
        k = np.abs(np.fft.fftfreq(torus.shape[0], 1.0 / torus.shape[0]))
        high = np.maximum.outer(k, k) > modes
        assert spectrum[high].max() <= 1e-10 * spectrum.max()
