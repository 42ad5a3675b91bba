import numpy as np
import pytest

from coralsim.errors import ValidationError
from coralsim.fluid import PoissonSolver
from coralsim.grid_ops import make_grid
from coralsim.model import GaussianBlobs, HomogeneousPair, ModelParams, make_potential
from coralsim.stepper import StepScheme, Trajectory, run
from coralsim.weakform import (MIN_SNAPSHOTS, ScalarTestFunction, TestFunctionKind, VectorTestField,
                               default_test_functions, residual_c, residual_m, residual_n, residual_table,
                               residual_u)


def homogeneous_trajectory(grid, dt, T=0.4, phi='zero'):
    params = ModelParams(grid=grid, phi=make_potential(grid, phi), run_T=T)
    traj = run(params, StepScheme(), grid, HomogeneousPair(1.0, 1.0, 0.0), PoissonSolver(grid), fixed_dt=dt)
    return traj, params


def test_taper_profile(box):
    phi = ScalarTestFunction(box, 'constant', 1.0)
    assert phi.tau(0.0) == 1.0 and phi.tau(0.9) == 1.0
    assert phi.tau(1.0) == 0.0
    assert 0.0 < phi.tau(0.95) < 1.0
    assert phi.dtau(0.95) < 0.0 and phi.dtau(0.5) == 0.0


@pytest.mark.parametrize('kind', list(TestFunctionKind))
def test_scalar_test_functions_satisfy_neumann(box, kind):
    phi = ScalarTestFunction(box, kind, 1.0, wavenumber=2)
    for axis in range(2):
        walls = phi.gradient[axis].take([0, -1], axis=axis)
        assert np.abs(walls).max() <= 1e-10


@pytest.mark.parametrize('bc', ['paperbox', 'periodic'])
@pytest.mark.parametrize('kind', ['polynomial', 'cosine'])
def test_vector_fields_are_solenoidal(bc, kind):
    grid = make_grid(2, (12, 10), (1.0, 2.0), bc)
    field = VectorTestField.from_stream_function(grid, kind, 1.0)
    assert field.is_solenoidal()
    assert field.faces.max_abs() > 0


def test_vector_fields_3d():
    grid = make_grid(3, (6, 6, 4), (1.0, 1.0, 1.0))
    assert VectorTestField.from_stream_function(grid, 'polynomial', 1.0).is_solenoidal()


def test_constant_vector_field_needs_periodic_grid(box, torus):
    with pytest.raises(ValidationError):
        VectorTestField.from_stream_function(box, 'constant', 1.0)
    assert VectorTestField.from_stream_function(torus, 'constant', 1.0).is_solenoidal()


def test_test_functions_combine(box):
    a = ScalarTestFunction(box, 'polynomial', 1.0)
    b = ScalarTestFunction(box, 'cosine', 1.0)
    combo = 2.0 * a - b
    np.testing.assert_allclose(combo.spatial, 2.0 * a.spatial - b.spatial)
    with pytest.raises(ValidationError):
        a + ScalarTestFunction(box, 'cosine', 2.0)
    u = VectorTestField.from_stream_function(box, 'polynomial', 1.0)
    assert (u + u * 0.5).is_solenoidal()


def test_non_solenoidal_field_rejected(box):
    traj, params = homogeneous_trajectory(box, 0.025)
    faces = [box.face_coordinates(0)[0], np.zeros(box.face_shape(1))]
    with pytest.raises(ValidationError):
        residual_u(traj, params, VectorTestField(box, faces, 0.4))


def test_too_few_snapshots(box):
    traj, params = homogeneous_trajectory(box, 0.1)
    assert len(traj.states) < MIN_SNAPSHOTS
    with pytest.raises(ValidationError):
        residual_n(traj, params, ScalarTestFunction(box, 'constant', 0.4))


def test_horizon_past_trajectory(box):
    traj, params = homogeneous_trajectory(box, 0.02)
    with pytest.raises(ValidationError):
        residual_n(traj, params, ScalarTestFunction(box, 'constant', 1.0))


def test_homogeneous_residuals_are_small():
    grid = make_grid(2, (8, 8), (1.0, 1.0))
    traj, params = homogeneous_trajectory(grid, 0.01, phi='linear')
    rows = residual_table(traj, params)
    assert len(rows) == 3 * 3 + 2
    values = {(kind, eq): r for kind, eq, r in rows}
    assert abs(values[('constant', 'n')]) <= 1e-3
    assert abs(values[('constant', 'c')]) <= 2e-2
    assert abs(values[('polynomial', 'u')]) <= 1e-10


def test_chemical_residual_shrinks_with_dt():
    grid = make_grid(2, (4, 4), (1.0, 1.0))
    residuals = []
    for dt in (0.02, 0.01):
        traj, params = homogeneous_trajectory(grid, dt)
        residuals.append(abs(residual_c(traj, params, ScalarTestFunction(grid, 'constant', 0.4))))
    assert residuals[1] < 0.75 * residuals[0]


def test_periodic_table_has_constant_field(torus):
    scalars, vectors = default_test_functions(torus, 1.0)
    assert set(scalars) == {'polynomial', 'cosine', 'constant'}
    assert set(vectors) == {'polynomial', 'cosine', 'constant'}


def test_residual_rejects_foreign_grid(box, torus):
    traj, params = homogeneous_trajectory(box, 0.02)
    with pytest.raises(ValidationError):
        residual_n(traj, params, ScalarTestFunction(torus, 'constant', 0.4))


def test_empty_trajectory_rejected(box):
    params = ModelParams(grid=box, phi=make_potential(box))
    with pytest.raises(ValidationError):
        residual_n(Trajectory(params), params, ScalarTestFunction(box, 'constant', 1.0))


def test_symmetric_pair_has_equal_residuals():
    grid = make_grid(2, (4, 4), (1.0, 1.0))
    traj, params = homogeneous_trajectory(grid, 0.02)
    phi = ScalarTestFunction(grid, 'constant', 0.4)
    assert abs(residual_n(traj, params, phi) - residual_m(traj, params, phi)) <= 1e-13


def blob_trajectory(shape, dt, T, width=0.2):
    grid = make_grid(2, shape, (1.0, 1.0))
    params = ModelParams(grid=grid, phi=make_potential(grid, 'linear'), alpha=0.5, epsilon=0.05, run_T=T)
    traj = run(params, StepScheme(), grid, GaussianBlobs(width=width, velocity=0.5), PoissonSolver(grid, tol=1e-12),
               fixed_dt=dt)
    return traj, params


def test_residuals_are_linear_in_the_test_function():
    traj, params = blob_trajectory((12, 12), 0.002, 0.04)
    grid = traj.grid
    a = ScalarTestFunction(grid, 'polynomial', 0.04)
    b = ScalarTestFunction(grid, 'cosine', 0.04, wavenumber=2)
    for residual in (residual_n, residual_c, residual_m):
        ra, rb = residual(traj, params, a), residual(traj, params, b)
        combined = residual(traj, params, 2.0 * a - b)
        assert abs(combined - (2.0 * ra - rb)) <= 1e-10 * max(1.0, abs(ra), abs(rb))
    u = VectorTestField.from_stream_function(grid, 'polynomial', 0.04)
    w = VectorTestField.from_stream_function(grid, 'cosine', 0.04)
    ru, rw = residual_u(traj, params, u), residual_u(traj, params, w)
    combined = residual_u(traj, params, u * 3.0 + w)
    assert abs(combined - (3.0 * ru + rw)) <= 1e-10 * max(1.0, abs(ru), abs(rw))


def refinement_residuals(shape, dt, T):
    traj, params = blob_trajectory(shape, dt, T, width=0.1)
    grid = traj.grid
    scalars = [ScalarTestFunction(grid, 'polynomial', T), ScalarTestFunction(grid, 'constant', T),
               ScalarTestFunction(grid, 'cosine', T), ScalarTestFunction(grid, 'cosine', T, wavenumber=2)]
    vectors = [VectorTestField.from_stream_function(grid, 'polynomial', T)] + [
        VectorTestField.from_stream_function(grid, 'cosine', T, wavenumber=k) for k in (1, 2, 3)]
    table = {}
    for residual, equation in ((residual_n, 'n'), (residual_c, 'c'), (residual_m, 'm')):
        table[equation] = [residual(traj, params, phi) for phi in scalars]
    table['u'] = [residual_u(traj, params, field) for field in vectors]
    return table


@pytest.mark.slow
def test_residuals_shrink_under_refinement():
    T = 0.05
    coarse = refinement_residuals((16, 16), 0.002, T)
    fine = refinement_residuals((32, 32), 0.001, T)
    for equation in ('n', 'c', 'm', 'u'):
        # entries already at round-off have nothing left to shrink
        shrinking = [abs(after) <= 1e-12 or abs(before) >= 1.7 * abs(after)
                     for before, after in zip(coarse[equation], fine[equation])]
        assert sum(shrinking) >= 3, (equation, coarse[equation], fine[equation])
