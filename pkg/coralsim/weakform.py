"""Weak-form residuals of computed trajectories.

Each residual tests one equation of the system against a closed-form test
function ``phi(x, t) = spatial(x) * tau(t)``; ``tau`` equals 1 until 90% of
the horizon and then tapers smoothly to 0, so ``phi(., T) = 0``.

Time integrals use the midpoint value of ``tau`` on each snapshot interval
and the average of the field integrands at the two interval endpoints.
"""
import enum
import logging
import math

import numpy as np

from coralsim.errors import ValidationError
from coralsim.fluid import convection
from coralsim.grid_ops import (VectorField, cell_to_face, divergence, face_dot, gradient, vector_laplacian)
from coralsim.model import buoyancy_force, regularized_flux

logger = logging.getLogger(__name__)

MIN_SNAPSHOTS = 16
TAPER_FRACTION = 0.1


class TestFunctionKind(str, enum.Enum):
    __test__ = False

    POLYNOMIAL = 'polynomial'
    SEPARABLE_COSINE = 'cosine'
    CONSTANT_IN_SPACE = 'constant'


def _taper(t, T):
    start = (1.0 - TAPER_FRACTION) * T
    if t <= start:
        return 1.0, 0.0
    if t >= T:
        return 0.0, 0.0
    width = TAPER_FRACTION * T
    s = (t - start) / width
    return 1.0 - s * s * (3.0 - 2.0 * s), -6.0 * s * (1.0 - s) / width


def _bump(x, length):
    return 16.0 * (x * (length - x)) ** 2 / length ** 4


def _bump_derivative(x, length):
    return 32.0 * x * (length - x) * (length - 2.0 * x) / length ** 4


class _Temporal:
    def __init__(self, T):
        if not T > 0:
            raise ValidationError(f"test function horizon must be > 0, got {T}")
        self.T = float(T)

    def tau(self, t):
        return _taper(t, self.T)[0]

    def dtau(self, t):
        return _taper(t, self.T)[1]


class ScalarTestFunction(_Temporal):
    """Product test function for the scalar equations, sampled on one grid.

    ``spatial`` holds cell-centre values, ``gradient`` the exact gradient at
    face centres. Instances combine linearly with ``+`` and scalar ``*``.
    """
    __test__ = False

    def __init__(self, grid, kind, T, wavenumber=1, _arrays=None):
        super().__init__(T)
        self.grid = grid
        self.kind = TestFunctionKind(kind) if kind is not None else None
        if _arrays is not None:
            self.spatial, self.gradient = _arrays
            return
        if wavenumber < 1:
            raise ValidationError(f"wavenumber must be >= 1, got {wavenumber}")
        self.wavenumber = wavenumber
        self.spatial = self._evaluate(grid.cell_coordinates(), derivative_axis=None)
        self.gradient = VectorField(grid, tuple(
            self._evaluate(grid.face_coordinates(a), derivative_axis=a) for a in range(grid.dim)))
        if not grid.periodic:
            self._check_neumann()

    def _factor(self, x, length, derivative):
        kind = self.kind
        if kind == TestFunctionKind.CONSTANT_IN_SPACE:
            return np.zeros_like(x) if derivative else np.ones_like(x)
        if kind == TestFunctionKind.POLYNOMIAL:
            return _bump_derivative(x, length) if derivative else _bump(x, length)
        k = 2.0 * math.pi * self.wavenumber / length
        return -k * np.sin(k * x) if derivative else np.cos(k * x)

    def _evaluate(self, coords, derivative_axis):
        values = np.ones_like(coords[0])
        for axis, x in enumerate(coords):
            values = values * self._factor(x, self.grid.extent[axis], axis == derivative_axis)
        return values

    def _check_neumann(self):
        for axis in range(self.grid.dim):
            walls = self.gradient[axis][(slice(None),) * axis + ([0, -1],)]
            if np.max(np.abs(walls), initial=0.0) > 1e-10:
                raise ValidationError("scalar test functions need a zero normal derivative on the walls")

    def cell_values(self, t):
        return self.spatial * self.tau(t)

    def cell_time_derivative(self, t):
        return self.spatial * self.dtau(t)

    def face_gradient(self, t):
        return self.gradient.scaled(self.tau(t))

    def _combine(self, other, factor):
        if not isinstance(other, ScalarTestFunction) or other.grid != self.grid or other.T != self.T:
            raise ValidationError("only test functions on the same grid and horizon combine")
        arrays = (self.spatial + factor * other.spatial, self.gradient.plus(other.gradient, factor))
        return ScalarTestFunction(self.grid, None, self.T, _arrays=arrays)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, factor):
        arrays = (factor * self.spatial, self.gradient.scaled(factor))
        return ScalarTestFunction(self.grid, None, self.T, _arrays=arrays)

    __rmul__ = __mul__


class VectorTestField(_Temporal):
    """Solenoidal test field on MAC faces.

    Built as the discrete curl of a stream function sampled at cell corners,
    so its discrete divergence vanishes to round-off. In 3D the stream
    function points along the last axis.
    """
    __test__ = False

    def __init__(self, grid, faces, T):
        super().__init__(T)
        self.grid = grid
        self.faces = faces if isinstance(faces, VectorField) else VectorField(grid, tuple(faces))

    @classmethod
    def from_stream_function(cls, grid, kind, T, wavenumber=1):
        kind = TestFunctionKind(kind)
        if kind == TestFunctionKind.CONSTANT_IN_SPACE:
            if not grid.periodic:
                raise ValidationError("a constant vector test field needs a periodic grid")
            faces = [np.ones(grid.face_shape(0))] + [np.zeros(grid.face_shape(a)) for a in range(1, grid.dim)]
            return cls(grid, faces, T)

        def profile(x, length):
            if kind == TestFunctionKind.POLYNOMIAL:
                return _bump(x, length)
            return np.sin(math.pi * wavenumber * x / length) ** 2

        nodes = [np.arange(grid.face_shape(a)[a]) * grid.spacing[a] for a in range(2)]
        psi = np.multiply.outer(profile(nodes[0], grid.extent[0]), profile(nodes[1], grid.extent[1]))
        if grid.dim == 3:
            z = grid.cell_centers(2)
            psi = psi[:, :, None] * profile(z, grid.extent[2])[None, None, :]
        hx, hy = grid.spacing[0], grid.spacing[1]
        if grid.periodic:
            ux = (np.roll(psi, -1, axis=1) - psi) / hy
            uy = -(np.roll(psi, -1, axis=0) - psi) / hx
        else:
            nx, ny = grid.face_shape(0)[0], grid.face_shape(1)[1]
            ux = (psi[:nx, 1:] - psi[:nx, :-1]) / hy
            uy = -(psi[1:, :ny] - psi[:-1, :ny]) / hx
        faces = [ux, uy] + ([np.zeros(grid.face_shape(2))] if grid.dim == 3 else [])
        return cls(grid, faces, T)

    def face_values(self, t):
        return self.faces.scaled(self.tau(t))

    def face_time_derivative(self, t):
        return self.faces.scaled(self.dtau(t))

    def is_solenoidal(self, tol=1e-9):
        scale = max(self.faces.max_abs(), 1.0) / min(self.grid.spacing)
        return float(np.max(np.abs(divergence(self.faces).values))) <= tol * scale

    def _combine(self, other, factor):
        if not isinstance(other, VectorTestField) or other.grid != self.grid or other.T != self.T:
            raise ValidationError("only test fields on the same grid and horizon combine")
        return VectorTestField(self.grid, self.faces.plus(other.faces, factor), self.T)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, factor):
        return VectorTestField(self.grid, self.faces.scaled(factor), self.T)

    __rmul__ = __mul__


def _check_trajectory(traj, test):
    states = traj.states
    if len(states) < MIN_SNAPSHOTS:
        raise ValidationError(
            f"weak-form residuals need at least {MIN_SNAPSHOTS} snapshots, got {len(states)}")
    if test.grid != states[0].grid:
        raise ValidationError("test function and trajectory live on different grids")
    if states[-1].t < test.T * (1.0 - 1e-9):
        raise ValidationError(
            f"trajectory ends at t={states[-1].t:g} before the test horizon T={test.T:g}")


def _space_time(traj, test, value_term, rate_term):
    """Sum of int_0^T tau(t) value_term(state) + tau'(t) rate_term(state) dt."""
    states = [s for s in traj.states if s.t <= test.T * (1.0 + 1e-12)]
    values = [value_term(s) for s in states]
    rates = [rate_term(s) for s in states]
    total = 0.0
    for k in range(len(states) - 1):
        dt = states[k + 1].t - states[k].t
        mid = 0.5 * (states[k].t + states[k + 1].t)
        total += dt * (test.tau(mid) * 0.5 * (values[k] + values[k + 1])
                       + test.dtau(mid) * 0.5 * (rates[k] + rates[k + 1]))
    return total


def _cell(values, spatial, grid):
    return float(np.sum(values * spatial)) * grid.cell_volume


def _advective_flux(state, density):
    grid = state.grid
    return VectorField(grid, tuple(cell_to_face(grid, density, a) * state.u[a] for a in range(grid.dim)))


def residual_n(traj, params, phi):
    _check_trajectory(traj, phi)
    grid = phi.grid

    def value_term(s):
        return (face_dot(gradient(s.n), phi.gradient)
                - face_dot(regularized_flux(params, s), phi.gradient)
                - face_dot(_advective_flux(s, s.n.values), phi.gradient)
                + _cell(s.n.values * s.m.values, phi.spatial, grid))

    def rate_term(s):
        return -_cell(s.n.values, phi.spatial, grid)

    first = traj.states[0]
    initial = -_cell(first.n.values, phi.spatial, grid) * phi.tau(first.t)
    return initial + _space_time(traj, phi, value_term, rate_term)


def residual_c(traj, params, phi):
    _check_trajectory(traj, phi)
    grid = phi.grid

    def value_term(s):
        return (face_dot(gradient(s.c), phi.gradient)
                + _cell(s.c.values - s.m.values, phi.spatial, grid)
                - face_dot(_advective_flux(s, s.c.values), phi.gradient))

    def rate_term(s):
        return -_cell(s.c.values, phi.spatial, grid)

    first = traj.states[0]
    initial = -_cell(first.c.values, phi.spatial, grid) * phi.tau(first.t)
    return initial + _space_time(traj, phi, value_term, rate_term)


def residual_m(traj, params, phi):
    _check_trajectory(traj, phi)
    grid = phi.grid

    def value_term(s):
        return (face_dot(gradient(s.m), phi.gradient)
                + _cell(s.n.values * s.m.values, phi.spatial, grid)
                - face_dot(_advective_flux(s, s.m.values), phi.gradient))

    def rate_term(s):
        return -_cell(s.m.values, phi.spatial, grid)

    first = traj.states[0]
    initial = -_cell(first.m.values, phi.spatial, grid) * phi.tau(first.t)
    return initial + _space_time(traj, phi, value_term, rate_term)


def residual_u(traj, params, field):
    """Momentum identity; no pressure term since the test field is solenoidal.

    Uses the discrete identities int grad u : grad phi = -<Lap_h u, phi> and
    -kappa int u (x) u : grad phi = kappa <C(u, u), phi>.
    """
    if not isinstance(field, VectorTestField):
        raise ValidationError("residual_u needs a VectorTestField")
    if not field.is_solenoidal():
        raise ValidationError("momentum test fields must be divergence-free")
    _check_trajectory(traj, field)
    faces = field.faces

    def value_term(s):
        total = -face_dot(vector_laplacian(s.u), faces) - face_dot(buoyancy_force(params, s), faces)
        if params.kappa != 0:
            total += params.kappa * face_dot(convection(s.u, s.u), faces)
        return total

    def rate_term(s):
        return -face_dot(s.u, faces)

    first = traj.states[0]
    initial = -face_dot(first.u, faces) * field.tau(first.t)
    return initial + _space_time(traj, field, value_term, rate_term)


def default_test_functions(grid, T):
    """Three scalar test functions and two (three on periodic grids) vector fields."""
    scalars = {
        'polynomial': ScalarTestFunction(grid, TestFunctionKind.POLYNOMIAL, T),
        'cosine': ScalarTestFunction(grid, TestFunctionKind.SEPARABLE_COSINE, T),
        'constant': ScalarTestFunction(grid, TestFunctionKind.CONSTANT_IN_SPACE, T),
    }
    vectors = {
        'polynomial': VectorTestField.from_stream_function(grid, TestFunctionKind.POLYNOMIAL, T),
        'cosine': VectorTestField.from_stream_function(grid, TestFunctionKind.SEPARABLE_COSINE, T),
    }
    if grid.periodic:
        vectors['constant'] = VectorTestField.from_stream_function(grid, TestFunctionKind.CONSTANT_IN_SPACE, T)
    return scalars, vectors


def residual_table(traj, params, T=None):
    """Rows ``(test kind, equation, residual)`` over the default test functions."""
    T = traj.final.t if T is None else T
    scalars, vectors = default_test_functions(traj.grid, T)
    rows = []
    for name, phi in scalars.items():
        rows.append((name, 'n', residual_n(traj, params, phi)))
        rows.append((name, 'c', residual_c(traj, params, phi)))
        rows.append((name, 'm', residual_m(traj, params, phi)))
    for name, field in vectors.items():
        rows.append((name, 'u', residual_u(traj, params, field)))
    logger.info("weak-form residual table: %d entries, max |r| = %.3e",
                len(rows), max(abs(r) for _, _, r in rows))
    return rows
