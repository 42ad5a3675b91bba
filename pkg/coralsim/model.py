"""Problem definition for the regularized coral-fertilization system.

Holds the parameters, the chemotactic sensitivity families, the boundary
cutoff, the face fluxes that enter the n-equation, the gravitational forcing
of the fluid, and the initial-data presets.
"""
import enum
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from coralsim.errors import NonFiniteField, ValidationError
from coralsim.grid_ops import (ScalarField, VectorField, cell_to_face, face_to_cell, gradient,
                               zero_wall_faces)

logger = logging.getLogger(__name__)


class SensitivityKind(str, enum.Enum):
    SCALAR_DECAY = 'scalar'
    DIAGONAL_DECAY = 'diagonal'
    ROTATIONAL_DECAY = 'rotational'


@dataclass(frozen=True, eq=False)
class ModelParams:
    grid: object
    phi: ScalarField
    alpha: float = 0.5
    c_s: float = 1.0
    kappa: float = 1.0
    epsilon: float = 0.0
    sensitivity_kind: SensitivityKind = SensitivityKind.SCALAR_DECAY
    run_T: float = 1.0
    cutoff_margin: float = 0.0
    diagonal_scales: tuple = ()
    rotation_angle: float = math.pi / 2
    rotation_axis: int = 2
    energy_a: float = 1.0
    energy_b: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'sensitivity_kind', SensitivityKind(self.sensitivity_kind))
        if not self.alpha >= 0:
            raise ValidationError(f"alpha must be >= 0, got {self.alpha}")
        if not self.c_s > 0:
            raise ValidationError(f"c_s must be > 0, got {self.c_s}")
        if not self.epsilon >= 0:
            raise ValidationError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.run_T >= 0:
            raise ValidationError(f"run_T must be >= 0, got {self.run_T}")
        if not 0 <= self.cutoff_margin < 0.5:
            raise ValidationError(f"cutoff_margin must lie in [0, 0.5), got {self.cutoff_margin}")
        if not (self.energy_a > 0 and self.energy_b > 0):
            raise ValidationError("energy coefficients a and b must be positive")
        if not math.isfinite(self.kappa):
            raise ValidationError(f"kappa must be finite, got {self.kappa}")
        if self.phi.grid != self.grid:
            raise ValidationError("potential phi lives on a different grid")
        if not self.phi.is_finite() or not gradient(self.phi).is_finite():
            raise ValidationError("potential phi must have finite values and a finite gradient")
        if self.diagonal_scales:
            if len(self.diagonal_scales) != self.grid.dim:
                raise ValidationError(
                    f"diagonal_scales needs {self.grid.dim} entries, got {len(self.diagonal_scales)}")
            if any(not 0 <= s <= 1 for s in self.diagonal_scales):
                raise ValidationError("diagonal scale factors must lie in [0, 1]")
        if self.grid.dim == 3 and self.rotation_axis not in (0, 1, 2):
            raise ValidationError(f"rotation_axis must be 0, 1 or 2, got {self.rotation_axis}")
        if self.alpha == 0:
            logger.warning("alpha = 0 lies outside the global-existence regime; running anyway")

    @property
    def outside_theorem(self):
        return self.alpha == 0

    @cached_property
    def shape_matrix(self):
        """Constant matrix M with S = C_S (1+n)^-alpha M; ||M||_2 <= 1."""
        dim = self.grid.dim
        kind = self.sensitivity_kind
        if kind == SensitivityKind.SCALAR_DECAY:
            return np.eye(dim)
        if kind == SensitivityKind.DIAGONAL_DECAY:
            scales = self.diagonal_scales or tuple(1.0 / (a + 1) for a in range(dim))
            return np.diag(np.asarray(scales, dtype=float))
        return rotation_matrix(dim, self.rotation_angle, self.rotation_axis)

    def with_changes(self, **changes):
        values = {name: getattr(self, name) for name in self.__dataclass_fields__}
        values.update(changes)
        return ModelParams(**values)


@dataclass(frozen=True)
class SensitivityTensor:
    matrix: np.ndarray

    def operator_norm(self):
        return float(np.linalg.norm(self.matrix, ord=2))


@dataclass
class SimState:
    t: float
    n: ScalarField
    c: ScalarField
    m: ScalarField
    u: VectorField
    p: ScalarField

    @property
    def grid(self):
        return self.n.grid

    @classmethod
    def zeros(cls, grid, t=0.0):
        return cls(t, grid.zeros(), grid.zeros(), grid.zeros(), grid.zero_vector(), grid.zeros())

    def copy(self):
        return SimState(self.t, self.n.copy(), self.c.copy(), self.m.copy(), self.u.copy(), self.p.copy())

    def check_finite(self):
        for name in ('n', 'c', 'm', 'p'):
            if not getattr(self, name).is_finite():
                raise NonFiniteField(name, t=self.t)
        if not self.u.is_finite():
            raise NonFiniteField('u', t=self.t)

    def min_density(self):
        return min(float(np.min(f.values)) for f in (self.n, self.c, self.m))


def rotation_matrix(dim, angle, axis=2):
    cos, sin = math.cos(angle), math.sin(angle)
    if dim == 2:
        return np.array([[cos, -sin], [sin, cos]])
    k = np.zeros(3)
    k[axis] = 1.0
    cross = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + sin * cross + (1.0 - cos) * cross @ cross


def sensitivity_decay(params, n):
    return params.c_s * (1.0 + n) ** (-params.alpha)


def eval_sensitivity(params, x, n, c):
    if n < 0 or c < 0:
        raise ValidationError(f"sensitivity needs n, c >= 0, got n={n}, c={c}")
    return SensitivityTensor(sensitivity_decay(params, n) * params.shape_matrix)


def cutoff_width(params):
    grid = params.grid
    if grid.periodic or params.epsilon == 0 or params.cutoff_margin == 0:
        return 0.0
    width = params.cutoff_margin * params.epsilon * grid.diameter
    return min(width, 0.5 * min(grid.extent))


def cutoff_rho(params, x):
    """Smoothstep cutoff: 0 on the walls, 1 beyond distance w(eps) from them."""
    x = np.asarray(x, dtype=float)
    width = cutoff_width(params)
    if width == 0.0:
        return 1.0 if x.ndim == 1 else np.ones(x.shape[:-1])
    extent = np.asarray(params.grid.extent)
    distance = np.min(np.minimum(x, extent - x), axis=-1)
    z = np.clip(distance / width, 0.0, 1.0)
    rho = z * z * (3.0 - 2.0 * z)
    return float(rho) if x.ndim == 1 else rho


def cutoff_on_faces(params, axis):
    grid = params.grid
    if cutoff_width(params) == 0.0:
        return np.ones(grid.face_shape(axis))
    points = np.stack(grid.face_coordinates(axis), axis=-1)
    return cutoff_rho(params, points)


def _gradient_on_faces(grid, grad, axis):
    """All components of a face gradient interpolated to the faces of ``axis``."""
    comps = []
    for b in range(grid.dim):
        if b == axis:
            comps.append(grad[axis])
        else:
            comps.append(cell_to_face(grid, face_to_cell(grid, grad[b], b), axis))
    return comps


def chemotactic_velocity(params, state):
    """Drift velocity v with regularized_flux = n_face * v on every face.

    v = rho_eps * S(x, n, c) grad c / (1 + eps n), n and c taken as face means.
    """
    grid = state.grid
    grad_c = gradient(state.c)
    matrix = params.shape_matrix
    comps = []
    for a in range(grid.dim):
        g = _gradient_on_faces(grid, grad_c, a)
        directed = sum(matrix[a, b] * g[b] for b in range(grid.dim) if matrix[a, b] != 0.0)
        if isinstance(directed, int):
            directed = np.zeros(grid.face_shape(a))
        n_face = cell_to_face(grid, state.n.values, a)
        velocity = (sensitivity_decay(params, n_face) * cutoff_on_faces(params, a)
                    / (1.0 + params.epsilon * n_face)) * directed
        comps.append(zero_wall_faces(grid, velocity, a))
    return VectorField(grid, tuple(comps))


def regularized_flux(params, state):
    grid = state.grid
    velocity = chemotactic_velocity(params, state)
    comps = tuple(cell_to_face(grid, state.n.values, a) * velocity[a] for a in range(grid.dim))
    return VectorField(grid, comps)


def buoyancy_force(params, state):
    grid = state.grid
    grad_phi = gradient(params.phi)
    total = state.n.values + state.m.values
    return VectorField(grid, tuple(cell_to_face(grid, total, a) * grad_phi[a] for a in range(grid.dim)))


# --- potentials and initial data ---

class PotentialKind(str, enum.Enum):
    ZERO = 'zero'
    LINEAR = 'linear'
    COSINE = 'cosine'


def make_potential(grid, kind=PotentialKind.LINEAR, strength=1.0, axis=-1):
    kind = PotentialKind(kind)
    axis = axis % grid.dim
    coords = grid.cell_coordinates()[axis]
    if kind == PotentialKind.ZERO:
        values = np.zeros(grid.shape)
    elif kind == PotentialKind.LINEAR:
        if grid.periodic:
            raise ValidationError("a linear potential is not periodic; use 'cosine' or 'zero'")
        values = strength * coords
    else:
        values = strength * np.cos(2.0 * math.pi * coords / grid.extent[axis])
    return ScalarField(grid, values)


@dataclass(frozen=True)
class HomogeneousPair:
    n0: float = 1.0
    m0: float = 1.0
    c0: float = 0.0


@dataclass(frozen=True)
class GaussianBlobs:
    amplitude: float = 1.0
    width: float = 0.1
    velocity: float = 0.0


@dataclass(frozen=True)
class RandomSmooth:
    seed: int = 0
    modes: int = 3
    velocity: float = 0.1


def _blob(grid, center_fraction, width):
    coords = grid.cell_coordinates()
    sigma = width * min(grid.extent)
    r2 = np.zeros(grid.shape)
    for axis, x in enumerate(coords):
        center = center_fraction[axis] * grid.extent[axis]
        r2 += (x - center) ** 2
    return np.exp(-r2 / (2.0 * sigma * sigma))


def _bump_stream_velocity(grid, amplitude):
    """Swirl from the stream function psi = prod (x(L-x))^2 in the (0, 1) plane."""
    velocity = [np.zeros(grid.face_shape(a)) for a in range(grid.dim)]
    if amplitude == 0.0:
        return velocity
    nodes = [np.arange(grid.shape[a] + 1) * grid.spacing[a] for a in range(grid.dim)]
    factors = [16.0 * (x * (length - x)) ** 2 / length ** 4 for x, length in zip(nodes, grid.extent)]
    if grid.dim == 3:
        factors[2] = 16.0 * (grid.cell_centers(2) * (grid.extent[2] - grid.cell_centers(2))) ** 2 \
            / grid.extent[2] ** 4
    psi = amplitude * np.einsum('i,j->ij', factors[0], factors[1])
    if grid.dim == 3:
        psi = psi[:, :, None] * factors[2][None, None, :]
    hx, hy = grid.spacing[0], grid.spacing[1]
    nx, ny = grid.face_shape(0)[0], grid.face_shape(1)[1]
    velocity[0] = (psi[:nx, 1:] - psi[:nx, :-1]) / hy
    velocity[1] = -(psi[1:, :ny] - psi[:-1, :ny]) / hx
    return velocity


def make_initial_state(grid, preset, solver=None):
    from coralsim.fluid import PoissonSolver, project

    if isinstance(preset, HomogeneousPair):
        if preset.n0 <= 0 or preset.m0 <= 0 or preset.c0 < 0:
            raise ValidationError(
                f"homogeneous preset needs n0 > 0, m0 > 0, c0 >= 0, got {preset}")
        state = SimState.zeros(grid)
        state.n.values[...] = preset.n0
        state.m.values[...] = preset.m0
        state.c.values[...] = preset.c0
        return state

    if isinstance(preset, GaussianBlobs):
        if preset.amplitude <= 0 or preset.width <= 0:
            raise ValidationError(f"gaussian preset needs positive amplitude and width, got {preset}")
        centre = [0.5] * grid.dim
        n_centre = list(centre)
        m_centre = list(centre)
        n_centre[0], m_centre[0] = 1.0 / 3.0, 2.0 / 3.0
        n0 = preset.amplitude * _blob(grid, n_centre, preset.width)
        m0 = preset.amplitude * _blob(grid, m_centre, preset.width)
        c0 = 0.5 * m0
        velocity = _bump_stream_velocity(grid, preset.velocity)
    elif isinstance(preset, RandomSmooth):
        rng = np.random.default_rng(preset.seed)
        norm = preset.modes * grid.dim

        def random_modes(points):
            """Sum of the first ``modes`` cosines per axis, unit-uniform coefficients."""
            values = np.zeros(points[0].shape)
            for axis, x in enumerate(points):
                for k in range(1, preset.modes + 1):
                    coeff = rng.uniform(-1.0, 1.0)
                    phase = rng.uniform(0.0, 2.0 * math.pi)
                    values += coeff * np.cos(2.0 * math.pi * k * x / grid.extent[axis] + phase)
            return values

        coords = grid.cell_coordinates()
        n0, m0, c0 = (1.0 + 0.5 * random_modes(coords) / norm for _ in range(3))
        velocity = [preset.velocity * random_modes(grid.face_coordinates(a)) / norm for a in range(grid.dim)]
        velocity = [zero_wall_faces(grid, comp, a) for a, comp in enumerate(velocity)]
    else:
        raise ValidationError(f"unknown initial preset {preset!r}")

    if min(n0.min(), m0.min(), c0.min()) < 0:
        raise ValidationError("initial preset produced negative densities")
    if not (n0.any() and m0.any()):
        raise ValidationError("initial n0 and m0 must not vanish identically")

    solver = solver or PoissonSolver(grid)
    u0, _ = project(VectorField(grid, tuple(velocity)), solver)
    return SimState(0.0, ScalarField(grid, n0), ScalarField(grid, c0), ScalarField(grid, m0), u0, grid.zeros())
