"""Uniform Cartesian grids, MAC-staggered fields and the discrete calculus
every other module builds on.

Layout: scalars live at cell centres, vector component ``a`` lives on the
faces normal to axis ``a``.  Face ``i`` along an axis sits at ``x = i*h``,
i.e. on the low side of cell ``i``.  In ``PAPER_BOX`` mode there is one extra
face per axis (both walls are stored); in ``PERIODIC`` mode the last face
wraps onto the first.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from coralsim.errors import ValidationError


class BCMode(str, enum.Enum):
    PAPER_BOX = 'paperbox'
    PERIODIC = 'periodic'


@dataclass(frozen=True)
class Grid:
    dim: int
    shape: tuple
    extent: tuple
    bc_mode: BCMode

    @property
    def spacing(self):
        return tuple(length / cells for length, cells in zip(self.extent, self.shape))

    @property
    def periodic(self):
        return self.bc_mode == BCMode.PERIODIC

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def volume(self):
        return float(np.prod(self.extent))

    @property
    def diameter(self):
        return math.sqrt(sum(length * length for length in self.extent))

    def face_shape(self, axis):
        shape = list(self.shape)
        if not self.periodic:
            shape[axis] += 1
        return tuple(shape)

    def cell_centers(self, axis):
        return (np.arange(self.shape[axis]) + 0.5) * self.spacing[axis]

    def face_positions(self, axis):
        return np.arange(self.face_shape(axis)[axis]) * self.spacing[axis]

    def cell_coordinates(self):
        axes = [self.cell_centers(a) for a in range(self.dim)]
        return np.meshgrid(*axes, indexing='ij')

    def face_coordinates(self, axis):
        axes = [self.face_positions(a) if a == axis else self.cell_centers(a)
                for a in range(self.dim)]
        return np.meshgrid(*axes, indexing='ij')

    def zeros(self, units=''):
        return ScalarField(self, np.zeros(self.shape), units)

    def zero_vector(self, units=''):
        return VectorField(self, tuple(np.zeros(self.face_shape(a)) for a in range(self.dim)), units)


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray
    units: str = ''

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != tuple(self.grid.shape):
            raise ValidationError(
                f"scalar field shape {self.values.shape} does not match grid {self.grid.shape}")

    def copy(self):
        return ScalarField(self.grid, self.values.copy(), self.units)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.values)))


@dataclass
class VectorField:
    grid: Grid
    components: tuple
    units: str = ''

    def __post_init__(self):
        self.components = tuple(np.asarray(c, dtype=np.float64) for c in self.components)
        if len(self.components) != self.grid.dim:
            raise ValidationError(
                f"vector field has {len(self.components)} components on a {self.grid.dim}D grid")
        for axis, comp in enumerate(self.components):
            if comp.shape != self.grid.face_shape(axis):
                raise ValidationError(
                    f"component {axis} has shape {comp.shape}, expected {self.grid.face_shape(axis)}")

    def __getitem__(self, axis):
        return self.components[axis]

    def copy(self):
        return VectorField(self.grid, tuple(c.copy() for c in self.components), self.units)

    def is_finite(self):
        return all(bool(np.all(np.isfinite(c))) for c in self.components)

    def scaled(self, factor):
        return VectorField(self.grid, tuple(factor * c for c in self.components), self.units)

    def plus(self, other, factor=1.0):
        return VectorField(self.grid, tuple(a + factor * b for a, b in zip(self.components, other.components)),
                           self.units)

    def max_abs(self):
        return max(float(np.max(np.abs(c))) for c in self.components)


def make_grid(dim, shape, extent, bc_mode=BCMode.PAPER_BOX):
    if dim not in (2, 3):
        raise ValidationError(f"grid dimension must be 2 or 3, got {dim}")
    shape = tuple(int(s) for s in shape)
    extent = tuple(float(e) for e in extent)
    if len(shape) != dim or len(extent) != dim:
        raise ValidationError(f"shape {shape} and extent {extent} must both have {dim} entries")
    if any(s < 4 for s in shape):
        raise ValidationError(f"every axis needs at least 4 cells, got {shape}")
    if any(not (e > 0) or not math.isfinite(e) for e in extent):
        raise ValidationError(f"extents must be positive, got {extent}")
    try:
        bc_mode = BCMode(bc_mode)
    except ValueError:
        raise ValidationError(f"unknown boundary mode '{bc_mode}'") from None
    return Grid(dim, shape, extent, bc_mode)


# --- array-level helpers ---

def axis_slice(ndim, axis, sl):
    index = [slice(None)] * ndim
    index[axis] = sl
    return tuple(index)


def pad_axis(values, axis, before=1, after=1):
    widths = [(0, 0)] * values.ndim
    widths[axis] = (before, after)
    return np.pad(values, widths)


def shifted(values, offset, axis, periodic, ghost='zero'):
    """``out[i] = values[i + offset]`` for ``offset`` in {-1, +1}.

    Out-of-range entries take the ghost rule: 'zero', 'even' (mirror) or
    'odd' (negated mirror).  Periodic axes wrap.
    """
    if periodic:
        return np.roll(values, -offset, axis=axis)
    nd = values.ndim
    if offset == 1:
        inner = values[axis_slice(nd, axis, slice(1, None))]
        edge = values[axis_slice(nd, axis, slice(-1, None))]
        tail = _ghost(edge, ghost)
        return np.concatenate([inner, tail], axis=axis)
    inner = values[axis_slice(nd, axis, slice(None, -1))]
    edge = values[axis_slice(nd, axis, slice(0, 1))]
    head = _ghost(edge, ghost)
    return np.concatenate([head, inner], axis=axis)


def _ghost(edge, rule):
    if rule == 'even':
        return edge
    if rule == 'odd':
        return -edge
    return np.zeros_like(edge)


def cell_to_face(grid, values, axis):
    """Arithmetic mean of the two cells sharing each face; walls copy the
    adjacent cell."""
    if grid.periodic:
        return 0.5 * (values + np.roll(values, 1, axis=axis))
    nd = values.ndim
    inner = 0.5 * (values[axis_slice(nd, axis, slice(1, None))]
                   + values[axis_slice(nd, axis, slice(None, -1))])
    first = values[axis_slice(nd, axis, slice(0, 1))]
    last = values[axis_slice(nd, axis, slice(-1, None))]
    return np.concatenate([first, inner, last], axis=axis)


def face_to_cell(grid, values, axis):
    if grid.periodic:
        return 0.5 * (values + np.roll(values, -1, axis=axis))
    nd = values.ndim
    return 0.5 * (values[axis_slice(nd, axis, slice(1, None))]
                  + values[axis_slice(nd, axis, slice(None, -1))])


def zero_wall_faces(grid, values, axis):
    if not grid.periodic:
        nd = values.ndim
        values[axis_slice(nd, axis, 0)] = 0.0
        values[axis_slice(nd, axis, -1)] = 0.0
    return values


def face_values_left_right(grid, values, axis):
    """Cell values on the low and high side of every face along ``axis``.

    Wall faces get zeros on their outer side.
    """
    if grid.periodic:
        return np.roll(values, 1, axis=axis), values
    left = pad_axis(values, axis, 1, 0)
    right = pad_axis(values, axis, 0, 1)
    return left, right


def _face_difference(grid, values, axis):
    h = grid.spacing[axis]
    if grid.periodic:
        return (values - np.roll(values, 1, axis=axis)) / h
    return pad_axis(np.diff(values, axis=axis) / h, axis)


def _face_divergence(grid, values, axis):
    h = grid.spacing[axis]
    if grid.periodic:
        return (np.roll(values, -1, axis=axis) - values) / h
    return np.diff(values, axis=axis) / h


# --- operations ---

def integrate(f):
    return float(np.sum(f.values)) * f.grid.cell_volume


def lp_norm(f, p):
    if p == math.inf:
        return float(np.max(np.abs(f.values)))
    if not p >= 1:
        raise ValidationError(f"Lp norm needs p >= 1, got {p}")
    return integrate(ScalarField(f.grid, np.abs(f.values) ** p)) ** (1.0 / p)


def gradient(f):
    grid = f.grid
    return VectorField(grid, tuple(_face_difference(grid, f.values, a) for a in range(grid.dim)))


def divergence(v):
    grid = v.grid
    total = np.zeros(grid.shape)
    for axis in range(grid.dim):
        total += _face_divergence(grid, v[axis], axis)
    return ScalarField(grid, total)


def laplacian(f):
    return divergence(gradient(f))


def laplacian_split(f):
    """Split the scalar Laplacian as ``neighbour_sum - diagonal * f``.

    Both parts are nonnegative for nonnegative ``f``; the stepper uses this
    to take sign-preserving relaxation sweeps.
    """
    grid = f.grid
    neighbours = np.zeros(grid.shape)
    diagonal = np.zeros(grid.shape)
    for axis in range(grid.dim):
        inv_h2 = 1.0 / grid.spacing[axis] ** 2
        neighbours += (shifted(f.values, 1, axis, grid.periodic)
                       + shifted(f.values, -1, axis, grid.periodic)) * inv_h2
        count = np.full(grid.shape[axis], 2.0)
        if not grid.periodic:
            count[0] = count[-1] = 1.0
        bshape = [1] * grid.dim
        bshape[axis] = grid.shape[axis]
        diagonal = diagonal + count.reshape(bshape) * inv_h2
    return neighbours, np.broadcast_to(diagonal, grid.shape).copy()


def component_laplacian(grid, values, axis):
    """Laplacian of velocity component ``axis`` under the grid's velocity BC.

    No-slip: wall-normal faces are held at zero, tangential walls use the
    odd ghost (zero at the half-cell wall).
    """
    out = np.zeros_like(values)
    for b in range(grid.dim):
        inv_h2 = 1.0 / grid.spacing[b] ** 2
        ghost = 'zero' if b == axis else 'odd'
        up = shifted(values, 1, b, grid.periodic, ghost)
        down = shifted(values, -1, b, grid.periodic, ghost)
        out += (up - 2.0 * values + down) * inv_h2
    return zero_wall_faces(grid, out, axis)


def vector_laplacian(v):
    grid = v.grid
    return VectorField(grid, tuple(component_laplacian(grid, v[a], a) for a in range(grid.dim)))


def face_dot(v, w):
    return sum(float(np.sum(a * b)) for a, b in zip(v.components, w.components)) * v.grid.cell_volume


def cell_dot(f, g):
    return float(np.sum(f.values * g.values)) * f.grid.cell_volume


def cell_magnitude_sq(v):
    """|v|^2 at cell centres, averaging the squared face values per axis."""
    grid = v.grid
    total = np.zeros(grid.shape)
    for axis in range(grid.dim):
        total += face_to_cell(grid, v[axis] ** 2, axis)
    return total


def cell_centered_vector(v):
    grid = v.grid
    return [face_to_cell(grid, v[axis], axis) for axis in range(grid.dim)]
