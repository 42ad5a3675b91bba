"""Incompressible flow: Poisson/Helmholtz solves, Leray projection, Yosida
smoothing of the convecting velocity and the fluid substep.

Every box Laplacian used here is diagonalised by a per-axis trigonometric
transform:

    ===============  ==========  ========================
    axis condition   transform   -Laplacian eigenvalue
    ===============  ==========  ========================
    Neumann cells    DCT-II      (2 - 2 cos(pi k/N))/h^2
    wall faces       DST-I       (2 - 2 cos(pi k/N))/h^2
    odd-ghost cells  DST-II      (2 - 2 cos(pi k/N))/h^2
    periodic         FFT         (2 - 2 cos(2 pi k/N))/h^2
    ===============  ==========  ========================

The conjugate-gradient method uses the transform inverse as preconditioner;
the spectral method applies it directly.
"""
import enum
import logging

import numpy as np
from scipy import fft as sp_fft
from scipy.sparse.linalg import LinearOperator, cg, gmres

from coralsim.errors import CFLViolation, NonFiniteField, SolverFailure, ValidationError
from coralsim.grid_ops import (ScalarField, VectorField, axis_slice, cell_to_face, divergence,
                               face_to_cell, gradient, laplacian, pad_axis, shifted, vector_laplacian,
                               zero_wall_faces)
from coralsim.model import buoyancy_force

logger = logging.getLogger(__name__)

NEUMANN = 'neumann'
PERIODIC = 'periodic'
FACE_DIRICHLET = 'face_dirichlet'
CELL_DIRICHLET = 'cell_dirichlet'


class SolverMethod(str, enum.Enum):
    SPECTRAL_PERIODIC = 'spectral'
    CONJUGATE_GRADIENT_NEUMANN = 'cg'


def axis_kinds(grid, component=None):
    """Per-axis boundary condition of a cell scalar (``component=None``) or of
    velocity component ``component``."""
    if grid.periodic:
        return (PERIODIC,) * grid.dim
    if component is None:
        return (NEUMANN,) * grid.dim
    return tuple(FACE_DIRICHLET if b == component else CELL_DIRICHLET for b in range(grid.dim))


def _forward(values, kinds):
    if kinds[0] == PERIODIC:
        return sp_fft.fftn(values)
    out = values
    for axis, kind in enumerate(kinds):
        if kind == NEUMANN:
            out = sp_fft.dct(out, type=2, axis=axis, norm='ortho')
        elif kind == CELL_DIRICHLET:
            out = sp_fft.dst(out, type=2, axis=axis, norm='ortho')
        else:
            interior = out[axis_slice(out.ndim, axis, slice(1, -1))]
            out = sp_fft.dst(interior, type=1, axis=axis, norm='ortho')
    return out


def _inverse(coeffs, kinds):
    if kinds[0] == PERIODIC:
        return np.real(sp_fft.ifftn(coeffs))
    out = coeffs
    for axis, kind in enumerate(kinds):
        if kind == NEUMANN:
            out = sp_fft.idct(out, type=2, axis=axis, norm='ortho')
        elif kind == CELL_DIRICHLET:
            out = sp_fft.idst(out, type=2, axis=axis, norm='ortho')
        else:
            out = pad_axis(sp_fft.idst(out, type=1, axis=axis, norm='ortho'), axis)
    return out


def _axis_eigenvalues(cells, h, kind, continuous):
    if kind == PERIODIC:
        if continuous:
            return (2.0 * np.pi * sp_fft.fftfreq(cells, d=h)) ** 2
        theta = 2.0 * np.pi * np.arange(cells) / cells
    elif kind == NEUMANN:
        theta = np.pi * np.arange(cells) / cells
    elif kind == FACE_DIRICHLET:
        theta = np.pi * np.arange(1, cells) / cells
    else:
        theta = np.pi * np.arange(1, cells + 1) / cells
    return (2.0 - 2.0 * np.cos(theta)) / (h * h)


def _pack(v):
    return np.concatenate([c.ravel() for c in v.components])


def _unpack(grid, x):
    comps, start = [], 0
    for axis in range(grid.dim):
        shape = grid.face_shape(axis)
        size = int(np.prod(shape))
        comps.append(x[start:start + size].reshape(shape))
        start += size
    return VectorField(grid, tuple(comps))


class PoissonSolver:
    """Linear solves on one grid.

    Owns a cache of transform symbols, so one instance must not be shared by
    concurrent substeps.
    """

    def __init__(self, grid, method=SolverMethod.CONJUGATE_GRADIENT_NEUMANN, tol=1e-10, max_iter=500):
        try:
            method = SolverMethod(method)
        except ValueError:
            raise ValidationError(f"unknown solver method '{method}'") from None
        if method == SolverMethod.SPECTRAL_PERIODIC and not grid.periodic:
            raise ValidationError("the spectral solver needs a periodic grid")
        if not tol > 0:
            raise ValidationError(f"solver tol must be > 0, got {tol}")
        if max_iter < 1:
            raise ValidationError(f"solver max_iter must be >= 1, got {max_iter}")
        self.grid = grid
        self.method = method
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self.last_iterations = 0
        self._symbols = {}

    def __repr__(self):
        return f"<PoissonSolver {self.method.value} tol={self.tol:g}>"

    @property
    def spectral(self):
        return self.method == SolverMethod.SPECTRAL_PERIODIC

    def symbol(self, kinds, continuous=False):
        """Eigenvalues of -Laplacian in transform space for the given axis kinds."""
        key = (kinds, continuous)
        if key not in self._symbols:
            total = 0.0
            for axis, kind in enumerate(kinds):
                lam = _axis_eigenvalues(self.grid.shape[axis], self.grid.spacing[axis], kind, continuous)
                shape = [1] * self.grid.dim
                shape[axis] = lam.size
                total = total + lam.reshape(shape)
            self._symbols[key] = total
        return self._symbols[key]

    # --- scalar solves ---

    def _neumann_inverse(self, rhs):
        """Apply (-Laplacian)^+ with the zero mode dropped."""
        kinds = axis_kinds(self.grid)
        lam = self.symbol(kinds)
        coeffs = _forward(rhs, kinds)
        with np.errstate(divide='ignore'):
            inv = np.where(lam > 0, 1.0 / np.where(lam > 0, lam, 1.0), 0.0)
        return _inverse(coeffs * inv, kinds)

    def solve_poisson(self, rhs):
        """Mean-free q with laplacian(q) = rhs - mean(rhs)."""
        grid = self.grid
        b = -(rhs - rhs.mean())
        if self.spectral:
            q = self._neumann_inverse(b)
        else:
            def matvec(x):
                return -laplacian(ScalarField(grid, x.reshape(grid.shape))).values.ravel()

            def precondition(r):
                return self._neumann_inverse(r.reshape(grid.shape)).ravel()

            q = self._krylov('cg', matvec, b.ravel(), precondition, 'pressure Poisson').reshape(grid.shape)
        return q - q.mean()

    def scalar_resolvent(self, values, s):
        """Solve (I - s Laplacian_h) x = values under the scalar boundary condition."""
        kinds = axis_kinds(self.grid)
        return _inverse(_forward(values, kinds) / (1.0 + s * self.symbol(kinds)), kinds)

    # --- vector solves ---

    def vector_resolvent(self, v, s):
        """Solve (I - s Laplacian) w = v component by component under no-slip
        (or periodic) conditions."""
        comps = []
        for axis in range(self.grid.dim):
            kinds = axis_kinds(self.grid, axis)
            lam = self.symbol(kinds, continuous=self.spectral)
            comp = _inverse(_forward(v[axis], kinds) / (1.0 + s * lam), kinds)
            comps.append(zero_wall_faces(self.grid, comp, axis))
        return VectorField(self.grid, tuple(comps), v.units)

    def vector_laplacian(self, v):
        if not self.spectral:
            return vector_laplacian(v)
        comps = []
        for axis in range(self.grid.dim):
            kinds = axis_kinds(self.grid, axis)
            lam = self.symbol(kinds, continuous=True)
            comps.append(_inverse(-lam * _forward(v[axis], kinds), kinds))
        return VectorField(self.grid, tuple(comps), v.units)

    # --- Krylov driver ---

    def _krylov(self, kind, matvec, rhs, precondition, label):
        size = rhs.size
        operator = LinearOperator((size, size), matvec=matvec, dtype=np.float64)
        preconditioner = LinearOperator((size, size), matvec=precondition, dtype=np.float64)
        atol = self.tol * (1.0 + float(np.linalg.norm(rhs)))
        iterations = [0]

        def count(_):
            iterations[0] += 1

        if kind == 'cg':
            x, info = cg(operator, rhs, M=preconditioner, rtol=0.0, atol=atol,
                         maxiter=self.max_iter, callback=count)
        else:
            x, info = gmres(operator, rhs, M=preconditioner, rtol=0.0, atol=atol,
                            restart=min(50, size), maxiter=self.max_iter,
                            callback=count, callback_type='pr_norm')
        self.last_iterations = iterations[0]
        if info != 0:
            residual = float(np.linalg.norm(rhs - matvec(x)))
            logger.error("%s solve did not converge: residual %.3e after %d iterations",
                         label, residual, iterations[0])
            raise SolverFailure(f"{label} solve did not converge (residual {residual:.3e})",
                                residual=residual, iterations=iterations[0])
        logger.debug("%s solve converged in %d iterations", label, iterations[0])
        return x


def project(u_star, solver, dt=1.0):
    """Leray projection: ``u = u_star - grad q`` with ``laplacian(q) = div u_star``.

    Returns ``(u, q / dt)``; with ``dt = 1`` the second value is ``q`` itself.
    """
    grid = u_star.grid
    if not u_star.is_finite():
        raise NonFiniteField('velocity')
    walled = VectorField(grid, tuple(zero_wall_faces(grid, c.copy(), a) for a, c in enumerate(u_star.components)),
                         u_star.units)
    q = solver.solve_poisson(divergence(walled).values)
    u = walled.plus(gradient(ScalarField(grid, q)), -1.0)
    return u, ScalarField(grid, q / dt)


def yosida(u, epsilon, solver):
    """Y_eps u = (I + eps A)^-1 u with A the projected negative Laplacian."""
    if epsilon < 0:
        raise ValidationError(f"epsilon must be >= 0, got {epsilon}")
    if epsilon == 0:
        return u.copy()
    grid = u.grid
    if solver.spectral:
        return solver.vector_resolvent(u, epsilon)

    def matvec(x):
        w = _unpack(grid, x)
        shifted_w = w.plus(solver.vector_laplacian(w), -epsilon)
        return _pack(project(shifted_w, solver)[0])

    def precondition(r):
        return _pack(project(solver.vector_resolvent(_unpack(grid, r), epsilon), solver)[0])

    x = solver._krylov('cg', matvec, _pack(u), precondition, 'Yosida resolvent')
    return _unpack(grid, x)


def convection(w, v):
    """Skew-symmetric MAC discretisation of (w . grad) v.

    Each pair of neighbouring faces exchanges ``W phi / 2h`` with opposite
    signs, so ``face_dot(v, convection(w, v)) == 0`` up to round-off.
    """
    grid = v.grid
    comps = []
    for a in range(grid.dim):
        phi = v[a]
        out = np.zeros_like(phi)
        for b in range(grid.dim):
            h = grid.spacing[b]
            phi_up = shifted(phi, 1, b, grid.periodic, 'odd')
            phi_down = shifted(phi, -1, b, grid.periodic, 'odd')
            if b == a:
                centre = face_to_cell(grid, w[a], a)
                if grid.periodic:
                    w_up, w_down = centre, np.roll(centre, 1, axis=a)
                else:
                    w_up, w_down = pad_axis(centre, a, 0, 1), pad_axis(centre, a, 1, 0)
            else:
                edge = cell_to_face(grid, w[b], a)
                if grid.periodic:
                    w_up, w_down = np.roll(edge, -1, axis=b), edge
                else:
                    nd = edge.ndim
                    w_up = edge[axis_slice(nd, b, slice(1, None))]
                    w_down = edge[axis_slice(nd, b, slice(None, -1))]
            out += (w_up * phi_up - w_down * phi_down) / (2.0 * h)
        comps.append(zero_wall_faces(grid, out, a))
    return VectorField(grid, tuple(comps))


def check_cfl(u, dt):
    grid = u.grid
    worst, where = 0.0, None
    for axis in range(grid.dim):
        courant = dt * np.abs(u[axis]) / grid.spacing[axis]
        index = np.unravel_index(int(np.argmax(courant)), courant.shape)
        if courant[index] > worst:
            worst, where = float(courant[index]), (axis, tuple(int(i) for i in index))
    if worst > 1.0 + 1e-12:
        axis, index = where
        value = float(u[axis][index])
        raise CFLViolation(
            f"face velocity u{axis}{list(index)} = {value:.6g} gives Courant number {worst:.4g} > 1",
            axis=axis, face=index, velocity=value, courant=worst)
    return worst


def fluid_substep(state, params, dt, solver, implicit_convection=False):
    """Advance u by dt: explicit buoyancy, implicit viscosity, skew-symmetric
    convection by Y_eps u, then projection.

    Convection is explicit unless ``implicit_convection`` is set, in which
    case it is linearly implicit with the lagged Y_eps u and solved by GMRES.
    Returns ``(u_new, p_new)``.
    """
    grid = state.grid
    u = state.u
    check_cfl(u, dt)

    forcing, q_force = project(buoyancy_force(params, state), solver)
    rhs = u.plus(forcing, dt)

    transport = yosida(u, params.epsilon, solver) if params.kappa != 0 else None
    if transport is None or transport.max_abs() == 0.0:
        u_star = solver.vector_resolvent(rhs, dt)
    elif not implicit_convection:
        u_star = solver.vector_resolvent(rhs.plus(convection(transport, u), -dt * params.kappa), dt)
    else:
        coeff = dt * params.kappa

        def matvec(x):
            v = _unpack(grid, x)
            out = v.plus(solver.vector_laplacian(v), -dt).plus(convection(transport, v), coeff)
            return _pack(out)

        def precondition(r):
            return _pack(solver.vector_resolvent(_unpack(grid, r), dt))

        u_star = _unpack(grid, solver._krylov('gmres', matvec, _pack(rhs), precondition, 'momentum'))

    u_new, p_update = project(u_star, solver, dt)
    p_new = ScalarField(grid, p_update.values + q_force.values)
    return u_new, p_new
