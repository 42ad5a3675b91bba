"""Operator-split time stepping of the coupled system.

One step runs, in this order: transport by u, chemotactic drift of n,
implicit diffusion, reactions, and the fluid substep. ``stable_dt`` is the
step-size contract under which the first four stages keep n, c and m
nonnegative without clipping.
"""
import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from coralsim.diagnostics import DissipationLedger, LEDGER_KEYS, record, update_ledger
from coralsim.errors import CFLViolation, CoralSimError, NonFiniteField, ValidationError
from coralsim.fluid import fluid_substep
from coralsim.grid_ops import (ScalarField, VectorField, axis_slice, divergence, face_values_left_right,
                               laplacian_split)
from coralsim.model import SimState, chemotactic_velocity, make_initial_state

logger = logging.getLogger(__name__)


class AdvectionScheme(str, enum.Enum):
    UPWIND1 = 'upwind1'
    CENTRAL2 = 'central2'


@dataclass(frozen=True)
class StepScheme:
    advection: AdvectionScheme = AdvectionScheme.UPWIND1
    dt_safety: float = 0.4
    clip_negatives: bool = False
    reactions: bool = True
    reaction_offset: float = 1.0
    upwind_drift: bool = True
    implicit_convection: bool = False

    def __post_init__(self):
        try:
            object.__setattr__(self, 'advection', AdvectionScheme(self.advection))
        except ValueError:
            raise ValidationError(f"unknown advection scheme '{self.advection}'") from None
        if not 0 < self.dt_safety <= 1:
            raise ValidationError(f"dt_safety must lie in (0, 1], got {self.dt_safety}")
        if not self.reaction_offset > 0:
            raise ValidationError(f"reaction_offset must be > 0, got {self.reaction_offset}")
        if self.advection == AdvectionScheme.CENTRAL2:
            logger.info("central advection does not preserve positivity; stable_dt is no guarantee")
        if not self.upwind_drift:
            logger.info("centred chemotactic transport does not preserve positivity; stable_dt is no guarantee")

    @property
    def upwind(self):
        return self.advection == AdvectionScheme.UPWIND1


def outflow_rate(velocity):
    """Largest rate at which any cell loses content through faces with outward velocity."""
    grid = velocity.grid
    rate = np.zeros(grid.shape)
    for axis in range(grid.dim):
        comp = velocity[axis]
        if grid.periodic:
            low, high = comp, np.roll(comp, -1, axis=axis)
        else:
            low = comp[axis_slice(grid.dim, axis, slice(None, -1))]
            high = comp[axis_slice(grid.dim, axis, slice(1, None))]
        rate += (np.maximum(high, 0.0) + np.maximum(-low, 0.0)) / grid.spacing[axis]
    return float(np.max(rate))


def stable_dt(state, params, scheme):
    candidates = [
        outflow_rate(state.u),
        outflow_rate(chemotactic_velocity(params, state)),
        float(np.max(np.abs(state.m.values))) + float(np.max(np.abs(state.n.values))) + scheme.reaction_offset,
    ]
    if not all(math.isfinite(rate) for rate in candidates):
        state.check_finite()
        raise NonFiniteField('chemotactic velocity', t=state.t)
    limits = [1.0 / rate for rate in candidates if rate > 0]
    return scheme.dt_safety * min(limits)


def transport(f, velocity, dt, scheme, upwind=None):
    """Conservative face-flux update ``f - dt div(velocity f_face)``.

    ``upwind`` overrides the face rule of ``scheme.advection``.
    """
    grid = f.grid
    if upwind is None:
        upwind = scheme.upwind
    fluxes = []
    for axis in range(grid.dim):
        left, right = face_values_left_right(grid, f.values, axis)
        vel = velocity[axis]
        if upwind:
            face = np.where(vel > 0, left, right)
        else:
            face = 0.5 * (left + right)
        fluxes.append(vel * face)
    flux_div = divergence(VectorField(grid, tuple(fluxes))).values
    return ScalarField(grid, f.values - dt * flux_div, f.units)


def implicit_diffusion(f, dt, solver):
    """Backward-Euler diffusion followed by one sign-preserving Jacobi sweep."""
    first = solver.scalar_resolvent(f.values, dt)
    neighbours, diagonal = laplacian_split(ScalarField(f.grid, np.maximum(first, 0.0)))
    return ScalarField(f.grid, (f.values + dt * neighbours) / (1.0 + dt * diagonal), f.units)


def react(n, c, m, dt):
    n_old, m_old = n.values, m.values
    return (ScalarField(n.grid, n_old / (1.0 + dt * m_old), n.units),
            ScalarField(c.grid, (c.values + dt * m_old) / (1.0 + dt), c.units),
            ScalarField(m.grid, m_old / (1.0 + dt * n_old), m.units))


def step(state, params, scheme, solver, dt):
    if not dt > 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    state.check_finite()
    limit = stable_dt(state, params, scheme)
    if dt > limit * (1.0 + 1e-12):
        raise CFLViolation(f"dt = {dt:.6g} exceeds stable_dt = {limit:.6g}", dt=dt, stable_dt=limit)

    drift = chemotactic_velocity(params, state)

    n = transport(state.n, state.u, dt, scheme)
    c = transport(state.c, state.u, dt, scheme)
    m = transport(state.m, state.u, dt, scheme)

    n = transport(n, drift, dt, scheme, upwind=scheme.upwind_drift)

    n = implicit_diffusion(n, dt, solver)
    c = implicit_diffusion(c, dt, solver)
    m = implicit_diffusion(m, dt, solver)

    if scheme.reactions:
        n, c, m = react(n, c, m, dt)

    mid = SimState(state.t, n, c, m, state.u, state.p)
    mid.check_finite()
    u, p = fluid_substep(mid, params, dt, solver, implicit_convection=scheme.implicit_convection)
    new = SimState(state.t + dt, n, c, m, u, p)
    new.check_finite()

    if scheme.clip_negatives:
        for name in ('n', 'c', 'm'):
            values = getattr(new, name).values
            lowest = float(values.min())
            if lowest < 0:
                logger.warning("clipping negative %s (min %.3e) at t=%.6g", name, lowest, new.t)
                np.maximum(values, 0.0, out=values)
    return new


@dataclass
class Trajectory:
    params: object
    states: list = field(default_factory=list)
    records: list = field(default_factory=list)
    ledger: DissipationLedger = field(default_factory=DissipationLedger)
    ledger_series: list = field(default_factory=list)
    steps: int = 0

    @property
    def grid(self):
        return self.params.grid

    @property
    def final(self):
        return self.states[-1]

    @property
    def times(self):
        return [s.t for s in self.states]

    def ledger_checkpoints(self, key, count=10):
        """``count`` evenly spaced (T, value) samples of one ledger entry."""
        if key not in LEDGER_KEYS:
            raise ValidationError(f"unknown ledger entry '{key}'")
        series = [(t, getattr(led, key)) for t, led in self.ledger_series if t > 0]
        if len(series) < count:
            return series
        picks = np.linspace(0, len(series) - 1, count).round().astype(int)
        return [series[i] for i in sorted(set(picks))]


class NullSink:
    def begin(self, state):
        pass

    def emit(self, rec, ledger):
        pass

    def snapshot(self, state, index):
        pass

    def end(self, trajectory):
        pass


def run(params, scheme, grid, preset, solver, sink=None, snapshot_every=1, fixed_dt=0.0):
    """Integrate from the preset (or a given SimState) up to ``params.run_T``."""
    if params.grid != grid:
        raise ValidationError("model parameters and run grid differ")
    if snapshot_every < 1:
        raise ValidationError(f"snapshot_every must be >= 1, got {snapshot_every}")
    sink = sink or NullSink()

    state = preset.copy() if isinstance(preset, SimState) else make_initial_state(grid, preset, solver)
    traj = Trajectory(params, states=[state])
    rec = record(state, params)
    traj.records.append(rec)
    traj.ledger_series.append((state.t, traj.ledger))

    sink.begin(state)
    sink.emit(rec, traj.ledger)
    sink.snapshot(state, 0)
    logger.info("run started: grid %s, T=%g, alpha=%g, epsilon=%g",
                grid.shape, params.run_T, params.alpha, params.epsilon)

    end = params.run_T
    slack = 1e-12 * max(1.0, end)
    step_index = 0
    while end - state.t > slack:
        step_index += 1
        try:
            dt = fixed_dt if fixed_dt > 0 else stable_dt(state, params, scheme)
            dt = min(dt, end - state.t)
            new = step(state, params, scheme, solver, dt)
        except CoralSimError as exc:
            logger.error("step %d at t=%.6g failed: %s", step_index, state.t, exc)
            raise exc.at_step(step_index, state.t)

        traj.ledger = update_ledger(traj.ledger, state, new, params, dt)
        state = new
        rec = record(state, params, dt)
        traj.records.append(rec)
        traj.ledger_series.append((state.t, traj.ledger))
        sink.emit(rec, traj.ledger)
        logger.debug("step %d: t=%.6g dt=%.3e E=%.6g", step_index, state.t, dt, rec.energy)

        last = end - state.t <= slack
        if step_index % snapshot_every == 0 or last:
            traj.states.append(state)
            sink.snapshot(state, step_index)

    traj.steps = step_index
    sink.end(traj)
    logger.info("run finished: %d steps, t=%.6g", step_index, state.t)
    return traj
