"""Parameter sweeps: vanishing-epsilon convergence and alpha stability."""
import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from coralsim.diagnostics import LEDGER_KEYS, envelope_fit, exponents, limit_norm_exponent
from coralsim.errors import (CFLViolation, CoralSimError, NonFiniteField, SimulationError, SolverFailure,
                             ValidationError)
from coralsim.grid_ops import ScalarField, face_dot, lp_norm
from coralsim.io.run_config import RunConfig
from coralsim.stepper import run

logger = logging.getLogger(__name__)

NORMS = ('n_Lr', 'c_L2', 'm_L2', 'u_L2')


class SweepVariable(str, enum.Enum):
    EPSILON = 'epsilon'
    ALPHA = 'alpha'


@dataclass(frozen=True)
class SweepPlan:
    base: RunConfig
    variable: SweepVariable
    values: tuple
    norms: tuple = NORMS
    compare_time: float = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'variable', SweepVariable(self.variable))
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))
        object.__setattr__(self, 'norms', tuple(self.norms))
        if self.compare_time is None:
            object.__setattr__(self, 'compare_time', 0.5 * self.base['run.T'])
        unknown = set(self.norms) - set(NORMS)
        if unknown:
            raise ValidationError(f"unknown sweep norms {sorted(unknown)}; choose from {', '.join(NORMS)}")
        if any(v < 0 for v in self.values):
            raise ValidationError(f"{self.variable.value} values must be >= 0")
        if self.variable == SweepVariable.EPSILON:
            if len(self.values) < 3:
                raise ValidationError("an epsilon sweep needs at least 3 values")
            if any(b > a for a, b in zip(self.values, self.values[1:])):
                raise ValidationError("epsilon values must be decreasing (repeated values are allowed and give "
                                      "zero distances)")
            if not self.compare_time > 0:
                raise ValidationError(f"compare_time must be > 0, got {self.compare_time}")
        elif not self.values:
            raise ValidationError("an alpha sweep needs at least one value")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")


@dataclass
class ConvergenceTable:
    epsilons: tuple
    r: float
    rows: list = field(default_factory=list)
    cauchy: dict = field(default_factory=dict)
    rates: dict = field(default_factory=dict)


def _simulate(config_text, overrides, method=None, tol=None, max_iter=None):
    """Run one configuration in a fresh solver; safe to call in a worker process."""
    from coralsim.io.run_config import parse_config
    cfg = parse_config(config_text).with_overrides(*overrides)
    if method is not None:
        cfg = cfg.with_overrides(f'solver.method={method}', f'solver.tol={tol!r}', f'solver.max_iter={max_iter}')
    grid = cfg.build_grid()
    solver = cfg.build_solver(grid)
    return run(cfg.build_params(grid), cfg.build_scheme(), grid, cfg.build_preset(), solver,
               snapshot_every=max(1, cfg['run.snapshot_every']), fixed_dt=cfg['run.dt'])


def _solver_settings(solver):
    if solver is None:
        return (None, None, None)
    return (solver.method.value, solver.tol, solver.max_iter)


def _map(function, tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(function, *zip(*tasks)))
    return [function(*task) for task in tasks]


def _epsilon_final(config_text, epsilon, compare_time, method, tol, max_iter):
    overrides = (f'model.epsilon={epsilon!r}', f'run.T={compare_time!r}')
    try:
        return _simulate(config_text, overrides, method, tol, max_iter).final
    except CoralSimError as exc:
        exc.context['epsilon'] = epsilon
        raise


def distance(a, b, norm, r):
    grid = a.grid
    if norm == 'n_Lr':
        return lp_norm(ScalarField(grid, a.n.values - b.n.values), r)
    if norm == 'u_L2':
        du = a.u.plus(b.u, -1.0)
        return math.sqrt(face_dot(du, du))
    name = norm[0]
    return lp_norm(ScalarField(grid, getattr(a, name).values - getattr(b, name).values), 2)


def count_inversions(series):
    return sum(1 for a, b in zip(series, series[1:]) if b > a)


def empirical_rates(distances, epsilons):
    """log(d_j / d_j+1) / log(eps_j / eps_j+1); NaN where undefined."""
    rates = []
    for j in range(len(distances) - 1):
        d0, d1, e0, e1 = distances[j], distances[j + 1], epsilons[j], epsilons[j + 1]
        if d0 > 0 and d1 > 0 and e1 > 0 and e0 > e1:
            rates.append(math.log(d0 / d1) / math.log(e0 / e1))
        else:
            rates.append(float('nan'))
    return rates


def epsilon_sweep(plan, solver=None):
    """Pairwise distances between consecutive epsilon runs at ``compare_time``."""
    if plan.variable != SweepVariable.EPSILON:
        raise ValidationError("epsilon_sweep needs a plan over epsilon")
    text = plan.base.serialize()
    r = limit_norm_exponent(plan.base['model.alpha'])
    tasks = [(text, eps, plan.compare_time, *_solver_settings(solver)) for eps in plan.values]
    logger.info("epsilon sweep over %s (%d workers)", plan.values, plan.workers)
    try:
        finals = _map(_epsilon_final, tasks, plan.workers)
    except CoralSimError as exc:
        logger.error("epsilon sweep aborted at epsilon=%s: %s", exc.context.get('epsilon'), exc)
        raise

    table = ConvergenceTable(plan.values, r)
    for j in range(len(finals) - 1):
        row = {'eps_a': plan.values[j], 'eps_b': plan.values[j + 1]}
        for norm in plan.norms:
            row[norm] = distance(finals[j], finals[j + 1], norm, r)
        table.rows.append(row)
    for norm in plan.norms:
        series = [row[norm] for row in table.rows]
        table.cauchy[norm] = count_inversions(series) <= 1
        table.rates[norm] = empirical_rates(series, plan.values)
    return table


def _alpha_row(config_text, alpha, method, tol, max_iter):
    row = {'alpha': alpha, 'within_theorem': alpha > 0, 'functional': exponents(alpha).functional,
           'outcome': 'ok', 'failed_at': float('nan'), 'max_sup_n': float('nan'), 'final_energy': float('nan')}
    row.update({f'slope_{key}': float('nan') for key in LEDGER_KEYS})
    try:
        traj = _simulate(config_text, (f'model.alpha={alpha!r}',), method, tol, max_iter)
    except (SolverFailure, SimulationError) as exc:
        if isinstance(exc, NonFiniteField):
            row['outcome'] = 'blow-up'
        elif isinstance(exc, CFLViolation):
            row['outcome'] = 'cfl-violation'
        else:
            row['outcome'] = 'solver-failure'
        if exc.t is not None:
            row['failed_at'] = exc.t
        logger.warning("alpha=%g: %s (%s)", alpha, row['outcome'], exc)
        return row
    row['max_sup_n'] = max(rec.sup_n for rec in traj.records)
    row['final_energy'] = traj.records[-1].energy
    for key in LEDGER_KEYS:
        series = traj.ledger_checkpoints(key)
        if len(series) >= 3:
            row[f'slope_{key}'] = envelope_fit(series).slope
    return row


def alpha_sweep(plan, solver=None):
    """One row per alpha value; blow-ups become rows, not sweep failures."""
    if plan.variable != SweepVariable.ALPHA:
        raise ValidationError("alpha_sweep needs a plan over alpha")
    text = plan.base.serialize()
    tasks = [(text, alpha, *_solver_settings(solver)) for alpha in plan.values]
    logger.info("alpha sweep over %s (%d workers)", plan.values, plan.workers)
    rows = _map(_alpha_row, tasks, plan.workers)
    for row in rows:
        if not row['within_theorem']:
            logger.info("alpha=%g lies outside the global-existence regime", row['alpha'])
    return rows


def table_rows(table):
    """Flatten a ConvergenceTable into CSV-ready dicts."""
    rows = []
    for j, row in enumerate(table.rows):
        flat = dict(row)
        for norm, rates in table.rates.items():
            flat[f'rate_{norm}'] = rates[j - 1] if 0 < j <= len(rates) else float('nan')
        rows.append(flat)
    return rows


def summarize(table):
    return {norm: {'cauchy': table.cauchy[norm],
                   'distances': [row[norm] for row in table.rows],
                   'max_rate': float(np.nanmax(table.rates[norm])) if any(
                       not math.isnan(x) for x in table.rates[norm]) else None}
            for norm in table.cauchy}
