import math
import os

import click
from flask import current_app
from flask.cli import with_appcontext

from coralsim.commands import config_option, load_run_config, parse_values, set_option
from coralsim.diagnostics import ENTROPY_ALPHA
from coralsim.errors import CoralSimError
from coralsim.io.sinks import write_table
from coralsim.models.sweep import SweepRecord
from coralsim.sweep import NORMS, SweepPlan, alpha_sweep, epsilon_sweep, summarize, table_rows


# the second value takes the entropy branch, so it must be 1/12 exactly
DEFAULT_ALPHAS = ','.join(repr(a) for a in (0.0, ENTROPY_ALPHA, 0.25, 0.5, 1.0))


def _jsonable(rows):
    # NaN is not valid JSON
    return [{key: (None if isinstance(value, float) and math.isnan(value) else value)
             for key, value in row.items()} for row in rows]


def _output_dir(output_dir, name):
    path = output_dir or os.path.join(current_app.config['OUTPUT_ROOT'], name)
    os.makedirs(path, exist_ok=True)
    return path


def _record_failure(record, exc):
    record.finish([{'error': str(exc), **{k: v for k, v in exc.context.items() if k != 'field'}}],
                  status='failed')


@click.command('sweep-eps')
@config_option
@set_option
@click.option('--values', 'values_text', default='0.4,0.2,0.1,0.05', show_default=True,
              help='decreasing epsilon values')
@click.option('--norms', default=','.join(NORMS), show_default=True)
@click.option('--compare-time', type=float, default=None, help='comparison time, default T/2')
@click.option('--workers', type=click.IntRange(min=1), default=None)
@click.option('--output', 'output_dir', type=click.Path(file_okay=False))
@with_appcontext
def sweep_eps_command(config_path, overrides, values_text, norms, compare_time, workers, output_dir):
    """Vanishing-epsilon convergence table."""
    cfg = load_run_config(config_path, overrides)
    plan = SweepPlan(cfg, 'epsilon', parse_values(values_text), tuple(n.strip() for n in norms.split(',')),
                     compare_time, workers or current_app.config['DEFAULT_WORKERS'])
    output_dir = _output_dir(output_dir, 'sweep_eps')

    record = SweepRecord(variable='epsilon', values=list(plan.values), output_dir=output_dir)
    record.save()
    try:
        table = epsilon_sweep(plan, cfg.build_solver())
    except CoralSimError as exc:
        _record_failure(record, exc)
        raise

    rows = table_rows(table)
    write_table(os.path.join(output_dir, 'convergence.csv'), rows)
    record.finish(_jsonable(rows))

    click.echo(f"limit norm exponent r = {table.r!r}")
    for norm, info in summarize(table).items():
        verdict = 'Cauchy' if info['cauchy'] else 'NOT Cauchy'
        distances = ' '.join(f'{d:.3e}' for d in info['distances'])
        click.echo(f"  {norm:<6} {verdict:<11} {distances}")
    click.echo(f"  table: {os.path.join(output_dir, 'convergence.csv')}")


@click.command('sweep-alpha')
@config_option
@set_option
@click.option('--values', 'values_text', default=DEFAULT_ALPHAS, show_default=True,
              help='alpha values')
@click.option('--workers', type=click.IntRange(min=1), default=None)
@click.option('--output', 'output_dir', type=click.Path(file_okay=False))
@with_appcontext
def sweep_alpha_command(config_path, overrides, values_text, workers, output_dir):
    """Stability table over alpha; blow-ups are reported per row."""
    cfg = load_run_config(config_path, overrides)
    workers = workers or current_app.config['DEFAULT_WORKERS']
    plan = SweepPlan(cfg, 'alpha', parse_values(values_text), workers=workers)
    output_dir = _output_dir(output_dir, 'sweep_alpha')

    record = SweepRecord(variable='alpha', values=list(plan.values), output_dir=output_dir)
    record.save()
    rows = alpha_sweep(plan, cfg.build_solver())
    write_table(os.path.join(output_dir, 'stability.csv'), rows)
    record.finish(_jsonable(rows))

    for row in rows:
        flag = '' if row['within_theorem'] else '  (outside theorem)'
        click.echo(f"  alpha={row['alpha']:<10.6g} {row['functional']:<10} {row['outcome']:<15} "
                   f"max_sup_n={row['max_sup_n']:.4g}{flag}")
    click.echo(f"  table: {os.path.join(output_dir, 'stability.csv')}")
