import logging
import os

import click
from flask import current_app
from flask.cli import with_appcontext

from coralsim.commands import config_option, load_run_config, set_option
from coralsim.errors import CoralSimError
from coralsim.io.sinks import DirectorySink, RECORD_COLUMNS
from coralsim.models.run import RunRecord
from coralsim.stepper import run as run_simulation

logger = logging.getLogger(__name__)


@click.command('run')
@config_option
@set_option
@click.option('--output', 'output_dir', type=click.Path(file_okay=False), help='output directory')
@click.option('--name', default=None, help='name stored with the run record')
@with_appcontext
def run_command(config_path, overrides, output_dir, name):
    """Run one simulation and write diagnostics.csv plus snapshots."""
    cfg = load_run_config(config_path, overrides)
    output_dir = output_dir or os.path.join(current_app.config['OUTPUT_ROOT'], cfg['run.output_dir'])
    name = name or os.path.basename(os.path.normpath(output_dir))

    record = RunRecord(name=name, config_text=cfg.serialize(), seed=cfg['run.seed'], output_dir=output_dir)
    record.save()

    grid = cfg.build_grid()
    sink = DirectorySink(output_dir, cfg.serialize())
    try:
        traj = run_simulation(cfg.build_params(grid), cfg.build_scheme(), grid, cfg.build_preset(),
                              cfg.build_solver(grid), sink,
                              snapshot_every=cfg['run.snapshot_every'], fixed_dt=cfg['run.dt'])
    except CoralSimError as exc:
        logger.error("run %s failed: %s", record.id, exc)
        record.fail(exc)
        raise
    finally:
        sink.close()

    last = traj.records[-1]
    summary = {column: getattr(last, column) for column in RECORD_COLUMNS}
    summary.update(traj.ledger.as_dict())
    record.complete(traj.steps, last.t, summary)

    click.echo(f"run {record.id} '{name}': {traj.steps} steps to t={last.t:.6g}")
    click.echo(f"  mass_n={last.mass_n:.6g} mass_m={last.mass_m:.6g} energy={last.energy:.6g}")
    click.echo(f"  output: {output_dir}")
