"""``coralsim`` command line.

The commands live in one ``sim`` group that the application factory
registers on ``app.cli`` (``flask --app coralsim sim run ...``). ``main``
drives the same group directly and maps failures to exit codes.
"""
import os

import click
from flask.cli import AppGroup

from coralsim import create_app
from coralsim.commands.check import check_command
from coralsim.commands.history import history_command, init_db_command
from coralsim.commands.info import info_command
from coralsim.commands.run import run_command
from coralsim.commands.sweeps import sweep_alpha_command, sweep_eps_command
from coralsim.errors import CoralSimError

sim_cli = AppGroup('sim', help='Coral fertilization simulator.')

sim_cli.add_command(run_command)
sim_cli.add_command(check_command)
sim_cli.add_command(sweep_eps_command)
sim_cli.add_command(sweep_alpha_command)
sim_cli.add_command(info_command)
sim_cli.add_command(history_command)
sim_cli.add_command(init_db_command)


def main(argv=None, app=None):
    """Run the CLI and return its exit code: 0 ok, 1 usage/validation, 2 numerical failure.

    Without ``app`` the settings profile comes from ``CORALSIM_ENV``.
    """
    if app is None:
        app = create_app(os.environ.get('CORALSIM_ENV', 'default'))
    with app.app_context():
        try:
            result = sim_cli.main(args=argv, prog_name='coralsim', standalone_mode=False)
        except click.exceptions.Exit as exc:
            return exc.exit_code
        except click.exceptions.Abort:
            click.echo('aborted', err=True)
            return 1
        except click.ClickException as exc:
            exc.show()
            return 1
        except CoralSimError as exc:
            where = f" (step {exc.step}, t={exc.t:.6g})" if exc.step is not None else ''
            click.echo(f"error: {exc}{where}", err=True)
            return exc.exit_code
    return result if isinstance(result, int) else 0
