import click

from coralsim.errors import ValidationError
from coralsim.io.sinks import load_trajectory
from coralsim.weakform import residual_table


@click.command('check')
@click.argument('run_dir', type=click.Path(exists=True, file_okay=False))
@click.option('--max-residual', type=float, default=None, help='fail when any |residual| exceeds this')
def check_command(run_dir, max_residual):
    """Weak-form residuals of a stored trajectory."""
    traj = load_trajectory(run_dir)
    rows = residual_table(traj, traj.params)

    click.echo(f"{'test':<12}{'eq':<4}{'residual':>16}")
    for kind, equation, value in rows:
        click.echo(f"{kind:<12}{equation:<4}{value:>16.6e}")

    worst = max(abs(value) for _, _, value in rows)
    if max_residual is not None and worst > max_residual:
        raise ValidationError(f"largest residual {worst:.3e} exceeds {max_residual:.3e}")
