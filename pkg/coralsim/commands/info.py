import click

from coralsim.diagnostics import ENTROPY_ALPHA, exponents


@click.command('info')
@click.option('--alpha', type=float, required=True, help='sensitivity decay exponent')
def info_command(alpha):
    """Print the exponent set for one alpha."""
    ex = exponents(alpha)
    click.echo(f"alpha   = {ex.alpha!r}")
    click.echo(f"p       = {ex.p!r}")
    click.echo(f"gamma0  = {ex.gamma0!r}")
    click.echo(f"r_flux  = {ex.r_flux!r}")
    click.echo(f"r_nu    = {ex.r_nu!r}")
    click.echo(f"r_bulk  = {ex.r_bulk!r}")
    click.echo(f"r_limit = {ex.r_limit!r}")
    click.echo(f"energy functional: {ex.functional}")
    if ex.functional != 'entropy' and abs(ex.p - 1.0) < 1e-6:
        click.echo(f"note: p is approximately 1; the entropy branch is used only for alpha = 1/12 "
                   f"exactly ({ENTROPY_ALPHA!r})")
    if alpha == 0:
        click.echo("note: alpha = 0 lies outside the global-existence regime")
