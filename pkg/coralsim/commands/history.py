import click
from flask import current_app
from flask.cli import with_appcontext
from sqlalchemy import text

from coralsim import db


@click.command('history')
@click.option('--page', default=1, type=click.IntRange(min=1))
@click.option('--per-page', default=10, type=click.IntRange(min=1, max=100))
@with_appcontext
def history_command(page, per_page):
    """List stored runs, newest first."""
    offset = (page - 1) * per_page

    # Using raw SQL for pagination
    sql = text("""
        SELECT id, name, status, steps, final_time, output_dir, created_at
        FROM runs
        ORDER BY created_at DESC, id DESC
        LIMIT :limit OFFSET :offset
    """)
    rows = db.session.execute(sql, {'limit': per_page, 'offset': offset}).fetchall()
    total = db.session.execute(text('SELECT COUNT(*) FROM runs')).scalar()

    click.echo(f"runs {offset + 1 if rows else 0}-{offset + len(rows)} of {total} "
               f"(page {page}/{max(1, (total + per_page - 1) // per_page)})")
    for row in rows:
        click.echo(f"{row.id:>5}  {row.name:<24} {row.status:<10} steps={row.steps or 0:<7} "
                   f"t={row.final_time or 0.0:<10.6g} {row.output_dir or ''}")


@click.command('init-db')
@with_appcontext
def init_db_command():
    """Create the results schema (without migrations; see ``flask db upgrade``)."""
    db.create_all()
    click.echo(f"results schema ready at {current_app.config['SQLALCHEMY_DATABASE_URI']}")
