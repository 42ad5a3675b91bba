import logging

from flask import Flask
from flask_migrate import Migrate
from flask_sqlalchemy import SQLAlchemy

from config import config

# Initialize extensions
db = SQLAlchemy()
migrate = Migrate()


def create_app(config_name='default'):
    app = Flask(__name__)

    # Load config
    app.config.from_object(config[config_name])
    if not app.config.get('SQLALCHEMY_DATABASE_URI'):
        raise RuntimeError(f"DATABASE_URL is not set for config '{config_name}'")

    logging.basicConfig(
        level=getattr(logging, str(app.config['LOG_LEVEL']).upper(), logging.INFO),
        format='%(asctime)s %(levelname)-5.5s [%(name)s] %(message)s',
    )

    # Initialize extensions with app
    db.init_app(app)
    migrate.init_app(app, db)

    # Register models and the simulator command group
    from coralsim import models  # noqa: F401
    from coralsim.cli import sim_cli

    app.cli.add_command(sim_cli)

    if app.config['AUTO_CREATE_SCHEMA']:
        with app.app_context():
            db.create_all()

    return app
