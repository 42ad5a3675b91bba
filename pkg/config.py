import os

from dotenv import load_dotenv

load_dotenv()


class Config:
    # Results database (run and sweep bookkeeping)
    SQLALCHEMY_DATABASE_URI = os.environ.get('DATABASE_URL', 'sqlite:///coralsim.db')
    SQLALCHEMY_TRACK_MODIFICATIONS = False
    SQLALCHEMY_ENGINE_OPTIONS = {}
    AUTO_CREATE_SCHEMA = True

    # Where `run` and the sweeps write their output directories
    OUTPUT_ROOT = os.environ.get('CORALSIM_OUTPUT_ROOT', 'output')

    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')

    # Process pool size for sweeps; 1 runs everything in-process
    DEFAULT_WORKERS = int(os.environ.get('CORALSIM_WORKERS', '1'))


class DevelopmentConfig(Config):
    DEBUG = True
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'DEBUG')


class ProductionConfig(Config):
    DEBUG = False
    SQLALCHEMY_DATABASE_URI = os.environ.get('DATABASE_URL')
    AUTO_CREATE_SCHEMA = False
    SQLALCHEMY_ENGINE_OPTIONS = {
        'pool_recycle': 3600,
        'pool_pre_ping': True
    }


class TestingConfig(Config):
    TESTING = True
    # in-memory SQLite; Flask-SQLAlchemy pins it to one shared connection
    SQLALCHEMY_DATABASE_URI = 'sqlite://'
    LOG_LEVEL = 'WARNING'


config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': Config
}
