import pytest

from coralsim import create_app, db
from coralsim.grid_ops import make_grid
from coralsim.io.run_config import RunConfig


@pytest.fixture
def app():
    app = create_app('testing')
    with app.app_context():
        yield app
        db.session.remove()
        db.drop_all()


@pytest.fixture
def box():
    return make_grid(2, (16, 16), (1.0, 1.0), 'paperbox')


@pytest.fixture
def torus():
    return make_grid(2, (16, 16), (1.0, 1.0), 'periodic')


@pytest.fixture
def small_config():
    """Factory for cheap run documents: 8x8 box, short horizon."""
    def build(*overrides):
        base = RunConfig().with_overrides('grid.shape=8,8', 'run.T=0.02', 'run.snapshot_every=1',
                                          'initial.velocity=0.5')
        return base.with_overrides(*overrides)
    return build
