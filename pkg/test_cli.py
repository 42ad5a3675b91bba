import os

import numpy as np
import pytest
from flask import Flask
from sqlalchemy import select

from coralsim import db
from coralsim.cli import main
from coralsim.commands.sweeps import DEFAULT_ALPHAS
from coralsim.diagnostics import ENTROPY_ALPHA
from coralsim.models import RunRecord, SweepRecord


@pytest.fixture
def config_file(tmp_path, small_config):
    def write(*overrides):
        path = tmp_path / 'run.txt'
        path.write_text(small_config(*overrides).serialize(), encoding='utf-8')
        return str(path)
    return write


def test_info_prints_exponents(app, capsys):
    assert main(['info', '--alpha', '0.5'], app=app) == 0
    out = capsys.readouterr().out
    assert 'p       = 2.6666666666666665' in out
    assert 'energy functional: power p>1' in out


def test_info_entropy_branch(app, capsys):
    assert main(['info', '--alpha', repr(1.0 / 12.0)], app=app) == 0
    assert 'energy functional: entropy' in capsys.readouterr().out


def test_info_near_entropy_branch(app, capsys):
    assert main(['info', '--alpha', '0.0833333333'], app=app) == 0
    out = capsys.readouterr().out
    assert 'power p<1' in out
    assert 'p is approximately 1' in out


def test_usage_errors_exit_1(app):
    assert main(['info'], app=app) == 1
    assert main(['frobnicate'], app=app) == 1
    assert main(['info', '--alpha', '-1'], app=app) == 1


def test_help_exits_cleanly(app, capsys):
    assert main(['--help'], app=app) == 0
    assert 'sweep-eps' in capsys.readouterr().out


def test_run_records_success(app, tmp_path, config_file, capsys):
    out_dir = tmp_path / 'out'
    code = main(['run', '--config', config_file(), '--set', 'alpha=0.25', '--output', str(out_dir),
                 '--name', 'blobs'], app=app)
    assert code == 0
    assert (out_dir / 'diagnostics.csv').exists()
    assert os.listdir(out_dir / 'snapshots')
    record = db.session.scalars(select(RunRecord)).one()
    assert record.status == 'completed'
    assert record.name == 'blobs'
    assert record.steps > 0
    assert set(record.summary) >= {'mass_n', 'energy', 'D1', 'B3'}
    assert 'model.alpha = 0.25' in record.config_text
    assert 'run 1' in capsys.readouterr().out


def test_run_failure_exits_2(app, tmp_path, config_file, capsys):
    code = main(['run', '--config', config_file('run.dt=10', 'run.T=1'), '--output', str(tmp_path / 'out')],
                app=app)
    assert code == 2
    record = db.session.scalars(select(RunRecord)).one()
    assert record.status == 'failed'
    assert 'exceeds stable_dt' in record.error_msg
    assert 'step 1' in capsys.readouterr().err


def test_bad_config_exits_1(app, tmp_path):
    path = tmp_path / 'bad.txt'
    path.write_text('alpha = -3\n', encoding='utf-8')
    assert main(['run', '--config', str(path)], app=app) == 1
    assert main(['run', '--set', 'nonsense=1'], app=app) == 1


def test_check_stored_run(app, tmp_path, config_file, capsys):
    out_dir = str(tmp_path / 'out')
    assert main(['run', '--config', config_file('run.dt=0.001'), '--output', out_dir], app=app) == 0
    capsys.readouterr()
    assert main(['check', out_dir], app=app) == 0
    out = capsys.readouterr().out
    assert 'residual' in out
    assert len(out.strip().splitlines()) == 1 + 11
    assert main(['check', out_dir, '--max-residual', '0'], app=app) == 1


def test_sweep_alpha_command(app, tmp_path, config_file, capsys):
    out_dir = tmp_path / 'alpha'
    code = main(['sweep-alpha', '--config', config_file(), '--values', '0.0,0.5', '--output', str(out_dir)],
                app=app)
    assert code == 0
    assert (out_dir / 'stability.csv').exists()
    record = db.session.scalars(select(SweepRecord)).one()
    assert record.status == 'completed'
    assert [row['alpha'] for row in record.table] == [0.0, 0.5]
    assert 'outside theorem' in capsys.readouterr().out


def test_sweep_eps_command(app, tmp_path, config_file):
    out_dir = tmp_path / 'eps'
    code = main(['sweep-eps', '--config', config_file(), '--values', '0.04,0.02,0.01', '--norms', 'c_L2,u_L2',
                 '--output', str(out_dir)], app=app)
    assert code == 0
    with open(out_dir / 'convergence.csv', encoding='utf-8') as fh:
        assert fh.readline().strip().split(',') == ['eps_a', 'eps_b', 'c_L2', 'u_L2', 'rate_c_L2', 'rate_u_L2']


def test_sweep_eps_rejects_increasing_values(app, config_file):
    assert main(['sweep-eps', '--config', config_file(), '--values', '0.1,0.2,0.05'], app=app) == 1
    assert main(['sweep-eps', '--config', config_file(), '--values', '0.1,abc'], app=app) == 1


def test_history_lists_runs(app, tmp_path, config_file, capsys):
    main(['run', '--config', config_file(), '--output', str(tmp_path / 'a')], app=app)
    main(['run', '--config', config_file(), '--output', str(tmp_path / 'b')], app=app)
    capsys.readouterr()
    assert main(['history', '--per-page', '1'], app=app) == 0
    out = capsys.readouterr().out
    assert 'runs 1-1 of 2 (page 1/2)' in out
    assert out.count('completed') == 1


def test_init_db(app, capsys):
    assert main(['init-db'], app=app) == 0
    assert 'results schema ready' in capsys.readouterr().out


def test_run_blow_up_exits_2(app, tmp_path, config_file, capsys, monkeypatch):
    from coralsim import stepper
    original = stepper.implicit_diffusion

    def poisoned(f, dt, solver):
        out = original(f, dt, solver)
        out.values[0, 0] = np.nan
        return out
    monkeypatch.setattr(stepper, 'implicit_diffusion', poisoned)
    assert main(['run', '--config', config_file(), '--output', str(tmp_path / 'out')], app=app) == 2
    assert "non-finite values in field 'n'" in capsys.readouterr().err
    record = db.session.scalars(select(RunRecord)).one()
    assert record.status == 'failed'


def test_runs_are_byte_identical(app, tmp_path, config_file):
    path = config_file('initial.preset=random_smooth', 'run.seed=5')
    for name in ('a', 'b'):
        assert main(['run', '--config', path, '--output', str(tmp_path / name)], app=app) == 0
    first, second = tmp_path / 'a', tmp_path / 'b'
    assert (first / 'diagnostics.csv').read_bytes() == (second / 'diagnostics.csv').read_bytes()
    snapshots = sorted(os.listdir(first / 'snapshots'))
    assert snapshots == sorted(os.listdir(second / 'snapshots'))
    for name in snapshots:
        assert (first / 'snapshots' / name).read_bytes() == (second / 'snapshots' / name).read_bytes()


def test_default_alphas_hit_entropy_branch(app, tmp_path, config_file, capsys):
    assert float(DEFAULT_ALPHAS.split(',')[1]) == ENTROPY_ALPHA
    assert main(['sweep-alpha', '--config', config_file(), '--output', str(tmp_path / 'alpha')], app=app) == 0
    record = db.session.scalars(select(SweepRecord)).one()
    assert [row['functional'] for row in record.table][:2] == ['power p<1', 'entropy']
    assert 'entropy' in capsys.readouterr().out


def test_commands_registered_on_flask_cli(app, tmp_path):
    assert isinstance(app, Flask)
    assert 'sim' in app.cli.commands
    runner = app.test_cli_runner()
    result = runner.invoke(args=['sim', 'init-db'])
    assert result.exit_code == 0
    assert 'results schema ready' in result.output
    result = runner.invoke(args=['sim', 'info', '--alpha', '0.5'])
    assert result.exit_code == 0
    assert 'energy functional: power p>1' in result.output
