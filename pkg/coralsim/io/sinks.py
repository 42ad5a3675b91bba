"""Run output: the diagnostics CSV, snapshot files and trajectory reloading."""
import csv
import logging
import os
import re

from coralsim.diagnostics import LEDGER_KEYS
from coralsim.errors import ValidationError
from coralsim.io.run_config import RunConfig, parse_config
from coralsim.io.snapshot import read_snapshot, write_snapshot
from coralsim.stepper import NullSink, Trajectory

logger = logging.getLogger(__name__)

RECORD_COLUMNS = ('t', 'dt', 'mass_n', 'mass_m', 'mass_c', 'sup_m', 'sup_c', 'grad_c_l2sq', 'u_l2sq',
                  'n_lp', 'entropy_n', 'energy', 'div_u_max')
CSV_COLUMNS = RECORD_COLUMNS + LEDGER_KEYS

DIAGNOSTICS_FILE = 'diagnostics.csv'
CONFIG_FILE = 'run.cfg'
SNAPSHOT_DIR = 'snapshots'
_SNAPSHOT_NAME = re.compile(r'^snap_(\d{5,})\.ksns$')


def csv_row(rec, ledger):
    values = [getattr(rec, name) for name in RECORD_COLUMNS] + [getattr(ledger, key) for key in LEDGER_KEYS]
    return [repr(float(v)) for v in values]


def snapshot_name(index):
    return f'snap_{index:05d}.ksns'


class DirectorySink(NullSink):
    """Writes ``diagnostics.csv``, ``run.cfg`` and ``snapshots/`` into one directory."""

    def __init__(self, path, config_text=None):
        self.path = path
        self.config_text = config_text
        self._fh = None
        self._writer = None
        self.snapshots = []

    def begin(self, state):
        os.makedirs(os.path.join(self.path, SNAPSHOT_DIR), exist_ok=True)
        if self.config_text is not None:
            with open(os.path.join(self.path, CONFIG_FILE), 'w', encoding='utf-8') as fh:
                fh.write(self.config_text)
        self._fh = open(os.path.join(self.path, DIAGNOSTICS_FILE), 'w', newline='', encoding='utf-8')
        self._writer = csv.writer(self._fh, lineterminator='\n')
        self._writer.writerow(CSV_COLUMNS)

    def emit(self, rec, ledger):
        self._writer.writerow(csv_row(rec, ledger))

    def snapshot(self, state, index):
        path = os.path.join(self.path, SNAPSHOT_DIR, snapshot_name(index))
        write_snapshot(state, path)
        self.snapshots.append(path)

    def end(self, trajectory):
        self.close()
        logger.info("wrote %d snapshots to %s", len(self.snapshots), self.path)

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def write_table(path, rows, columns=None):
    """Write a list of dicts as CSV; floats via repr for exact replay."""
    columns = columns or (list(rows[0].keys()) if rows else [])
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns])


def read_diagnostics(path):
    with open(path, newline='', encoding='utf-8') as fh:
        reader = csv.DictReader(fh)
        return [{key: float(value) for key, value in row.items()} for row in reader]


def load_trajectory(directory):
    """Rebuild a Trajectory (states only) from a run directory.

    Model parameters come from ``run.cfg`` when present, else from the
    defaults on the snapshots' grid.
    """
    snap_dir = os.path.join(directory, SNAPSHOT_DIR)
    if not os.path.isdir(snap_dir):
        raise ValidationError(f"no snapshots directory in {directory}")
    files = sorted((int(m.group(1)), name) for name in os.listdir(snap_dir)
                   if (m := _SNAPSHOT_NAME.match(name)))
    if not files:
        raise ValidationError(f"no snapshots found in {snap_dir}")
    states = [read_snapshot(os.path.join(snap_dir, name)) for _, name in files]
    grid = states[0].grid

    config_path = os.path.join(directory, CONFIG_FILE)
    if os.path.exists(config_path):
        with open(config_path, encoding='utf-8') as fh:
            cfg = parse_config(fh.read())
        if cfg.build_grid() != grid:
            raise ValidationError("run.cfg grid does not match the stored snapshots")
    else:
        cfg = RunConfig()
        if grid.periodic:
            cfg = cfg.with_overrides('model.phi=zero')
    params = cfg.build_params(grid)
    return Trajectory(params, states=states, steps=files[-1][0])
