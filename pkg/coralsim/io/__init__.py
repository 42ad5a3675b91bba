from coralsim.io.run_config import KEYS, RunConfig, parse_config
from coralsim.io.sinks import CSV_COLUMNS, DirectorySink, load_trajectory, read_diagnostics, write_table
from coralsim.io.snapshot import read_snapshot, write_snapshot

__all__ = [
    'KEYS', 'RunConfig', 'parse_config',
    'CSV_COLUMNS', 'DirectorySink', 'load_trajectory', 'read_diagnostics', 'write_table',
    'read_snapshot', 'write_snapshot',
]
