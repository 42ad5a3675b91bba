import click

from coralsim.io.run_config import RunConfig, parse_config


def load_run_config(config_path, overrides):
    """Config file (or defaults) plus ``--set key=value`` overrides."""
    if config_path:
        with open(config_path, encoding='utf-8') as fh:
            cfg = parse_config(fh.read())
    else:
        cfg = RunConfig()
    return cfg.with_overrides(*overrides)


config_option = click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                             help='run document (key = value lines)')
set_option = click.option('--set', 'overrides', multiple=True, metavar='KEY=VALUE',
                          help='override one config key; repeatable')


def parse_values(text):
    try:
        return tuple(float(part) for part in text.split(',') if part.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got '{text}'") from None
