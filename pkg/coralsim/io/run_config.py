"""Flat ``key = value`` run documents.

Keys are dotted (``model.alpha``); a bare key such as ``alpha`` resolves to
the single dotted key ending in it. ``#`` starts a comment. Every key has a
default, so the empty document is a valid configuration.
"""
import math
from dataclasses import dataclass

from coralsim.errors import ConfigError

_TRUE = {'true', 'yes', 'on', '1'}
_FALSE = {'false', 'no', 'off', '0'}


def _as_bool(text):
    lowered = text.lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"expected true/false, got '{text}'")


def _as_float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got '{text}'")
    return value


def _tuple_of(parse):
    def parse_tuple(text):
        if not text.strip():
            return ()
        return tuple(parse(part.strip()) for part in text.split(','))
    return parse_tuple


def _choice(*options):
    def parse_choice(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got '{text}'")
        return text
    return parse_choice


def _format(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, tuple):
        return ','.join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ConfigKey:
    name: str
    parse: object
    default: object
    check: object = None
    doc: str = ''


def _positive(v):
    return v > 0


def _nonnegative(v):
    return v >= 0


KEYS = (
    ConfigKey('grid.dim', int, 2, lambda v: v in (2, 3), "spatial dimension, 2 or 3"),
    ConfigKey('grid.shape', _tuple_of(int), (32, 32), lambda v: all(s >= 4 for s in v), "cells per axis"),
    ConfigKey('grid.extent', _tuple_of(_as_float), (1.0, 1.0), lambda v: all(e > 0 for e in v),
              "box side lengths"),
    ConfigKey('grid.bc', _choice('paperbox', 'periodic'), 'paperbox'),
    ConfigKey('model.alpha', _as_float, 0.5, _nonnegative, "sensitivity decay exponent"),
    ConfigKey('model.c_s', _as_float, 1.0, _positive, "sensitivity bound"),
    ConfigKey('model.kappa', _as_float, 1.0, doc="convection strength, 0 gives Stokes flow"),
    ConfigKey('model.epsilon', _as_float, 0.0, _nonnegative, "regularization parameter"),
    ConfigKey('model.sensitivity', _choice('scalar', 'diagonal', 'rotational'), 'scalar'),
    ConfigKey('model.diagonal_scales', _tuple_of(_as_float), (), lambda v: all(0 <= s <= 1 for s in v),
              "per-axis factors, empty gives 1/(a+1)"),
    ConfigKey('model.rotation_angle', _as_float, math.pi / 2),
    ConfigKey('model.rotation_axis', int, 2, lambda v: v in (0, 1, 2)),
    ConfigKey('model.phi', _choice('zero', 'linear', 'cosine'), 'linear', doc="gravitational potential"),
    ConfigKey('model.phi_strength', _as_float, 1.0),
    ConfigKey('model.phi_axis', int, -1),
    ConfigKey('model.cutoff_margin', _as_float, 0.0, lambda v: 0 <= v < 0.5),
    ConfigKey('energy.a', _as_float, 1.0, _positive),
    ConfigKey('energy.b', _as_float, 1.0, _positive),
    ConfigKey('initial.preset', _choice('gaussian_blobs', 'homogeneous', 'random_smooth'), 'gaussian_blobs'),
    ConfigKey('initial.n0', _as_float, 1.0, _positive),
    ConfigKey('initial.m0', _as_float, 1.0, _positive),
    ConfigKey('initial.c0', _as_float, 0.0, _nonnegative),
    ConfigKey('initial.amplitude', _as_float, 1.0, _positive),
    ConfigKey('initial.width', _as_float, 0.1, _positive),
    ConfigKey('initial.velocity', _as_float, 0.0),
    ConfigKey('initial.modes', int, 3, lambda v: v >= 1),
    ConfigKey('scheme.advection', _choice('upwind1', 'central2'), 'upwind1'),
    ConfigKey('scheme.dt_safety', _as_float, 0.4, lambda v: 0 < v <= 1),
    ConfigKey('scheme.clip_negatives', _as_bool, False),
    ConfigKey('scheme.reaction_offset', _as_float, 1.0, _positive, "offset in the reaction step bound"),
    ConfigKey('scheme.upwind_drift', _as_bool, True, doc="upwind n in the chemotactic transport stage"),
    ConfigKey('scheme.implicit_convection', _as_bool, False, doc="solve fluid convection linearly implicitly"),
    ConfigKey('run.T', _as_float, 1.0, _nonnegative, "final time"),
    ConfigKey('run.seed', int, 0, _nonnegative),
    ConfigKey('run.snapshot_every', int, 10, lambda v: v >= 1),
    ConfigKey('run.output_dir', str, 'output'),
    ConfigKey('run.dt', _as_float, 0.0, _nonnegative, "fixed step, 0 for adaptive"),
    ConfigKey('solver.method', _choice('cg', 'spectral'), 'cg'),
    ConfigKey('solver.tol', _as_float, 1e-10, _positive),
    ConfigKey('solver.max_iter', int, 500, lambda v: v >= 1),
)

KEY_INDEX = {key.name: key for key in KEYS}


def resolve_key(name, line=0):
    if name in KEY_INDEX:
        return KEY_INDEX[name]
    matches = [key for key in KEYS if key.name.split('.', 1)[1] == name]
    if len(matches) == 1:
        return matches[0]
    if matches:
        raise ConfigError(f"ambiguous key '{name}'", line)
    raise ConfigError(f"unknown key '{name}'", line)


class RunConfig:
    """A fully defaulted, validated run document."""

    def __init__(self, values=None, lines=None):
        self._values = {key.name: key.default for key in KEYS}
        self._values.update(values or {})
        self._lines = dict(lines or {})
        self._validate()

    def __getitem__(self, name):
        return self._values[resolve_key(name).name]

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self._values == other._values

    def __repr__(self):
        changed = {k: v for k, v in self._values.items() if v != KEY_INDEX[k].default}
        return f"<RunConfig {changed}>"

    def as_dict(self):
        return dict(self._values)

    def serialize(self):
        return ''.join(f"{key.name} = {_format(self._values[key.name])}\n" for key in KEYS)

    def with_overrides(self, *assignments):
        values, lines = dict(self._values), dict(self._lines)
        for assignment in assignments:
            if '=' not in assignment:
                raise ConfigError(f"override '{assignment}' is not key=value")
            name, text = (part.strip() for part in assignment.split('=', 1))
            key = resolve_key(name)
            values[key.name] = _parse_value(key, text, 0)
            lines.pop(key.name, None)
        return RunConfig(values, lines)

    def _validate(self):
        v = self._values
        dim = v['grid.dim']
        for name in ('grid.shape', 'grid.extent'):
            if len(v[name]) != dim:
                raise ConfigError(f"{name} needs {dim} entries, got {len(v[name])}", self._lines.get(name, 0))
        scales = v['model.diagonal_scales']
        if scales and len(scales) != dim:
            raise ConfigError(f"model.diagonal_scales needs {dim} entries",
                              self._lines.get('model.diagonal_scales', 0))
        if v['model.phi'] == 'linear' and v['grid.bc'] == 'periodic':
            raise ConfigError("a linear potential needs grid.bc = paperbox", self._lines.get('model.phi', 0))
        if v['solver.method'] == 'spectral' and v['grid.bc'] != 'periodic':
            raise ConfigError("solver.method = spectral needs grid.bc = periodic",
                              self._lines.get('solver.method', 0))

    # --- builders ---

    def build_grid(self):
        from coralsim.grid_ops import make_grid
        return make_grid(self['grid.dim'], self['grid.shape'], self['grid.extent'], self['grid.bc'])

    def build_params(self, grid=None):
        from coralsim.model import ModelParams, make_potential
        grid = grid or self.build_grid()
        phi = make_potential(grid, self['model.phi'], self['model.phi_strength'], self['model.phi_axis'])
        return ModelParams(
            grid=grid,
            phi=phi,
            alpha=self['model.alpha'],
            c_s=self['model.c_s'],
            kappa=self['model.kappa'],
            epsilon=self['model.epsilon'],
            sensitivity_kind=self['model.sensitivity'],
            run_T=self['run.T'],
            cutoff_margin=self['model.cutoff_margin'],
            diagonal_scales=self['model.diagonal_scales'],
            rotation_angle=self['model.rotation_angle'],
            rotation_axis=self['model.rotation_axis'],
            energy_a=self['energy.a'],
            energy_b=self['energy.b'],
        )

    def build_scheme(self):
        from coralsim.stepper import StepScheme
        return StepScheme(advection=self['scheme.advection'], dt_safety=self['scheme.dt_safety'],
                          clip_negatives=self['scheme.clip_negatives'],
                          reaction_offset=self['scheme.reaction_offset'],
                          upwind_drift=self['scheme.upwind_drift'],
                          implicit_convection=self['scheme.implicit_convection'])

    def build_solver(self, grid=None):
        from coralsim.fluid import PoissonSolver
        return PoissonSolver(grid or self.build_grid(), self['solver.method'], self['solver.tol'],
                             self['solver.max_iter'])

    def build_preset(self):
        from coralsim.model import GaussianBlobs, HomogeneousPair, RandomSmooth
        preset = self['initial.preset']
        if preset == 'homogeneous':
            return HomogeneousPair(self['initial.n0'], self['initial.m0'], self['initial.c0'])
        if preset == 'random_smooth':
            return RandomSmooth(self['run.seed'], self['initial.modes'], self['initial.velocity'])
        return GaussianBlobs(self['initial.amplitude'], self['initial.width'], self['initial.velocity'])


def _parse_value(key, text, line):
    try:
        value = key.parse(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key.name}: {exc}", line) from None
    if key.check is not None and not key.check(value):
        raise ConfigError(f"value {text!r} out of range for {key.name}", line)
    return value


def parse_config(text):
    values, lines = {}, {}
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split('#', 1)[0].strip()
        if not content:
            continue
        if '=' not in content:
            raise ConfigError(f"expected 'key = value', got '{content}'", number)
        name, value_text = (part.strip() for part in content.split('=', 1))
        key = resolve_key(name, number)
        if key.name in values:
            raise ConfigError(f"duplicate key '{key.name}'", number)
        values[key.name] = _parse_value(key, value_text, number)
        lines[key.name] = number
    return RunConfig(values, lines)
