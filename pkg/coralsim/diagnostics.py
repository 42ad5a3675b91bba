"""Monitored functionals: masses, sup-norms, the energy/entropy functional and
the running space-time dissipation ledgers."""
import dataclasses
import math
from typing import NamedTuple

import numpy as np

from coralsim.errors import ValidationError
from coralsim.grid_ops import (ScalarField, cell_centered_vector, cell_magnitude_sq, divergence, face_dot,
                               gradient, integrate, laplacian, vector_laplacian)

ENTROPY_FLOOR = 1e-300
ENTROPY_ALPHA = 1.0 / 12.0


@dataclasses.dataclass(frozen=True)
class ExponentSet:
    alpha: float
    p: float
    gamma0: float
    r_flux: float
    r_nu: float
    r_bulk: float
    r_limit: float

    @property
    def functional(self):
        """Which form of the energy functional applies."""
        if self.alpha == ENTROPY_ALPHA:
            return 'entropy'
        return 'power p>1' if self.p > 1 else 'power p<1'


def exponents(alpha):
    if not alpha >= 0:
        raise ValidationError(f"alpha must be >= 0, got {alpha}")
    alpha = float(alpha)
    p = 4.0 * alpha + 2.0 / 3.0
    r_bulk = (12.0 * alpha + 4.0) / 3.0
    assert math.isclose(2.0 * p - 4.0 * alpha, r_bulk, rel_tol=1e-12), "2p - 4 alpha must equal r_bulk"
    return ExponentSet(
        alpha=alpha,
        p=p,
        gamma0=min(3.0 * alpha + 1.0, 2.0),
        r_flux=(12.0 * alpha + 4.0) / (3.0 * alpha + 4.0),
        r_nu=(2.0 + 6.0 * alpha) / (2.0 + 3.0 * alpha),
        r_bulk=r_bulk,
        r_limit=limit_norm_exponent(alpha),
    )


def limit_norm_exponent(alpha):
    """Lebesgue exponent of the n-distance in the vanishing-epsilon study."""
    return 3.0 * alpha + 1.0 if alpha < 1.0 / 3.0 else 2.0


@dataclasses.dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    dt: float
    mass_n: float
    mass_m: float
    mass_c: float
    sup_m: float
    sup_c: float
    grad_c_l2sq: float
    u_l2sq: float
    n_lp: float
    entropy_n: float
    energy: float
    div_u_max: float
    sup_n: float = 0.0


@dataclasses.dataclass(frozen=True)
class DissipationLedger:
    D1: float = 0.0
    D2: float = 0.0
    D3: float = 0.0
    D4: float = 0.0
    D5: float = 0.0
    B1: float = 0.0
    B2: float = 0.0
    B3: float = 0.0

    def as_dict(self):
        return dataclasses.asdict(self)


LEDGER_KEYS = tuple(f.name for f in dataclasses.fields(DissipationLedger))


def _positive(f):
    return np.maximum(f.values, 0.0)


def power_integral(n, p):
    return integrate(ScalarField(n.grid, _positive(n) ** p))


def entropy_functional(n):
    """Integral of n ln n, with 0 ln 0 = 0."""
    values = _positive(n)
    return integrate(ScalarField(n.grid, values * np.log(np.maximum(values, ENTROPY_FLOOR))))


def energy_functional(state, params, a=None, b=None):
    a = params.energy_a if a is None else a
    b = params.energy_b if b is None else b
    if not (a > 0 and b > 0):
        raise ValidationError("energy coefficients a and b must be positive")
    grad_c = gradient(state.c)
    quadratic = a * face_dot(grad_c, grad_c) + b * face_dot(state.u, state.u)
    if params.alpha == ENTROPY_ALPHA:
        return entropy_functional(state.n) + quadratic
    p = exponents(params.alpha).p
    return power_integral(state.n, p) / p + quadratic


def record(state, params, dt=0.0):
    grad_c = gradient(state.c)
    return DiagnosticsRecord(
        t=state.t,
        dt=dt,
        mass_n=integrate(state.n),
        mass_m=integrate(state.m),
        mass_c=integrate(state.c),
        sup_m=float(np.max(np.abs(state.m.values))),
        sup_c=float(np.max(np.abs(state.c.values))),
        grad_c_l2sq=face_dot(grad_c, grad_c),
        u_l2sq=face_dot(state.u, state.u),
        n_lp=power_integral(state.n, exponents(params.alpha).p),
        entropy_n=entropy_functional(state.n),
        energy=energy_functional(state, params),
        div_u_max=float(np.max(np.abs(divergence(state.u).values))),
        sup_n=float(np.max(np.abs(state.n.values))),
    )


def ledger_integrands(state, params):
    """Spatial integrands of every ledger entry evaluated on one state."""
    grid = state.grid
    ex = exponents(params.alpha)
    u, n, c, m = state.u, state.n, state.c, state.m

    grad_c = gradient(c)
    grad_n = gradient(n)
    grad_m = gradient(m)
    grad_root = gradient(ScalarField(grid, _positive(n) ** (ex.p / 2.0)))
    speed = np.sqrt(sum(comp ** 2 for comp in cell_centered_vector(u)))

    return DissipationLedger(
        D1=-face_dot(vector_laplacian(u), u),
        D2=integrate(ScalarField(grid, cell_magnitude_sq(grad_c) ** 2)),
        D3=face_dot(grad_root, grad_root),
        D4=integrate(ScalarField(grid, laplacian(c).values ** 2)),
        D5=face_dot(grad_m, grad_m),
        B1=power_integral(n, ex.r_bulk),
        B2=integrate(ScalarField(grid, cell_magnitude_sq(grad_n) ** (ex.gamma0 / 2.0))),
        B3=integrate(ScalarField(grid, (np.abs(n.values) * speed) ** ex.r_nu)),
    )


def update_ledger(ledger, state_prev, state_next, params, dt):
    """Right-endpoint rectangle rule: add dt times the integrands at state_next."""
    if state_prev.grid != state_next.grid:
        raise ValidationError("ledger update across different grids")
    if dt < 0:
        raise ValidationError(f"dt must be >= 0, got {dt}")
    increment = ledger_integrands(state_next, params)
    # D1 is a nonnegative quadratic form; clamp round-off
    return DissipationLedger(**{
        key: getattr(ledger, key) + dt * max(getattr(increment, key), 0.0) for key in LEDGER_KEYS
    })


class EnvelopeFit(NamedTuple):
    slope: float
    intercept: float
    max_violation: float

    def envelope(self, T):
        return self.slope * T + self.intercept


def envelope_fit(series, window=0.5):
    """Fit an affine envelope ``slope*T + intercept`` to ``(T, value)`` pairs.

    This is a calibrated bound, not a whole-series regression. The line is a
    least-squares fit over the leading ``window`` fraction of the series (at
    least two points), lifted so that it bounds every point it was fitted
    to. ``max_violation`` is the largest excess of any point of the full
    series over the lifted line. Linear or slower growth gives zero; faster
    growth gives a positive excess that increases with T. A whole-series
    least-squares line would sit below a concave series in its middle and
    flag sublinear growth.
    """
    points = np.asarray(series, dtype=float)
    if points.ndim != 2 or points.shape[0] < 3:
        raise ValidationError("envelope_fit needs at least 3 (T, value) points")
    if not 0 < window <= 1:
        raise ValidationError(f"window must lie in (0, 1], got {window}")
    T, value = points[:, 0], points[:, 1]
    if np.any(np.diff(T) <= 0):
        raise ValidationError("envelope_fit needs strictly increasing T")

    count = max(2, int(math.ceil(window * len(T))))
    slope, intercept = np.polyfit(T[:count], value[:count], 1)
    lift = max(0.0, float(np.max(value[:count] - (slope * T[:count] + intercept))))
    intercept += lift
    violation = float(np.max(value - (slope * T + intercept)))
    return EnvelopeFit(float(slope), float(intercept), violation)


def envelope_passes(series, fraction=0.05, window=0.5):
    fit = envelope_fit(series, window)
    bound = abs(fit.envelope(series[-1][0]))
    return fit.max_violation <= fraction * bound + 1e-12
