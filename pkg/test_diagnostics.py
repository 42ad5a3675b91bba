import math

import numpy as np
import pytest

from coralsim.diagnostics import (DissipationLedger, ENTROPY_ALPHA, LEDGER_KEYS, energy_functional,
                                  entropy_functional, envelope_fit, envelope_passes, exponents,
                                  ledger_integrands, limit_norm_exponent, power_integral, record,
                                  update_ledger)
from coralsim.errors import ValidationError
from coralsim.fluid import PoissonSolver
from coralsim.grid_ops import ScalarField, make_grid
from coralsim.model import (GaussianBlobs, HomogeneousPair, ModelParams, RandomSmooth, make_initial_state,
                            make_potential)
from coralsim.stepper import StepScheme, run


def test_exponents_at_one_half():
    ex = exponents(0.5)
    assert math.isclose(ex.p, 8.0 / 3.0)
    assert ex.gamma0 == 2.0
    assert math.isclose(ex.r_flux, 10.0 / 5.5)
    assert math.isclose(ex.r_nu, 5.0 / 3.5)
    assert math.isclose(ex.r_bulk, 10.0 / 3.0)
    assert ex.r_limit == 2.0
    assert ex.functional == 'power p>1'


def test_exponents_small_alpha():
    ex = exponents(0.1)
    assert math.isclose(ex.gamma0, 1.3)
    assert math.isclose(ex.r_limit, 1.3)
    assert ex.functional == 'power p>1'


@pytest.mark.parametrize('alpha', [0.0, 0.05, 1.0 / 12.0, 0.25, 1.0 / 3.0, 0.9, 3.0])
def test_exponent_identity(alpha):
    ex = exponents(alpha)
    assert math.isclose(2.0 * ex.p - 4.0 * ex.alpha, ex.r_bulk, rel_tol=1e-12)
    assert ex.r_limit == limit_norm_exponent(alpha)


def test_entropy_branch_only_at_exact_alpha():
    assert exponents(ENTROPY_ALPHA).functional == 'entropy'
    assert exponents(0.0833333333).functional == 'power p<1'


def test_negative_alpha_rejected():
    with pytest.raises(ValidationError):
        exponents(-0.01)


def test_entropy_of_special_values(box):
    zero = box.zeros()
    assert entropy_functional(zero) == 0.0
    ones = ScalarField(box, np.ones(box.shape))
    assert entropy_functional(ones) == 0.0
    e = ScalarField(box, np.full(box.shape, math.e))
    assert math.isclose(entropy_functional(e), math.e * box.volume, rel_tol=1e-12)


def test_power_integral(box):
    twos = ScalarField(box, np.full(box.shape, 2.0))
    assert math.isclose(power_integral(twos, 3.0), 8.0 * box.volume, rel_tol=1e-12)


def test_energy_branches(box):
    state = make_initial_state(box, HomogeneousPair(2.0, 1.0))
    phi = make_potential(box)
    entropy_params = ModelParams(grid=box, phi=phi, alpha=ENTROPY_ALPHA)
    assert math.isclose(energy_functional(state, entropy_params), 2.0 * math.log(2.0), rel_tol=1e-12)
    power_params = ModelParams(grid=box, phi=phi, alpha=0.5)
    p = 8.0 / 3.0
    assert math.isclose(energy_functional(state, power_params), 2.0 ** p / p, rel_tol=1e-12)
    with pytest.raises(ValidationError):
        energy_functional(state, power_params, a=0.0)


def test_record_of_uniform_state(box):
    params = ModelParams(grid=box, phi=make_potential(box))
    rec = record(make_initial_state(box, HomogeneousPair(1.5, 0.5, 0.25)), params, dt=0.1)
    assert math.isclose(rec.mass_n, 1.5) and math.isclose(rec.mass_m, 0.5) and math.isclose(rec.mass_c, 0.25)
    assert rec.sup_m == 0.5 and rec.sup_c == 0.25
    assert rec.grad_c_l2sq == 0.0 and rec.u_l2sq == 0.0 and rec.div_u_max == 0.0
    assert rec.dt == 0.1


def test_ledger_integrands_nonnegative(box):
    params = ModelParams(grid=box, phi=make_potential(box), alpha=0.25)
    state = make_initial_state(box, GaussianBlobs(velocity=1.0))
    integrands = ledger_integrands(state, params)
    for key in LEDGER_KEYS:
        assert getattr(integrands, key) >= -1e-12
    assert integrands.D1 > 0 and integrands.B3 > 0


def test_update_ledger_rectangle_rule(box):
    params = ModelParams(grid=box, phi=make_potential(box))
    state = make_initial_state(box, GaussianBlobs(velocity=1.0))
    ledger = update_ledger(DissipationLedger(), state, state, params, 0.5)
    integrands = ledger_integrands(state, params)
    assert math.isclose(ledger.D2, 0.5 * integrands.D2, rel_tol=1e-12)
    with pytest.raises(ValidationError):
        update_ledger(ledger, state, state, params, -1.0)


def test_linear_growth_passes_envelope():
    series = [(T, 3.0 * T + 1.0) for T in np.linspace(0.1, 2.0, 10)]
    fit = envelope_fit(series)
    assert math.isclose(fit.slope, 3.0, rel_tol=1e-9)
    assert envelope_passes(series)


def test_sublinear_growth_passes_envelope():
    series = [(T, math.sqrt(T)) for T in np.linspace(0.5, 5.0, 10)]
    assert envelope_passes(series)


def test_quadratic_growth_fails_envelope():
    series = [(float(T), float(T * T)) for T in range(1, 11)]
    fit = envelope_fit(series)
    assert math.isclose(fit.slope, 6.0) and math.isclose(fit.intercept, -5.0)
    assert math.isclose(fit.max_violation, 45.0)
    assert not envelope_passes(series)


def test_envelope_input_checks():
    with pytest.raises(ValidationError):
        envelope_fit([(1.0, 1.0), (2.0, 2.0)])
    with pytest.raises(ValidationError):
        envelope_fit([(1.0, 1.0), (1.0, 2.0), (2.0, 3.0)])


def test_envelope_window_sets_fitted_prefix():
    series = [(float(T), float(T * T)) for T in range(1, 11)]
    fit = envelope_fit(series, window=0.25)
    assert math.isclose(fit.slope, 4.0) and math.isclose(fit.intercept, -3.0)
    assert math.isclose(fit.max_violation, 63.0)
    whole = envelope_fit(series, window=1.0)
    assert whole.max_violation <= 1e-9
    for window in (0.0, 1.5):
        with pytest.raises(ValidationError):
            envelope_fit(series, window=window)


@pytest.mark.slow
@pytest.mark.parametrize('preset', [HomogeneousPair(1.0, 1.0, 0.5), GaussianBlobs(velocity=1.0),
                                    RandomSmooth(seed=3, velocity=0.5)])
def test_ledgers_of_real_runs_grow_at_most_linearly(preset):
    grid = make_grid(2, (12, 12), (1.0, 1.0))
    params = ModelParams(grid=grid, phi=make_potential(grid), alpha=0.5, epsilon=0.05, run_T=1.0)
    traj = run(params, StepScheme(), grid, preset, PoissonSolver(grid))
    for key in LEDGER_KEYS:
        series = traj.ledger_checkpoints(key)
        assert len(series) == 10
        assert envelope_passes(series), (key, envelope_fit(series))
