import math

import numpy as np
import pytest

from solwave import (
    ComplexFieldState,
    ConfigurationError,
    ShapeError,
    StabilityError,
    evolve_nlkg,
    free_model,
    make_grid,
    minimize,
    to_standing_wave,
)
from solwave.evolve import wave_charges, wave_energy
from solwave.functionals import energy
from solwave.solver import SolverConfig

GRID = make_grid(3, 30.0, 600)


@pytest.fixture(scope="module")
def standing(scalar):
    r = minimize(scalar, GRID, [300.0], SolverConfig(grad_tolerance=1e-10))
    return r, to_standing_wave(r.u_star, r.omega_star)


def test_standing_wave_invariants(scalar, standing):
    r, state = standing
    np.testing.assert_allclose(wave_charges(state), [300.0], rtol=1e-12)
    assert wave_energy(scalar, state) == pytest.approx(energy(scalar, GRID, r.u_star, r.omega_star).total, rel=1e-13)


def test_zero_data_stays_zero(scalar):
    z = np.zeros((1, GRID.N))
    d = evolve_nlkg(scalar, GRID, ComplexFieldState(GRID, z, z), 0.025, 1.0)
    assert np.all(d.E == 0) and np.all(d.final.phi == 0)
    assert not d.aborted


def test_standing_wave_is_stationary(scalar, standing):
    r, state = standing
    d = evolve_nlkg(scalar, GRID, state, 0.25 * GRID.dr, 10.0)
    assert not d.aborted and d.steps == 800
    assert d.energy_drift < 1e-8
    assert np.max(d.charge_drift) < 1e-12
    assert d.max_profile_drift < 1e-4
    # phase rotates at -omega
    expected = -r.omega_star[0] * d.t
    assert np.max(np.abs(d.phase[:, 0] - expected)) < 1e-3


def test_time_reversal(scalar):
    g = make_grid(3, 20.0, 200)
    u = 0.5 * np.exp(-(g.r / 3.0) ** 2)
    start = ComplexFieldState(g, u * (1 + 0.2j), -0.7j * u)
    dt = 0.25 * g.dr
    fwd = evolve_nlkg(scalar, g, start, dt, 5.0)
    back = evolve_nlkg(scalar, g, ComplexFieldState(g, fwd.final.phi, -fwd.final.phi_t), dt, 5.0)
    np.testing.assert_allclose(back.final.phi, start.phi, atol=1e-9)
    np.testing.assert_allclose(-back.final.phi_t, start.phi_t, atol=1e-9)


def test_linear_dispersion():
    g = make_grid(3, 20.0, 800)
    kappa = 3 * math.pi / g.r_max
    u = np.sin(kappa * g.r) / g.r
    omega = math.sqrt(1 + kappa**2)
    d = evolve_nlkg(free_model([1.0]), g, ComplexFieldState(g, u, -1j * omega * u), 0.25 * g.dr, 20.0)
    slope = np.polyfit(d.t, d.phase[:, 0], 1)[0]
    assert -slope == pytest.approx(omega, rel=0.01)


def test_dt_above_stability_bound(scalar, standing):
    with pytest.raises(StabilityError):
        evolve_nlkg(scalar, GRID, standing[1], 0.6 * GRID.dr, 1.0)


def test_non_integer_steps(scalar, standing):
    with pytest.raises(ConfigurationError, match="integer"):
        evolve_nlkg(scalar, GRID, standing[1], 0.025, 1.01)


def test_wrong_grid(scalar, standing):
    with pytest.raises(ShapeError):
        evolve_nlkg(scalar, make_grid(3, 30.0, 300), standing[1], 0.025, 1.0)


def test_growth_abort(scalar):
    u = 0.5 * np.exp(-(GRID.r / 3.0) ** 2)
    d = evolve_nlkg(scalar, GRID, ComplexFieldState(GRID, u, 0 * u), 0.025, 10.0, stride=1, growth_limit=1e-15)
    assert d.aborted and d.blowup_step is not None and d.steps < 400


def test_csv(scalar, standing):
    d = evolve_nlkg(scalar, GRID, standing[1], 0.025, 0.5)
    lines = d.to_csv().splitlines()
    assert lines[0] == "t,E,C_1,profile_drift"
    assert len(lines) == d.t.size + 1
