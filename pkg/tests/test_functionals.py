import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solwave import (
    DegenerateComponentError,
    DomainError,
    FieldState,
    builtin_model,
    charges,
    energy,
    estimate_alpha,
    lambda_ratio,
    make_grid,
    reduced_energy_and_gradient,
    xi,
)
from solwave.functionals import b_values, energy_expanded, reduced_energy

GRID = make_grid(3, 12.0, 300)
COUPLED = builtin_model("coupled_k2", {"p": 2.0, "q": 4.5})
SCALAR = builtin_model("scalar_quartic_quintic")
ALPHA_COUPLED = estimate_alpha(COUPLED).value


def gaussians(amps, widths, grid=GRID):
    return FieldState(grid, np.stack([a * np.exp(-((grid.r / w) ** 2)) for a, w in zip(amps, widths)]))


def with_b(target, grid=GRID):
    """Fields whose values of int u_j^2 are exactly ``target``."""
    u = gaussians([1.0] * len(target), [1.0 + 0.5 * j for j in range(len(target))], grid)
    scale = np.sqrt(np.asarray(target) / b_values(grid, u))
    return u.with_values(u.values * scale[:, None])


fields = st.tuples(
    st.lists(st.floats(0.05, 1.5), min_size=2, max_size=2),
    st.lists(st.floats(0.5, 3.0), min_size=2, max_size=2),
).map(lambda aw: gaussians(*aw))


def test_zero_field_energy():
    u = FieldState(GRID, np.zeros((2, GRID.N)))
    assert energy(COUPLED, GRID, u, [0.3, 0.7]).total == 0.0


def test_charges_example():
    u = with_b([1.0, 2.0])
    np.testing.assert_allclose(charges(GRID, u, [2.0, 3.0]), [2.0, 6.0], rtol=1e-13)


def test_implied_frequencies_example():
    u = with_b([2.0, 4.0])
    res = reduced_energy_and_gradient(COUPLED, GRID, u, [1.0, 1.0])
    np.testing.assert_allclose(res.omega, [0.5, 0.25], rtol=1e-13)


@settings(max_examples=40, deadline=None)
@given(fields, st.lists(st.floats(0.0, 2.0), min_size=2, max_size=2))
def test_assembled_matches_expanded(u, omega):
    e = energy(COUPLED, GRID, u, omega).total
    assert e == pytest.approx(energy_expanded(COUPLED, GRID, u, omega), rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(fields, st.lists(st.floats(0.05, 2.0), min_size=2, max_size=2))
def test_lambda_display_identity(u, omega):
    w = np.asarray(omega)
    b = b_values(GRID, u)
    e = energy(COUPLED, GRID, u, w)
    expected = (e.a + 0.5 * np.sum(w * w * b)) / np.sum(w * b)
    assert lambda_ratio(COUPLED, GRID, u, w) == pytest.approx(expected, rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(fields)
def test_xi_identity_and_lower_bound(u):
    x, w = xi(COUPLED, GRID, u)
    e = energy(COUPLED, GRID, u, w)
    assert x == pytest.approx(math.sqrt(2 * e.a / np.sum(e.b)), rel=1e-13)
    assert lambda_ratio(COUPLED, GRID, u, w) == pytest.approx(x, rel=1e-12)
    # int F >= alpha int |u|^2, hence xi^2 >= 2 alpha
    assert x * x >= 2 * ALPHA_COUPLED * (1 - 1e-10)


def test_xi_minimizes_over_frequency_grid():
    u = gaussians([0.8, 0.4], [1.5, 2.5])
    x, _ = xi(COUPLED, GRID, u)
    ws = np.linspace(0.2, 2.0, 41)
    vals = np.array([[lambda_ratio(COUPLED, GRID, u, [w1, w2]) for w2 in ws] for w1 in ws])
    assert vals.min() >= x * (1 - 1e-12)
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    assert i == j and abs(ws[i] - x) <= ws[1] - ws[0]


def test_lambda_undefined_at_zero_charge():
    u = gaussians([1.0, 1.0], [1.0, 1.0])
    with pytest.raises(DomainError, match="sum C = 0"):
        lambda_ratio(COUPLED, GRID, u, [0.0, 0.0])


def test_xi_undefined_at_zero():
    with pytest.raises(DomainError):
        xi(COUPLED, GRID, FieldState(GRID, np.zeros((2, GRID.N))))


def test_degenerate_component():
    u = gaussians([1.0, 1e-9], [1.0, 1.0])
    with pytest.raises(DegenerateComponentError, match="component 2"):
        reduced_energy_and_gradient(COUPLED, GRID, u, [1.0, 1.0])


def test_nonpositive_charge():
    with pytest.raises(DomainError):
        reduced_energy_and_gradient(COUPLED, GRID, gaussians([1, 1], [1, 1]), [1.0, 0.0])


@pytest.mark.parametrize("model,amps,widths,sigma", [
    (COUPLED, [0.6, 0.3], [1.5, 2.0], [2.0, 1.0]),
    (SCALAR, [0.7], [2.0], [5.0]),
])
def test_gradient_matches_directional_differences(model, amps, widths, sigma):
    u = gaussians(amps, widths)
    res = reduced_energy_and_gradient(model, GRID, u, sigma)
    assert res.value == pytest.approx(reduced_energy(model, GRID, u, sigma), rel=1e-14)
    rng = np.random.default_rng(3)
    for _ in range(5):
        d = rng.normal(size=u.values.shape) * np.exp(-GRID.r / 3)
        h = 1e-5
        num = (reduced_energy(model, GRID, u.values + h * d, sigma)
               - reduced_energy(model, GRID, u.values - h * d, sigma)) / (2 * h)
        ana = float(np.sum(res.gradient.values * GRID.weights * d))
        assert num == pytest.approx(ana, rel=1e-6, abs=1e-9)


def test_reduced_energy_equals_energy_at_implied_frequencies():
    u = gaussians([0.5, 0.9], [2.0, 1.2])
    sigma = [3.0, 4.0]
    res = reduced_energy_and_gradient(COUPLED, GRID, u, sigma)
    e = energy(COUPLED, GRID, u, res.omega)
    assert res.value == pytest.approx(e.total, rel=1e-13)
    np.testing.assert_allclose(charges(GRID, u, res.omega), sigma, rtol=1e-13)
