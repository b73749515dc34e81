"""Energy, charges, the energy/charge ratio and the reduced constrained energy.

Notation (per component j, on a radial grid):

    a(u)   = 1/2 ||Du||^2 + int F(u)
    b_j(u) = int u_j^2
    E(u, w) = a(u) + 1/2 sum_j w_j^2 b_j(u)
    C_j(u, w) = w_j b_j(u)
    Lambda(u, w) = E(u, w) / sum_j C_j(u, w)
    xi(u)^2 = 2 a(u) / sum_j b_j(u)

Eliminating the frequencies through ``C_j = sigma_j`` gives the reduced energy
``E_red(u) = a(u) + 1/2 sum_j sigma_j^2 / b_j(u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateComponentError, DomainError, ModelEvaluationError, ShapeError
from .grid import FieldState, RadialGrid, as_values, integrate, kinetic, laplacian_radial
from .model import NonlinearityModel

__all__ = [
    "EnergyBreakdown",
    "ReducedEnergy",
    "energy",
    "energy_expanded",
    "charges",
    "lambda_ratio",
    "xi",
    "b_values",
    "reduced_energy",
    "reduced_energy_and_gradient",
    "elliptic_operator",
]


@dataclass(frozen=True)
class EnergyBreakdown:
    total: float
    kinetic: float
    potential_F: float
    a: float
    b: np.ndarray
    frequency_term: float


class ReducedEnergy(NamedTuple):
    value: float
    gradient: FieldState
    omega: np.ndarray


def _fields(model: NonlinearityModel, grid: RadialGrid, u) -> np.ndarray:
    v = as_values(grid, u)
    if v.shape[0] != model.k:
        raise ShapeError(f"model has {model.k} components, field has {v.shape[0]}")
    return v


def _frequencies(model: NonlinearityModel, omega) -> np.ndarray:
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if w.shape != (model.k,):
        raise ShapeError(f"expected {model.k} frequencies, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DomainError(f"frequencies must lie in [0, inf), got {w.tolist()}")
    return w


def _finite(x, what):
    if not np.all(np.isfinite(x)):
        raise ModelEvaluationError(f"{what} is not finite")
    return x


def b_values(grid: RadialGrid, u) -> np.ndarray:
    """``b_j(u) = int u_j^2`` for every component."""
    v = as_values(grid, u)
    return integrate(grid, v * v)


def _a_parts(model, grid, v):
    kin = float(np.sum(kinetic(grid, v)))
    pot = float(integrate(grid, model.F(v.T)))
    return _finite(kin, "kinetic energy"), _finite(pot, "int F(u)")


def energy(model: NonlinearityModel, grid: RadialGrid, u, omega) -> EnergyBreakdown:
    """``E(u, omega)`` assembled as ``a(u) + 1/2 sum_j omega_j^2 b_j(u)``."""
    v = _fields(model, grid, u)
    w = _frequencies(model, omega)
    kin, pot = _a_parts(model, grid, v)
    b = b_values(grid, v)
    a = 0.5 * kin + pot
    freq = 0.5 * float(np.sum(w * w * b))
    return EnergyBreakdown(a + freq, 0.5 * kin, pot, a, b, freq)


def energy_expanded(model: NonlinearityModel, grid: RadialGrid, u, omega) -> float:
    """``1/2 sum_j int |Du_j|^2 + (m_j^2 + omega_j^2) u_j^2 + 2 G(u) / k``, term by term."""
    v = _fields(model, grid, u)
    w = _frequencies(model, omega)
    g = model.G(v.T)
    total = 0.0
    for j in range(model.k):
        integrand = (model.masses[j] ** 2 + w[j] ** 2) * v[j] ** 2 + 2.0 * g / model.k
        total += 0.5 * (float(kinetic(grid, v[j])) + float(integrate(grid, integrand)))
    return _finite(total, "energy")


def charges(grid: RadialGrid, u, omega) -> np.ndarray:
    """``C_j = omega_j int u_j^2``."""
    b = b_values(grid, u)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if w.shape != b.shape:
        raise ShapeError(f"expected {b.size} frequencies, got shape {w.shape}")
    return w * b


def lambda_ratio(model: NonlinearityModel, grid: RadialGrid, u, omega) -> float:
    """Energy/charge ratio ``E / sum_j C_j``."""
    e = energy(model, grid, u, omega)
    c = float(np.sum(charges(grid, u, omega)))
    if not c > 0.0:
        raise DomainError("Lambda undefined on sum C = 0")
    return e.total / c


def xi(model: NonlinearityModel, grid: RadialGrid, u) -> tuple[float, np.ndarray]:
    """Minimum of ``Lambda(u, .)`` and the diagonal frequency vector attaining it."""
    v = _fields(model, grid, u)
    b = b_values(grid, v)
    total_b = float(np.sum(b))
    if not total_b > 0.0:
        raise DomainError("xi undefined for u = 0")
    kin, pot = _a_parts(model, grid, v)
    a = 0.5 * kin + pot
    x = math.sqrt(max(2.0 * a / total_b, 0.0))
    return x, np.full(model.k, x)


def elliptic_operator(model: NonlinearityModel, grid: RadialGrid, v: np.ndarray, omega) -> np.ndarray:
    """Left side of the stationary system, ``-Lap u_j + (m_j^2 - omega_j^2) u_j + d_j G(u)``."""
    w = np.asarray(omega, dtype=float)
    m2 = model.mass_squared
    return -laplacian_radial(grid, v) + ((m2 - w * w)[:, None]) * v + model.DG(v.T).T


def _check_floor(b, b_floor):
    if np.any(b < b_floor):
        j = int(np.argmin(b))
        raise DegenerateComponentError(
            f"component {j + 1} has int u^2 = {b[j]:.3e} below the floor {b_floor:.3e}; "
            "the charge constraint would force its frequency to infinity"
        )


def default_b_floor(sigma) -> float:
    return 1e-8 * float(np.sum(sigma))


def reduced_energy(model: NonlinearityModel, grid: RadialGrid, u, sigma, b_floor: float | None = None) -> float:
    """``a(u) + 1/2 sum_j sigma_j^2 / b_j(u)``."""
    v = _fields(model, grid, u)
    s = np.asarray(sigma, dtype=float)
    b = b_values(grid, v)
    _check_floor(b, default_b_floor(s) if b_floor is None else b_floor)
    kin, pot = _a_parts(model, grid, v)
    return 0.5 * kin + pot + 0.5 * float(np.sum(s * s / b))


def reduced_energy_and_gradient(
    model: NonlinearityModel, grid: RadialGrid, u, sigma, b_floor: float | None = None
) -> ReducedEnergy:
    """Reduced energy, its L2 gradient and the implied frequencies ``sigma_j / b_j``.

    The gradient is returned as nodal values ``g``; the Euclidean gradient with
    respect to the nodal unknowns is ``g * grid.weights``.  It coincides with
    the left side of the stationary system at ``omega = sigma / b``.
    """
    v = _fields(model, grid, u)
    s = np.asarray(sigma, dtype=float)
    if s.shape != (model.k,) or np.any(s <= 0):
        raise DomainError(f"charges must be {model.k} positive numbers, got {np.atleast_1d(s).tolist()}")
    b = b_values(grid, v)
    _check_floor(b, default_b_floor(s) if b_floor is None else b_floor)
    omega = s / b
    kin, pot = _a_parts(model, grid, v)
    value = 0.5 * kin + pot + 0.5 * float(np.sum(s * s / b))
    grad = elliptic_operator(model, grid, v, omega)
    return ReducedEnergy(value, FieldState(grid, grad), omega)
