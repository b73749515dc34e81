"""A scalar solitary wave from start to finish.

We take the quartic-quintic nonlinearity G(s) = -s^4 + s^5 with unit mass,
find the ratio floor alpha = inf F(s)/s^2, pick a charge from a plateau
trial field whose energy/charge ratio is below the mass, and minimize the
energy at that charge.  The minimizer is then launched as a standing wave
and we watch the conserved quantities.

Run with ``python demos/01_scalar_ground_state.py``.
"""

import numpy as np

from solwave import (
    builtin_model,
    check_assumptions,
    evolve_nlkg,
    make_grid,
    minimize,
    minimizer_diagnostics,
    pohozaev_defect,
    to_standing_wave,
    trial_field,
    trial_sigma,
)
from solwave.solver import SolverConfig

model = builtin_model("scalar_quartic_quintic")
report = check_assumptions(model)
print(f"alpha = {report.alpha:.6f} at z* = {report.alpha_minimizer[0]:.6f}")
print(f"frequency window: ({report.sqrt_2alpha:.5f}, {report.m:.1f})")

# A plateau at z* of radius 12 has ratio xi(u) close to sqrt(2 alpha) and
# well below m, so its charge is a good target.
grid = make_grid(3, 40.0, 2000)
u_trial = trial_field(grid, report.alpha_minimizer, 12.0)
sigma = trial_sigma(model, grid, u_trial)
print(f"\ntarget charge sigma = {sigma[0]:.2f}")

result = minimize(model, grid, sigma, SolverConfig(grad_tolerance=1e-6),
                  sqrt_2alpha=report.sqrt_2alpha, z_star=report.alpha_minimizer)
diag = minimizer_diagnostics(result, report)
print(f"converged after {result.iterations} iterations: {result.converged}")
print(f"omega* = {result.omega_star[0]:.6f}, E* = {result.E:.4f}")
print(f"Lambda = {result.Lambda:.6f} >= xi = {result.xi:.6f}")
print(f"positive everywhere: {diag.positivity}; inside window: {diag.frequency_window}")

# Stationarity under dilations: this vanishes for exact solutions and
# shrinks like dr^2 for the discrete ones.
P = pohozaev_defect(model, grid, result.u_star, result.omega_star)
print(f"Pohozaev defect relative to E: {P / result.E:.2e}")

# The profile is flat in the core and decays outside, like the trial field.
u = result.u_star.values[0]
for r in (0.0, 6.0, 10.0, 14.0, 20.0):
    i = int(np.argmin(np.abs(grid.r - r)))
    print(f"  u*({grid.r[i]:5.2f}) = {u[i]:.5f}")

# As a standing wave exp(-i omega t) u*, only the phase should move.
state = to_standing_wave(result.u_star, result.omega_star)
dt = 0.25 * grid.dr
for step in (dt, dt / 2):
    d = evolve_nlkg(model, grid, state, step, 20.0)
    print(f"\ndt = {step:.4f}: energy drift {d.energy_drift:.2e}, charge drift {d.charge_drift[0]:.2e}, "
          f"profile drift {d.max_profile_drift:.2e}")
    print(f"  phase at r = {d.r_probe:.3f} after T = 20: {d.phase[-1, 0]:.5f} (expected {-20 * result.omega_star[0]:.5f})")
