"""Two interacting components.

With G(z) = -z1^p z2^p + |z|^q the cross term lowers the ratio floor alpha
only when both components are present, which is what keeps a minimizer
from shedding one of them.  We compare the floors, solve the p = 2 example,
whose frequency window is only 8e-5 wide, and audit the bounds that tie low
ratios to frequencies near sqrt(2 alpha).
"""

import numpy as np

from solwave import builtin_model, check_assumptions, coercivity_audit, make_grid, minimize, trial_field, trial_sigma
from solwave.solver import SolverConfig
from solwave.verify import CoercivitySampling

for p in (2.0, 1.5, 1.2):
    rep = check_assumptions(builtin_model("coupled_k2", {"p": p, "q": 4.5}))
    print(f"p = {p}: alpha = {rep.alpha:.5f}, single-component floors alpha_j = {np.round(rep.alpha_j, 5).tolist()}, "
          f"all assumptions: {rep.a0_holds and rep.a1_holds and rep.a2_holds and rep.a3_holds and rep.a4_holds}")

model = builtin_model("coupled_k2", {"p": 2.0, "q": 4.5})
rep = check_assumptions(model)
print(f"\np = 2 window: ({rep.sqrt_2alpha:.7f}, 1)")

# z* is tiny (about 0.028), so the plateau must be huge to beat the ramp cost.
grid = make_grid(3, 3000.0, 2000)
sigma = trial_sigma(model, grid, trial_field(grid, rep.alpha_minimizer, 1200.0, 50.0))
res = minimize(model, grid, sigma, SolverConfig(grad_tolerance=1e-6), sqrt_2alpha=rep.sqrt_2alpha, z_star=rep.alpha_minimizer)
print(f"converged: {res.converged}, omega* = {res.omega_star.round(7).tolist()}")
print(f"Lambda - xi = {res.Lambda - res.xi:.2e}, xi - sqrt(2 alpha) = {res.xi - rep.sqrt_2alpha:.2e}")

# The bounds are only checkable when eta is resolvable in double precision;
# p = 1.5 has a usable eta, p = 2 does not.
audit_grid = make_grid(3, 1e6, 4000)
for p in (1.5, 2.0):
    m = builtin_model("coupled_k2", {"p": p, "q": 4.5})
    a = coercivity_audit(m, audit_grid, CoercivitySampling())
    print(f"\naudit p = {p}: eta = {a.eta:.2e}, delta_0 = {a.delta_0:.4f}")
    print(f"  {a.samples_below_threshold} of {a.samples_tested} samples below the threshold, {a.violations} violations")
