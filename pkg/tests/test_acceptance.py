"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line through ``conftest.record`` so the
terminal summary lists every criterion, including ones that fail.
"""

import math
import time

import numpy as np

from conftest import record
from solwave import (
    builtin_model,
    check_assumptions,
    coercivity_audit,
    default_eta,
    energy,
    hylomorphy_table,
    make_grid,
    minimize,
    pohozaev_defect,
    sweep,
    to_standing_wave,
    evolve_nlkg,
    trial_field,
    trial_sigma,
)
from solwave.cli import main
from solwave.functionals import reduced_energy, reduced_energy_and_gradient
from solwave.grid import FieldState, kinetic
from solwave.solver import SolverConfig
from solwave.verify import CoercivitySampling


def test_criterion_01_gradient(coupled):
    t0 = time.perf_counter()
    g = make_grid(3, 20.0, 400)
    u = FieldState(g, np.stack([0.6 * np.exp(-(g.r / 3) ** 2), 0.4 * np.exp(-(g.r / 4) ** 2)]))
    sigma = np.array([20.0, 15.0])
    res = reduced_energy_and_gradient(coupled, g, u, sigma)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        d = rng.standard_normal(u.values.shape) * np.exp(-g.r / 5)
        h = 1e-5
        num = (reduced_energy(coupled, g, u.values + h * d, sigma) - reduced_energy(coupled, g, u.values - h * d, sigma)) / (2 * h)
        ana = float(np.sum(res.gradient.values * g.weights * d))
        worst = max(worst, abs(num - ana) / abs(ana))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 10
    record(1, ok, f"max rel err {worst:.2e} over 20 directions (limit 1e-6), {elapsed:.2f} s")
    assert ok


def test_criterion_02_hylomorphy(scalar):
    t0 = time.perf_counter()
    t = hylomorphy_table(scalar, make_grid(3, 50.0, 5000), [2 / 3], [10, 20, 40])
    elapsed = time.perf_counter() - t0
    decreasing = bool(np.all(np.diff(t.xi_squared) < 0))
    err40 = float(t.errors[-1])
    shrink_ok = bool(np.all(t.shrink >= 1.7))
    ok = decreasing and err40 <= 0.05 and shrink_ok and elapsed < 30
    record(
        2,
        ok,
        f"xi^2 = {', '.join(f'{x:.5f}' for x in t.xi_squared)}; |xi(u_40)^2 - 19/27| = {err40:.4f} (limit 0.05); "
        f"shrink {', '.join(f'{s:.3f}' for s in t.shrink)}; 1/R extrapolation {t.limit:.5f}",
    )
    assert decreasing and shrink_ok
    assert err40 <= 0.05


def test_criterion_03_scalar_solve(scalar, scalar_report, bench_grid, bench_sigma):
    t0 = time.perf_counter()
    r = minimize(scalar, bench_grid, bench_sigma, SolverConfig(grad_tolerance=1e-6),
                 sqrt_2alpha=scalar_report.sqrt_2alpha, z_star=scalar_report.alpha_minimizer)
    elapsed = time.perf_counter() - t0
    poh = pohozaev_defect(scalar, bench_grid, r.u_star, r.omega_star)
    interior_min = float(np.min(r.u_star.values[:, :-1]))
    window = math.sqrt(19 / 27) < r.omega_star[0] < 1.0
    residual_ok = bool(np.all(r.residual_norms <= r.residual_threshold))
    ok = r.converged and residual_ok and window and interior_min > 0 and abs(poh) <= 1e-4 * r.E and elapsed < 60
    record(3, ok, f"omega* = {r.omega_star[0]:.6f}, E* = {r.E:.3f}, |P|/E = {abs(poh) / r.E:.1e}, "
                  f"min u = {interior_min:.2e}, {elapsed:.2f} s")
    assert ok


def test_criterion_04_uncoupled(scalar):
    g = make_grid(3, 30.0, 600)
    cfg = SolverConfig(grad_tolerance=1e-8)
    single = minimize(scalar, g, [300.0], cfg)
    pair = minimize(builtin_model("uncoupled_sum", {"count": 2}), g, [300.0, 300.0], cfg)
    ref = single.u_star.values[0]
    prof = max(math.sqrt(float(np.sum(g.weights * (pair.u_star.values[j] - ref) ** 2) / np.sum(g.weights * ref**2))) for j in range(2))
    freq = float(np.max(np.abs(pair.omega_star - single.omega_star[0]) / single.omega_star[0]))
    ok = single.converged and pair.converged and prof <= 1e-4 and freq <= 1e-5
    record(4, ok, f"profile rel L2 {prof:.1e} (limit 1e-4), frequency rel {freq:.1e} (limit 1e-5)")
    assert ok


def test_criterion_05_coupled_example(coupled):
    rep = check_assumptions(coupled)
    g = make_grid(3, 3000.0, 2000)
    sigma = trial_sigma(coupled, g, trial_field(g, rep.alpha_minimizer, 1200.0, 50.0))
    r = minimize(coupled, g, sigma, SolverConfig(grad_tolerance=1e-6), sqrt_2alpha=rep.sqrt_2alpha, z_star=rep.alpha_minimizer)
    s2a = rep.sqrt_2alpha
    window = bool(np.all((r.omega_star > s2a) & (r.omega_star < 1.0)))
    chain = r.Lambda >= r.xi - 1e-8 and r.xi >= s2a - 1e-8
    ok = rep.a4_holds and r.converged and window and chain
    record(5, ok, f"a4 {rep.a4_holds}, omega* = ({', '.join(f'{w:.7f}' for w in r.omega_star)}) in ({s2a:.7f}, 1), "
                  f"Lambda - xi = {r.Lambda - r.xi:.1e}, xi - sqrt(2 alpha) = {r.xi - s2a:.1e}")
    assert ok


def test_criterion_06_coercivity(scalar, scalar_report, coupled):
    t0 = time.perf_counter()
    g = make_grid(3, 1e6, 4000)
    one = coercivity_audit(scalar, g, CoercivitySampling(), report=scalar_report)
    two = coercivity_audit(builtin_model("coupled_k2", {"p": 1.5, "q": 4.5}), g, CoercivitySampling())
    p2 = coercivity_audit(coupled, g, CoercivitySampling(plateau=50, bumps=10))
    elapsed = time.perf_counter() - t0
    ok = (one.samples_below_threshold >= 100 and two.samples_below_threshold >= 100
          and one.violations == 0 and two.violations == 0 and elapsed < 120)
    record(6, ok, f"k=1: {one.samples_below_threshold} qualifying, {one.violations} violations (eta {one.eta:.3e}); "
                  f"k=2 (p=1.5): {two.samples_below_threshold} qualifying, {two.violations} violations (eta {two.eta:.3e}); "
                  f"k=2 (p=2): {p2.samples_below_threshold} qualifying (eta {p2.eta:.1e}); {elapsed:.1f} s")
    assert ok


def test_criterion_07_sublevel_bounds(coupled):
    g = make_grid(3, 20.0, 400)
    rng = np.random.default_rng(7)
    worst_w, worst_k = math.inf, math.inf
    for _ in range(100):
        amps = rng.uniform(0.05, 1.5, size=2)
        widths = rng.uniform(0.5, 5.0, size=2)
        u = FieldState(g, amps[:, None] * np.exp(-(g.r[None, :] / widths[:, None]) ** 2))
        sigma = rng.uniform(0.1, 100.0, size=2)
        omega = sigma / np.sum(g.weights * u.values**2, axis=1)
        E = energy(coupled, g, u, omega).total
        worst_w = min(worst_w, float(np.min(2 * E / sigma - omega)) / E)
        worst_k = min(worst_k, (2 * E - float(np.sum(kinetic(g, u.values)))) / E)
    ok = worst_w >= -1e-12 and worst_k >= -1e-12
    record(7, ok, f"min relative margins: omega {worst_w:.3e}, ||Du||^2 {worst_k:.3e} (limit -1e-12)")
    assert ok


def test_criterion_08_conservation(scalar, bench_grid, bench_result):
    state = to_standing_wave(bench_result.u_star, bench_result.omega_star)
    dt = 0.25 * bench_grid.dr
    a = evolve_nlkg(scalar, bench_grid, state, dt, 20.0)
    b = evolve_nlkg(scalar, bench_grid, state, dt / 2, 20.0)
    ca, cb = float(np.max(a.charge_drift)), float(np.max(b.charge_drift))
    ratio_e = a.energy_drift / b.energy_drift
    ratio_p = a.max_profile_drift / b.max_profile_drift
    # Verlet conserves the charge exactly; its drift is rounding noise with no dt dependence
    charge_ok = ca <= 1e-12 or ca / cb >= 3.5
    ok = (not a.aborted and a.energy_drift <= 1e-4 and ca <= 1e-4 and a.max_profile_drift <= 1e-2
          and ratio_e >= 3.5 and ratio_p >= 3.5 and charge_ok)
    record(8, ok, f"drift E {a.energy_drift:.1e}, C {ca:.1e}, profile {a.max_profile_drift:.1e}; "
                  f"halving ratios E {ratio_e:.1f}, profile {ratio_p:.1f}, C at rounding floor ({cb:.1e})")
    assert ok


def test_criterion_09_openness(scalar, scalar_report):
    g = make_grid(3, 500.0, 2000)
    sigma = trial_sigma(scalar, g, trial_field(g, [2 / 3], 430.0))
    eta = default_eta(scalar_report)
    rows = sweep(scalar, g, [sigma], SolverConfig(grad_tolerance=1e-6), eta=eta,
                 sqrt_2alpha=scalar_report.sqrt_2alpha, z_star=scalar_report.alpha_minimizer)
    row = rows[0]
    ok = row.in_omega and row.probes_in_omega
    lams = ", ".join(f"{p.Lambda:.6f}" for p in row.probes)
    record(9, ok, f"base Lambda {row.Lambda:.6f} < {scalar_report.sqrt_2alpha + eta:.6f}; probes {lams}")
    assert ok


CRITERION_3_CONFIG = """\
command = solve
seed = 11
model.name = scalar_quartic_quintic
grid.n = 3
grid.r_max = 40
grid.N = 2000
sigma.trial.z = 0.6666666666666666
sigma.trial.R = 12
solver.grad_tolerance = 1e-6
"""


def test_criterion_10_reproducibility(tmp_path):
    cfg = tmp_path / "bench.cfg"
    cfg.write_text(CRITERION_3_CONFIG)
    status = [main(["--config", str(cfg), "--out", str(tmp_path / d)]) for d in ("a", "b")]
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    differing = [n for n in names if n != "manifest.txt" and (tmp_path / "a" / n).read_bytes() != (tmp_path / "b" / n).read_bytes()]
    ok = status == [0, 0] and not differing and names == sorted(p.name for p in (tmp_path / "b").iterdir())
    record(10, ok, f"exit {status}, {len(names) - 1} report files compared, differing: {differing or 'none'}")
    assert ok
