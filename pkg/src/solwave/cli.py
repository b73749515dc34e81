"""Batch command line front end.

    solwave --config run.cfg --out runs/a [--seed 7] [--threads 4]

Exit status: 0 when every asserted check passed, 1 when a check failed
(the failing bound is named on stderr and in ``summary.txt``), 2 for
configuration or parameter errors.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigurationError, DegenerateComponentError, DomainError, ParameterError, ShapeError, StabilityError
from .evolve import evolve_nlkg, to_standing_wave
from .grid import make_grid, write_profile
from .model import AlphaSearch, SamplingConfig, builtin_model, check_assumptions
from .reports import format_record, record_of, summary_value, sweep_csv
from .solver import InitialGuess, SolverConfig, minimize, sweep
from .verify import (
    CoercivitySampling,
    coercivity_audit,
    default_eta,
    hylomorphy_table,
    minimizer_diagnostics,
    pohozaev_defect,
    trial_field,
    trial_sigma,
)

__all__ = ["main", "execute"]

_USAGE_ERRORS = (ConfigurationError, ParameterError, DomainError, ShapeError, StabilityError)


class _Run:
    """Accumulates files, summary lines and failed checks for one command."""

    def __init__(self, out: Path):
        self.out = out
        self.failures: list[str] = []
        self.summary: list[tuple[str, object]] = []

    def write(self, name: str, text: str):
        (self.out / name).write_text(text)

    def check(self, ok: bool, message: str):
        if not ok:
            self.failures.append(message)

    def note(self, key, value):
        self.summary.append((key, value))


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _model(cfg: RunConfig):
    params = cfg.section("model")
    name = params.pop("name", None)
    if name is None:
        raise ConfigurationError(f"{cfg.source}: missing required field 'model.name'")
    for key in ("masses",):
        if key in params and not isinstance(params[key], list):
            params[key] = [float(params[key])]
    return builtin_model(str(name), params)


def _grid(cfg: RunConfig):
    try:
        n, r_max, N = int(cfg.require("grid.n")), float(cfg.require("grid.r_max")), int(cfg.require("grid.N"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"{cfg.source}: grid fields must be numbers ({exc})") from None
    try:
        return make_grid(n, r_max, N)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{cfg.source}: {exc}") from None


def _vector(value, k, what, cfg):
    v = np.atleast_1d(np.asarray(value, dtype=float))
    if v.shape != (k,):
        raise ConfigurationError(f"{cfg.where(what)}: {what} needs {k} values, got {v.size}")
    return v


def _sigma(cfg: RunConfig, model, grid, report):
    if "sigma" in cfg.entries:
        s = _vector(cfg.entries["sigma"], model.k, "sigma", cfg)
        if np.any(s <= 0):
            raise ConfigurationError(f"{cfg.where('sigma')}: charges must be positive")
        return s
    trial = cfg.section("sigma.trial")
    if not trial:
        raise ConfigurationError(f"{cfg.source}: give either 'sigma' or 'sigma.trial.R'")
    z = _vector(trial["z"], model.k, "sigma.trial.z", cfg) if "z" in trial else np.asarray(report.alpha_minimizer)
    if "R" not in trial:
        raise ConfigurationError(f"{cfg.source}: missing required field 'sigma.trial.R'")
    u = trial_field(grid, z, float(trial["R"]), float(trial.get("width", 1.0)))
    return trial_sigma(model, grid, u)


def _solver_config(cfg: RunConfig, seed: int, model) -> SolverConfig:
    s = cfg.section("solver")
    guess = {k[len("initial_guess."):]: v for k, v in s.items() if k.startswith("initial_guess.")}
    for key in ("amplitudes", "widths", "z"):
        if key in guess:
            guess[key] = tuple(np.atleast_1d(np.asarray(guess[key], dtype=float)).tolist())
    if "path" in guess:
        guess["path"] = str(guess["path"])
        if not Path(guess["path"]).is_file():
            raise ConfigurationError(f"{cfg.where('solver.initial_guess.path')}: file {guess['path']!r} does not exist")
    kwargs = {k: v for k, v in s.items() if not k.startswith("initial_guess.")}
    ints = ("max_iterations", "restarts", "polish_iterations")
    for key in ints:
        if key in kwargs:
            kwargs[key] = int(kwargs[key])
    return SolverConfig(initial_guess=InitialGuess(**guess), seed=seed, **kwargs)


def _report(cfg: RunConfig, model, seed, grid=None):
    a = cfg.section("audit")
    n = grid.n if grid is not None else int(cfg.get("grid.n", 3))
    z_cap = float(a.get("z_cap", 10.0))
    sampling = SamplingConfig(samples=int(a.get("samples", 10_000)), z_cap=z_cap, seed=seed, n=n, search=AlphaSearch(z_cap=z_cap))
    return check_assumptions(model, sampling)


def _eta(cfg: RunConfig, report):
    if "audit.eta" in cfg.entries:
        eta = float(cfg.entries["audit.eta"])
        if not eta > 0:
            raise ConfigurationError(f"{cfg.where('audit.eta')}: eta must be positive")
        return eta
    return default_eta(report)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _check_model(cfg, run: _Run, seed, threads):
    model = _model(cfg)
    rep = _report(cfg, model, seed)
    run.write("assumption_report.txt", format_record(record_of(rep) + [("sqrt_2alpha", rep.sqrt_2alpha)]))
    names = {
        "a0_holds": "G(z) = G(|z_1|, ..., |z_k|)",
        "a1_holds": "G(0) = 0 and F >= 0",
        "a2_holds": "|DG(z)| <= c (|z|^(p-1) + |z|^(q-1)) with q < 2n/(n-2)",
        "a3_holds": "alpha < m^2/2",
        "a4_holds": "alpha_j > alpha for every j",
    }
    for key, text in names.items():
        run.check(getattr(rep, key), f"{text} fails ({key} = false)")
    run.check(not rep.inconclusive, "alpha search hit the box boundary; infimum inconclusive")
    for key in ("alpha", "alpha_j", "alpha_star", "a0_holds", "a1_holds", "a2_holds", "a3_holds", "a4_holds"):
        run.note(key, getattr(rep, key))
    return rep


def _solve(cfg, run: _Run, seed, threads, write=True):
    model = _model(cfg)
    grid = _grid(cfg)
    rep = _report(cfg, model, seed, grid)
    eta = _eta(cfg, rep)
    sigma = _sigma(cfg, model, grid, rep)
    scfg = _solver_config(cfg, seed, model)
    res = minimize(model, grid, sigma, scfg, sqrt_2alpha=rep.sqrt_2alpha, z_star=rep.alpha_minimizer)
    diag = minimizer_diagnostics(res, rep, eta)
    poh = pohozaev_defect(model, grid, res.u_star, res.omega_star)
    if write:
        run.write("solver_result.txt", format_record(record_of(res, skip=("trace",)) + [("pohozaev_defect", poh), ("eta", eta)]))
        run.write("diagnostics.txt", format_record(record_of(diag)))
        run.write("trace.csv", res.trace_csv())
        write_profile(run.out / "profile.csv", res.u_star)
    run.check(res.converged, f"solver did not converge ({res.message}); residual {float(np.max(res.residual_norms))!r} > {res.residual_threshold!r}")
    run.check(diag.positivity, f"positivity fails: min interior value {diag.min_interior_value!r}")
    for j, (lo, hi) in enumerate(zip(diag.lower_margins, diag.upper_margins), start=1):
        run.check(lo > 0, f"frequency window sqrt(2 alpha) < omega_{j} fails by {lo!r}")
        run.check(hi > 0, f"frequency window omega_{j} < m fails by {hi!r}")
    run.check(diag.xi_above, f"xi(u) >= sqrt(2 alpha) fails by {diag.xi_margin!r}")
    run.check(res.Lambda >= res.xi * (1 - 1e-12), "Lambda(u, omega) >= xi(u) fails")
    cerr = float(np.max(np.abs(res.charges - sigma) / sigma))
    run.check(cerr <= 1e-10, f"charge constraint C_j = sigma_j off by {cerr!r} relative")
    run.check(abs(poh) <= 1e-4 * abs(res.E), f"Pohozaev defect {poh!r} exceeds 1e-4 |E|")
    for key, value in (
        ("converged", res.converged),
        ("iterations", res.iterations),
        ("E", res.E),
        ("Lambda", res.Lambda),
        ("xi", res.xi),
        ("omega", res.omega_star),
        ("sqrt_2alpha", rep.sqrt_2alpha),
        ("eta", eta),
        ("low_ratio (Lambda < sqrt(2 alpha) + eta)", diag.lambda_below),
        ("pohozaev_defect", poh),
    ):
        run.note(key, value)
    return model, grid, rep, res


def _sweep(cfg, run: _Run, seed, threads):
    model = _model(cfg)
    grid = _grid(cfg)
    rep = _report(cfg, model, seed, grid)
    eta = _eta(cfg, rep)
    if "sweep.sigma_set" in cfg.entries:
        raw = cfg.entries["sweep.sigma_set"]
        items = raw if isinstance(raw, list) and raw and isinstance(raw[0], list) else [raw]
        if model.k == 1 and isinstance(raw, list) and raw and not isinstance(raw[0], list):
            items = [[x] for x in raw]
        sigmas = [_vector(s, model.k, "sweep.sigma_set", cfg) for s in items]
    else:
        base = _sigma(cfg, model, grid, rep)
        scales = np.atleast_1d(np.asarray(cfg.get("sweep.scale", 1.0), dtype=float))
        sigmas = [base * s for s in scales]
    scfg = _solver_config(cfg, seed, model)
    rows = sweep(
        model,
        grid,
        sigmas,
        scfg,
        eta=eta,
        sqrt_2alpha=rep.sqrt_2alpha,
        z_star=rep.alpha_minimizer,
        probe=bool(cfg.get("sweep.probe", True)),
        probe_step=float(cfg.get("sweep.probe_step", 0.01)),
        workers=threads,
    )
    run.write("sweep.csv", sweep_csv(rows))
    members = [i for i, r in enumerate(rows) if r.in_omega]
    for i in members:
        run.check(rows[i].probes_in_omega or not rows[i].probes, f"openness probe left Lambda < sqrt(2 alpha) + eta at sweep row {i}")
    run.write(
        "sweep_report.txt",
        format_record([("rows", len(rows)), ("in_omega", len(members)), ("eta", eta), ("sqrt_2alpha", rep.sqrt_2alpha)]),
    )
    run.note("rows", len(rows))
    run.note("in_omega", len(members))
    run.note("probes_in_omega", all(rows[i].probes_in_omega for i in members) if members else False)


def _hylomorphy(cfg, run: _Run, seed, threads):
    model = _model(cfg)
    grid = _grid(cfg)
    rep = _report(cfg, model, seed, grid)
    z = _vector(cfg.get("hylomorphy.z", list(rep.alpha_minimizer)), model.k, "hylomorphy.z", cfg)
    R = np.atleast_1d(np.asarray(cfg.require("hylomorphy.R_list"), dtype=float))
    tab = hylomorphy_table(model, grid, z, R)
    run.write("hylomorphy.csv", tab.to_csv())
    run.write(
        "hylomorphy_report.txt",
        format_record([("target", tab.target), ("limit", tab.limit), ("two_alpha", 2 * rep.alpha), ("errors", tab.errors), ("shrink", tab.shrink)]),
    )
    for r, x in zip(tab.R, tab.xi_squared):
        run.check(x >= 2 * rep.alpha * (1 - 1e-12), f"xi(u_R)^2 >= 2 alpha fails at R = {r!r}")
    run.note("target", tab.target)
    run.note("limit", tab.limit)
    run.note("xi_squared", tab.xi_squared)


def _coercivity(cfg, run: _Run, seed, threads):
    model = _model(cfg)
    grid = _grid(cfg)
    rep = _report(cfg, model, seed, grid)
    a = cfg.section("audit")
    sampling = CoercivitySampling(
        plateau=int(a.get("plateau", 300)),
        bumps=int(a.get("bumps", 100)),
        seed=seed,
        uniform_fraction=float(a.get("uniform_fraction", 0.25)),
    )
    audit = coercivity_audit(model, grid, sampling, _eta(cfg, rep), rep)
    run.write("coercivity_audit.txt", format_record(record_of(audit)))
    run.check(audit.violations == 0, f"{audit.first_violation} ({audit.violations} violations)")
    need = int(a.get("min_qualifying", 0))
    run.check(audit.samples_below_threshold >= need, f"only {audit.samples_below_threshold} low-ratio samples, {need} required")
    for key in ("eta", "delta_0", "C_0", "samples_tested", "samples_below_threshold", "violations", "provable_b_violations", "worst_margin"):
        run.note(key, getattr(audit, key))


def _evolve(cfg, run: _Run, seed, threads):
    model, grid, rep, res = _solve(cfg, run, seed, threads)
    e = cfg.section("evolve")
    dt = float(e["dt"]) if "dt" in e else float(e.get("dt_fraction", 0.25)) * grid.dr
    T = float(e.get("T", 20.0))
    cfl = float(e.get("cfl", 0.5))
    stride = int(e["stride"]) if "stride" in e else None
    r_probe = float(e["r_probe"]) if "r_probe" in e else None
    state = to_standing_wave(res.u_star, res.omega_star)
    d = evolve_nlkg(model, grid, state, dt, T, stride=stride, cfl=cfl, r_probe=r_probe)
    run.write("evolution.csv", d.to_csv())
    rec = [("dt", dt), ("T", T), ("steps", d.steps), ("aborted", d.aborted), ("blowup_step", d.blowup_step),
           ("energy_drift", d.energy_drift), ("charge_drift", d.charge_drift), ("profile_drift", d.max_profile_drift)]
    if e.get("compare_halved", False):
        h = evolve_nlkg(model, grid, state, dt / 2, T, stride=None if stride is None else 2 * stride, cfl=cfl, r_probe=r_probe)
        rec += [("energy_drift_halved", h.energy_drift), ("charge_drift_halved", h.charge_drift), ("profile_drift_halved", h.max_profile_drift)]
    run.write("evolution_report.txt", format_record(rec))
    run.check(not d.aborted, f"evolution unstable: energy changed by more than 10% at step {d.blowup_step}")
    lim_e = float(e.get("max_energy_drift", 1e-4))
    lim_c = float(e.get("max_charge_drift", 1e-4))
    lim_p = float(e.get("max_profile_drift", 1e-2))
    run.check(d.energy_drift <= lim_e, f"energy drift {d.energy_drift!r} exceeds {lim_e!r}")
    run.check(float(np.max(d.charge_drift)) <= lim_c, f"charge drift {float(np.max(d.charge_drift))!r} exceeds {lim_c!r}")
    run.check(d.max_profile_drift <= lim_p, f"profile drift {d.max_profile_drift!r} exceeds {lim_p!r}")
    for key, value in rec[5:]:
        run.note(key, value)


_COMMANDS = {
    "check-model": _check_model,
    "solve": _solve,
    "sweep": _sweep,
    "hylomorphy": _hylomorphy,
    "coercivity": _coercivity,
    "evolve": _evolve,
}


def _manifest(cfg: RunConfig, seed: int, threads: int) -> str:
    head = format_record(
        [
            ("tool", "solwave"),
            ("version", __version__),
            ("command", cfg.command),
            ("seed", seed),
            ("threads", threads),
            ("config_source", cfg.source),
            ("created_utc", _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")),
        ]
    )
    echo = "".join(f"config.{k} = {cfg.text.splitlines()[cfg.lines[k] - 1].split('=', 1)[1].split('#', 1)[0].strip()}\n" for k in cfg.entries)
    return head + echo


def execute(cfg: RunConfig, out, seed: int | None = None, threads: int = 1) -> int:
    """Run one configured command, writing into ``out``; returns the exit status."""
    seed = int(cfg.get("seed", 0)) if seed is None else int(seed)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    run = _Run(out)
    run.write("manifest.txt", _manifest(cfg, seed, threads))
    try:
        _COMMANDS[cfg.command](cfg, run, seed, threads)
    except DegenerateComponentError as exc:
        run.failures.append(f"degenerate component: {exc}")
    status = 1 if run.failures else 0
    lines = [f"command: {cfg.command}", f"status: {'pass' if status == 0 else 'fail'}"]
    lines += [f"{k}: {summary_value(v)}" for k, v in run.summary]
    lines += [f"failed: {msg}" for msg in run.failures]
    run.write("summary.txt", "\n".join(lines) + "\n")
    return status


def _threads(arg) -> int:
    raw = arg if arg is not None else os.environ.get("SOLWAVE_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"threads must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigurationError(f"threads must be a positive integer, got {raw!r}")
    return value


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="solwave", description="Constrained minimizers of radial Klein-Gordon systems.")
    parser.add_argument("--config", required=True, help="run configuration file")
    parser.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    parser.add_argument("--out", default="run", help="run directory")
    parser.add_argument("--threads", default=None, help="worker threads (fallback: SOLWAVE_THREADS)")
    args = parser.parse_args(argv)
    try:
        threads = _threads(args.threads)
        cfg = load_config(args.config)
        status = execute(cfg, args.out, args.seed, threads)
    except _USAGE_ERRORS as exc:
        print(f"solwave: error: {exc}", file=sys.stderr)
        return 2
    summary = Path(args.out) / "summary.txt"
    text = summary.read_text()
    sys.stdout.write(text)
    if status:
        for line in text.splitlines():
            if line.startswith("failed: "):
                print(f"solwave: {line}", file=sys.stderr)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
