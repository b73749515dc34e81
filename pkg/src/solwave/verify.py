"""Quantitative certificates for computed fields and minimizers.

* trial fields ``u_R`` (plateau plus linear ramp) and the hylomorphy table;
* the default frequency tolerance ``eta`` and the coercivity audit of the
  low-ratio bounds on ``B_j``, the frequency ceiling and the frequency
  deviation;
* the Pohozaev (dilation) defect;
* diagnostics of a solver result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .errors import DomainError, ParameterError
from .functionals import b_values, lambda_ratio, xi
from .grid import FieldState, RadialGrid, as_values, ball_volume, integrate, kinetic
from .model import AssumptionReport, NonlinearityModel

__all__ = [
    "trial_field",
    "trial_sigma",
    "gaussian_bumps",
    "HylomorphyTable",
    "hylomorphy_table",
    "default_eta",
    "coercivity_constants",
    "deviation_bound_single",
    "deviation_bound_multi",
    "CoercivitySampling",
    "CoercivityAudit",
    "coercivity_audit",
    "pohozaev_defect",
    "MinimizerDiagnostics",
    "minimizer_diagnostics",
]


# ---------------------------------------------------------------------------
# trial fields
# ---------------------------------------------------------------------------


def trial_field(grid: RadialGrid, z, R: float, width: float = 1.0) -> FieldState:
    """Plateau ``z`` on ``r <= R``, linear ramp to zero on ``[R, R + width]``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z < 0) or not np.any(z > 0):
        raise DomainError(f"trial amplitude must be nonnegative and nonzero, got {z.tolist()}")
    if not (R >= 0 and width > 0):
        raise DomainError(f"need R >= 0 and width > 0, got R={R}, width={width}")
    if R + width > grid.r_max:
        raise DomainError(f"domain too small: R + width = {R + width} exceeds r_max = {grid.r_max}")
    shape = np.clip(1.0 + (R - grid.r) / width, 0.0, 1.0)
    return FieldState(grid, z[:, None] * shape[None, :])


def gaussian_bumps(grid: RadialGrid, amplitudes, widths) -> FieldState:
    """``u_j = A_j exp(-(r / w_j)^2)``."""
    a = np.atleast_1d(np.asarray(amplitudes, dtype=float))
    w = np.broadcast_to(np.asarray(widths, dtype=float), a.shape)
    if np.any(w <= 0):
        raise DomainError("bump widths must be positive")
    return FieldState(grid, a[:, None] * np.exp(-((grid.r[None, :] / w[:, None]) ** 2)))


def trial_sigma(model: NonlinearityModel, grid: RadialGrid, u) -> np.ndarray:
    """Charges of ``(u, omega(u))``: ``sigma_j = xi(u) b_j(u)``, so that ``Lambda = xi(u)``."""
    x, _ = xi(model, grid, u)
    return x * b_values(grid, u)


class HylomorphyTable(NamedTuple):
    R: np.ndarray
    xi_squared: np.ndarray
    target: float
    limit: float
    errors: np.ndarray
    shrink: np.ndarray

    def to_csv(self) -> str:
        lines = ["R,xi_squared"] + [f"{r!r},{x!r}" for r, x in zip(self.R.tolist(), self.xi_squared.tolist())]
        return "\n".join(lines) + "\n"


def hylomorphy_table(model: NonlinearityModel, grid: RadialGrid, z, R_list) -> HylomorphyTable:
    """``xi(u_R)^2`` along ``R_list`` with the plateau value ``2F(z)/|z|^2`` as target.

    The limit estimate assumes ``xi^2 = L + c/R`` (surface over volume) and
    eliminates ``c`` using the two largest radii.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    R = np.sort(np.asarray(R_list, dtype=float))
    if R.size == 0:
        raise DomainError("R_list is empty")
    vals = np.array([xi(model, grid, trial_field(grid, z, float(r)))[0] ** 2 for r in R])
    target = float(2.0 * model.F(z) / np.dot(z, z))
    if R.size >= 2:
        r1, r2 = R[-2], R[-1]
        limit = float((r2 * vals[-1] - r1 * vals[-2]) / (r2 - r1))
    else:
        limit = float(vals[-1])
    errors = np.abs(vals - target)
    shrink = errors[:-1] / np.where(errors[1:] > 0, errors[1:], np.nan)
    return HylomorphyTable(R, vals, target, limit, errors, shrink)


# ---------------------------------------------------------------------------
# coercivity bounds
# ---------------------------------------------------------------------------


def coercivity_constants(alpha: float, alpha_star: float, eta: float) -> tuple[float, float]:
    """``(delta_0, C_0)``: the lower bound on ``B_j`` and the frequency scale (k >= 2)."""
    s = math.sqrt(2.0 * alpha) + eta
    delta0 = 2.0 * alpha_star / s**2 - 1.0
    c0 = s * (1.0 - delta0) / delta0 if delta0 > 0 else math.inf
    return delta0, c0


def deviation_bound_single(alpha: float, eta: float) -> float:
    """Bound on ``|omega - sqrt(2 alpha)|`` for one component."""
    return math.sqrt(eta) * (math.sqrt(eta) + 2.0 * math.sqrt(math.sqrt(2.0 * alpha) + eta))


def deviation_bound_multi(alpha: float, alpha_star: float, eta: float, k: int) -> float:
    """Bound on ``|omega_j - sqrt(2 alpha)|`` for ``k >= 2`` components."""
    delta0, _ = coercivity_constants(alpha, alpha_star, eta)
    if delta0 <= 0:
        return math.inf
    s = math.sqrt(2.0 * alpha) + eta
    return math.sqrt(eta) * (math.sqrt(eta) + (1.0 - delta0) / delta0 * math.sqrt(2.0 * s * (math.sqrt(k) + 1.0)))


def _eta_ceiling(alpha: float, alpha_star: float) -> float:
    return math.sqrt(2.0 * alpha_star) - math.sqrt(2.0 * alpha)


def default_eta(report: AssumptionReport) -> float:
    """Largest ``eta`` whose deviation bound stays within ``(m - sqrt(2 alpha)) / 2``.

    For ``k >= 2`` the search is restricted to ``eta < sqrt(2 alpha_*) - sqrt(2 alpha)``,
    where the lower bound on ``B_j`` is positive.
    """
    cap = 0.5 * (report.m - report.sqrt_2alpha)
    if not cap > 0:
        raise ParameterError(f"alpha < m^2/2 fails (alpha = {report.alpha!r}); no admissible eta")
    if report.k == 1:
        f = lambda e: deviation_bound_single(report.alpha, e) - cap
        hi = 1.0
        while f(hi) < 0:
            hi *= 2.0
        return optimize.brentq(f, 0.0, hi, xtol=1e-300, rtol=1e-15)
    top = _eta_ceiling(report.alpha, report.alpha_star)
    if not top > 0:
        raise ParameterError("alpha_j > alpha fails for some j; no admissible eta")
    f = lambda e: deviation_bound_multi(report.alpha, report.alpha_star, e, report.k) - cap
    hi = top * (1.0 - 1e-12)
    if f(hi) <= 0:
        return hi
    return optimize.brentq(f, 0.0, hi, xtol=1e-300, rtol=1e-15)


@dataclass(frozen=True)
class CoercivitySampling:
    """Sample counts for :func:`coercivity_audit`.

    ``plateau`` samples are step or ramp profiles with amplitude near the
    alpha-minimizer and radius comparable to ``r_max``; on a coarse grid they
    reach ratios just above ``sqrt(2 alpha)``.  ``bumps`` are Gaussian
    mixtures, which rarely fall below the threshold.  Frequencies are drawn
    near ``xi(u)`` with relative spread ``~ sqrt(eta)`` (``near``) or
    uniformly on ``(0, omega_cap]`` (``uniform``).
    """

    plateau: int = 400
    bumps: int = 100
    seed: int = 0
    uniform_fraction: float = 0.25


@dataclass(frozen=True)
class CoercivityAudit:
    eta: float
    alpha: float
    alpha_star: float
    delta_0: float
    C_0: float
    omega_cap: float
    provable_b_floor: float
    samples_tested: int
    samples_below_threshold: int
    violations: int
    b_window_violations: int
    provable_b_violations: int
    omega_bound_violations: int
    deviation_violations: int
    worst_margin: float
    first_violation: str | None = None
    ratio_floor_violations: int = 0

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _audit_thresholds(model: NonlinearityModel, report: AssumptionReport, eta: float):
    s = report.sqrt_2alpha + eta
    if model.k == 1:
        return math.nan, math.inf, 2.0 * s, 4.0 * s, deviation_bound_single(report.alpha, eta), math.nan
    top = _eta_ceiling(report.alpha, report.alpha_star)
    if not eta < top:
        raise ParameterError(
            f"eta = {eta!r} violates eta < sqrt(2 alpha_*) - sqrt(2 alpha) = {top!r}; the B_j lower bound is not positive"
        )
    delta0, c0 = coercivity_constants(report.alpha, report.alpha_star, eta)
    omega_max = c0 * (1.0 + math.sqrt(model.k))
    floor = 1.0 - s**2 / (2.0 * report.alpha_star)
    return delta0, c0, omega_max, 2.0 * omega_max, deviation_bound_multi(report.alpha, report.alpha_star, eta, model.k), floor


def _plateau_sample(grid, z_star, rng, spread):
    k = z_star.size
    direction = z_star * np.exp(rng.normal(0.0, 0.5 * spread, size=k))
    amp = direction * (1.0 + rng.normal(0.0, spread))
    R = grid.r_max * rng.uniform(0.5, 0.95)
    width = grid.dr * (rng.choice([0.5, 1.0]) if rng.random() < 0.7 else rng.uniform(1.0, 20.0))
    return trial_field(grid, np.abs(amp), R, width)


def _bump_sample(grid, z_star, rng):
    k = z_star.size
    terms = rng.integers(1, 4)
    v = np.zeros((k, grid.N))
    for _ in range(terms):
        amp = np.abs(z_star) * rng.uniform(0.2, 2.0, size=k) + 1e-3
        width = grid.r_max * rng.uniform(0.05, 0.5)
        centre = grid.r_max * rng.uniform(0.0, 0.4)
        v += amp[:, None] * np.exp(-(((grid.r - centre) / width) ** 2))[None, :]
    return FieldState(grid, v)


def coercivity_audit(
    model: NonlinearityModel,
    grid: RadialGrid,
    sample_config: CoercivitySampling | None,
    eta: float | None = None,
    report: AssumptionReport | None = None,
) -> CoercivityAudit:
    """Check the low-ratio implications on random fields and frequencies.

    For every sample with ``Lambda(u, omega) < sqrt(2 alpha) + eta`` this
    asserts: ``B_j(u)`` in ``(delta_0, 1 - delta_0)`` when ``k >= 2``; the
    frequency ceiling (``C_0 (1 + sqrt k)``, or ``2 (sqrt(2 alpha) + eta)``
    for one component); and the closed-form frequency deviation bound.
    The provable lower bound ``1 - (sqrt(2 alpha) + eta)^2 / (2 alpha_*)``
    on ``B_j`` is counted separately.  Sample ``i`` uses the generator
    seeded with ``(seed, i)``, so results do not depend on scheduling.
    """
    from .model import check_assumptions

    cfg = sample_config or CoercivitySampling()
    report = report or check_assumptions(model)
    if not report.a3_holds:
        raise ParameterError("alpha < m^2/2 fails; the low-ratio frequency bounds do not apply")
    eta = default_eta(report) if eta is None else float(eta)
    if not eta > 0:
        raise ParameterError(f"eta must be positive, got {eta!r}")
    delta0, c0, omega_max, omega_cap, dev_bound, floor = _audit_thresholds(model, report, eta)
    threshold = report.sqrt_2alpha + eta
    z_star = np.asarray(report.alpha_minimizer, dtype=float)
    if not np.all(z_star > 0):
        z_star = np.full(model.k, float(np.max(z_star)))

    spread = min(0.03, 0.5 * math.sqrt(eta))
    below = 0
    counts = dict(b=0, floor=0, omega=0, dev=0, ratio=0)
    first = None
    worst = math.inf
    total = cfg.plateau + cfg.bumps
    for i in range(total):
        rng = np.random.default_rng([cfg.seed, i])
        u = _plateau_sample(grid, z_star, rng, spread) if i < cfg.plateau else _bump_sample(grid, z_star, rng)
        x, _ = xi(model, grid, u)
        if rng.random() < cfg.uniform_fraction:
            omega = rng.uniform(0.0, 1.0, size=model.k) * omega_cap
            omega[omega == 0.0] = omega_cap
        else:
            omega = x * (1.0 + math.sqrt(eta) * rng.normal(0.0, 1.0, size=model.k))
            omega = np.abs(omega)
        lam = lambda_ratio(model, grid, u, omega)
        if not lam >= x * (1.0 - 1e-12) or not x * x >= 2.0 * report.alpha * (1.0 - 1e-12):
            counts["ratio"] += 1
            first = first or f"Lambda >= xi >= sqrt(2 alpha) violated at sample {i}"
        if not lam < threshold:
            continue
        below += 1
        margins = []
        if model.k >= 2:
            B = b_values(grid, u) / float(np.sum(b_values(grid, u)))
            mb = min(float(np.min(B - delta0)), float(np.min(1.0 - delta0 - B))) / delta0
            margins.append(mb)
            if mb <= 0:
                counts["b"] += 1
                first = first or f"B_j window (delta_0, 1 - delta_0) violated at sample {i}"
            if np.any(B <= floor):
                counts["floor"] += 1
        mo = float(np.min(omega_max - omega)) / omega_max
        margins.append(mo)
        if mo <= 0:
            counts["omega"] += 1
            first = first or f"frequency ceiling violated at sample {i}"
        md = float(dev_bound - np.max(np.abs(omega - report.sqrt_2alpha))) / dev_bound
        margins.append(md)
        if md <= 0:
            counts["dev"] += 1
            first = first or f"frequency deviation bound violated at sample {i}"
        worst = min(worst, min(margins))

    violations = counts["b"] + counts["omega"] + counts["dev"] + counts["ratio"]
    return CoercivityAudit(
        eta=eta,
        alpha=report.alpha,
        alpha_star=report.alpha_star,
        delta_0=delta0,
        C_0=c0,
        omega_cap=omega_cap,
        provable_b_floor=floor,
        samples_tested=total,
        samples_below_threshold=below,
        violations=violations,
        b_window_violations=counts["b"],
        provable_b_violations=counts["floor"],
        omega_bound_violations=counts["omega"],
        deviation_violations=counts["dev"],
        worst_margin=worst if below else math.nan,
        first_violation=first,
        ratio_floor_violations=counts["ratio"],
    )


# ---------------------------------------------------------------------------
# stationarity certificates
# ---------------------------------------------------------------------------


def pohozaev_defect(model: NonlinearityModel, grid: RadialGrid, u, omega) -> float:
    """``(n-2)/2 ||Du||^2 + n int (F(u) - 1/2 sum_j omega_j^2 u_j^2)``; vanishes on solutions."""
    v = as_values(grid, u)
    w = np.asarray(omega, dtype=float)
    if w.shape != (v.shape[0],):
        raise ParameterError(f"expected {v.shape[0]} frequencies, got shape {w.shape}")
    n = grid.n
    kin = float(np.sum(kinetic(grid, v)))
    integrand = model.F(v.T) - 0.5 * np.sum((w * w)[:, None] * v * v, axis=0)
    return 0.5 * (n - 2) * kin + n * float(integrate(grid, integrand))


@dataclass(frozen=True)
class MinimizerDiagnostics:
    positivity: bool
    frequency_window: bool
    lambda_below: bool
    xi_above: bool
    component_windows: tuple[bool, ...]
    lower_margins: tuple[float, ...]
    upper_margins: tuple[float, ...]
    component_upper_margins: tuple[float, ...]
    lambda_margin: float
    xi_margin: float
    min_interior_value: float
    eta: float
    extras: dict = field(default_factory=dict)

    @property
    def all_true(self) -> bool:
        return self.positivity and self.frequency_window and self.lambda_below and self.xi_above


def minimizer_diagnostics(result, report: AssumptionReport, eta: float | None = None, rtol: float = 1e-8) -> MinimizerDiagnostics:
    """Positivity, frequency window, low ratio and ``xi >= sqrt(2 alpha)`` for a solver result.

    ``component_windows[j]`` is ``sqrt(2 alpha) < omega_j < m_j``, the window
    relevant when components decouple.
    """
    eta = default_eta(report) if eta is None else float(eta)
    s2a = report.sqrt_2alpha
    u = result.u_star.values
    masses = np.asarray(result.masses, dtype=float)
    w = np.asarray(result.omega_star, dtype=float)
    interior = u[:, :-1]
    min_val = float(np.min(interior))
    lower = tuple(float(x) for x in w - s2a)
    upper = tuple(float(x) for x in report.m - w)
    comp_upper = tuple(float(x) for x in masses - w)
    return MinimizerDiagnostics(
        positivity=bool(min_val > 0.0),
        frequency_window=bool(all(a > 0 for a in lower) and all(b > 0 for b in upper)),
        lambda_below=bool(result.Lambda < s2a + eta),
        xi_above=bool(result.xi >= s2a * (1.0 - rtol)),
        component_windows=tuple(bool(a > 0 and b > 0) for a, b in zip(lower, comp_upper)),
        lower_margins=lower,
        upper_margins=upper,
        component_upper_margins=comp_upper,
        lambda_margin=float(s2a + eta - result.Lambda),
        xi_margin=float(result.xi - s2a),
        min_interior_value=min_val,
        eta=eta,
    )


def low_ratio_radius(model: NonlinearityModel, z, omega_target: float, sigma_total: float, n: int) -> float:
    """Plateau radius whose trial field holds ``sigma_total`` at frequency ``omega_target``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return (sigma_total / (omega_target * ball_volume(n) * float(np.dot(z, z)))) ** (1.0 / n)
