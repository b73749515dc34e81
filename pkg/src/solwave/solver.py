"""Minimization of the reduced energy over discretized radial fields.

The default method is a regularized Newton iteration: each step solves

    (H + tau P) d = -g,        P = L + W  (discrete H^1 Gram matrix)

where ``H`` is the exact Hessian of the reduced energy (banded part from the
stiffness matrix and the node-local second derivatives of G, plus a rank-k
term from the charge constraint, handled by the Woodbury identity).  The
shift ``tau`` shrinks after full steps and grows after rejected ones; when it
grows past ``tau_max`` the step falls back to the H^1 (Sobolev) gradient.
Every accepted step satisfies the Armijo condition, so the energy trace is
monotone.  ``method="sobolev-gd"`` runs the preconditioned gradient descent
alone, with Barzilai-Borwein initial steps.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.linalg import solveh_banded
from scipy.sparse.linalg import splu

from .errors import ConfigurationError, DegenerateComponentError, DomainError, ShapeError
from .functionals import (
    b_values,
    charges,
    default_b_floor,
    elliptic_operator,
    energy,
    lambda_ratio,
    reduced_energy,
    reduced_energy_and_gradient,
    xi,
)
from .grid import FieldState, RadialGrid, as_values, integrate, kinetic, read_profile, stiffness_banded, stiffness_matrix
from .model import NonlinearityModel, estimate_alpha
from .verify import gaussian_bumps, low_ratio_radius, trial_field

__all__ = [
    "InitialGuess",
    "SolverConfig",
    "SolverResult",
    "SweepRow",
    "minimize",
    "residual_elliptic",
    "sweep",
]


@dataclass(frozen=True)
class InitialGuess:
    """Starting profile.

    ``kind`` is ``"gaussian"`` (amplitudes, widths), ``"trial"`` (z, R,
    width) or ``"file"`` (path).  Unset amplitudes default to the
    alpha-minimizer; unset widths or radii are chosen so that the implied
    frequency is near the middle of ``(sqrt(2 alpha), m)``.
    """

    kind: str = "gaussian"
    amplitudes: tuple[float, ...] | None = None
    widths: tuple[float, ...] | None = None
    z: tuple[float, ...] | None = None
    R: float | None = None
    width: float = 1.0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "trial", "file"):
            raise ConfigurationError(f"initial_guess.kind must be gaussian, trial or file, got {self.kind!r}")
        if self.kind == "file" and not self.path:
            raise ConfigurationError("initial_guess.path is required for kind = file")


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 500
    grad_tolerance: float = 1e-8
    armijo_c: float = 1e-4
    method: str = "newton"
    initial_guess: InitialGuess = field(default_factory=InitialGuess)
    b_floor: float | None = None
    seed: int = 0
    restarts: int = 3
    restart_noise: float = 0.05
    polish_iterations: int = 10
    tau_initial: float = 1e-2
    tau_max: float = 1e8
    max_backtracks: int = 40

    def __post_init__(self):
        if not (0.0 < self.armijo_c < 1.0):
            raise ConfigurationError(f"solver.armijo_c must lie in (0, 1), got {self.armijo_c}")
        if not self.grad_tolerance > 0:
            raise ConfigurationError(f"solver.grad_tolerance must be positive, got {self.grad_tolerance}")
        if self.max_iterations < 1 or self.restarts < 1:
            raise ConfigurationError("solver.max_iterations and solver.restarts must be >= 1")
        if self.method not in ("newton", "sobolev-gd"):
            raise ConfigurationError(f"solver.method must be newton or sobolev-gd, got {self.method!r}")
        if self.b_floor is not None and not self.b_floor > 0:
            raise ConfigurationError("solver.b_floor must be positive")


@dataclass(frozen=True)
class SolverResult:
    u_star: FieldState
    omega_star: np.ndarray
    E: float
    Lambda: float
    xi: float
    charges: np.ndarray
    sigma: np.ndarray
    residual_norms: np.ndarray
    residual_threshold: float
    iterations: int
    converged: bool
    positivity: bool
    frequency_window: bool
    sqrt_2alpha: float
    masses: tuple[float, ...]
    trace: tuple[tuple[int, float, float], ...]
    restart: int = 0
    message: str = ""

    def trace_csv(self) -> str:
        rows = ["iter,E_red,grad_norm"] + [f"{i},{e!r},{g!r}" for i, e, g in self.trace]
        return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


class _Gram:
    """Factorized ``L + W`` for dual (H^-1) norms and Sobolev gradients."""

    def __init__(self, grid: RadialGrid):
        ab = stiffness_banded(grid).copy()
        ab[1] += grid.weights
        self.ab = ab
        self.w = grid.weights

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return solveh_banded(self.ab, rhs.T, lower=False).T

    def dual_norms(self, rho: np.ndarray) -> np.ndarray:
        wr = rho * self.w
        return np.sqrt(np.maximum(np.sum(wr * self.solve(wr), axis=-1), 0.0))


def _h1_norm(grid: RadialGrid, v: np.ndarray) -> float:
    return math.sqrt(float(np.sum(integrate(grid, v * v)) + np.sum(kinetic(grid, v))))


def residual_elliptic(model: NonlinearityModel, grid: RadialGrid, u, omega, norm: str = "l2") -> np.ndarray:
    """Per-component norm of ``-Lap u_j + (m_j^2 - omega_j^2) u_j + d_j G(u)``.

    ``norm="l2"`` is the quadrature L2 norm; ``norm="dual"`` the discrete
    H^-1 norm ``sqrt(rho^T W (L + W)^-1 W rho)``, which equals the H^1 norm of
    the Sobolev gradient.
    """
    v = as_values(grid, u)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if v.shape[0] != model.k or w.shape != (model.k,):
        raise ShapeError(f"expected {model.k} components and frequencies")
    rho = elliptic_operator(model, grid, v, w)
    if norm == "l2":
        return np.sqrt(integrate(grid, rho * rho))
    if norm == "dual":
        return _Gram(grid).dual_norms(rho)
    raise ConfigurationError(f"unknown residual norm {norm!r}")


# ---------------------------------------------------------------------------
# Newton machinery
# ---------------------------------------------------------------------------


class _Problem:
    def __init__(self, model, grid, sigma, b_floor):
        self.model = model
        self.grid = grid
        self.sigma = sigma
        self.b_floor = b_floor
        self.k = model.k
        self.N = grid.N
        self.L = stiffness_matrix(grid)
        self.W = grid.weights
        self.gram = _Gram(grid)
        self.P = sparse.block_diag([self.L + sparse.diags(self.W)] * self.k, format="csc")

    def value(self, v) -> float:
        try:
            return reduced_energy(self.model, self.grid, v, self.sigma, self.b_floor)
        except DegenerateComponentError:
            return math.inf

    def state(self, v):
        red = reduced_energy_and_gradient(self.model, self.grid, v, self.sigma, self.b_floor)
        rho = red.gradient.values
        return red.value, rho, red.omega

    def hessian_parts(self, v, omega):
        k, N, W = self.k, self.N, self.W
        d2 = self.model.D2G(v.T)  # (N, k, k)
        blocks = [[None] * k for _ in range(k)]
        for i in range(k):
            for j in range(k):
                diag = W * d2[:, i, j]
                if i == j:
                    diag = diag + W * (self.model.mass_squared[i] - omega[i] ** 2)
                    blocks[i][j] = self.L + sparse.diags(diag)
                elif np.any(diag):
                    blocks[i][j] = sparse.diags(diag)
        H0 = sparse.bmat(blocks, format="csc")
        b = b_values(self.grid, v)
        U = np.zeros((k * N, k))
        for j in range(k):
            U[j * N : (j + 1) * N, j] = (2.0 * omega[j] / math.sqrt(b[j])) * W * v[j]
        return H0, U

    def newton_direction(self, H0, U, g, tau):
        A = (H0 + tau * self.P).tocsc()
        try:
            lu = splu(A)
        except RuntimeError:
            return None
        y = lu.solve(-g)
        Z = lu.solve(U)
        S = np.eye(U.shape[1]) + U.T @ Z
        try:
            corr = Z @ np.linalg.solve(S, U.T @ y)
        except np.linalg.LinAlgError:
            return None
        d = y - corr
        if not np.all(np.isfinite(d)):
            return None
        return d


def _sobolev_direction(prob: _Problem, rho: np.ndarray) -> np.ndarray:
    return -prob.gram.solve(rho * prob.W)


def _initial_values(model, grid, sigma, guess: InitialGuess, z_star, s2a) -> np.ndarray:
    k = model.k
    z = np.asarray(z_star, dtype=float)
    if not np.all(z > 0):
        z = np.full(k, float(np.max(z)) if np.max(z) > 0 else 1.0)
    omega_t = 0.5 * (s2a + model.m)
    if guess.kind == "file":
        v = read_profile(guess.path, grid.n, grid).values
        if v.shape[0] != k:
            raise ShapeError(f"initial profile has {v.shape[0]} components, model has {k}")
        return v.copy()
    if guess.kind == "trial":
        zz = np.asarray(guess.z if guess.z is not None else z, dtype=float)
        R = guess.R if guess.R is not None else low_ratio_radius(model, zz, omega_t, float(np.sum(sigma)), grid.n)
        R = min(R, grid.r_max - guess.width)
        return trial_field(grid, zz, R, guess.width).values.copy()
    amps = np.asarray(guess.amplitudes if guess.amplitudes is not None else z, dtype=float)
    if guess.widths is not None:
        widths = np.broadcast_to(np.asarray(guess.widths, dtype=float), amps.shape)
    else:
        # b_j = A_j^2 (pi/2)^(n/2) w^n  matched to sigma_j / omega_t
        widths = (np.asarray(sigma) / (omega_t * amps**2 * (0.5 * math.pi) ** (grid.n / 2))) ** (1.0 / grid.n)
        widths = np.minimum(widths, grid.r_max / 3.0)
    return gaussian_bumps(grid, amps, widths).values.copy()


def _run(prob: _Problem, v0: np.ndarray, cfg: SolverConfig, tol: float, iters: int, trace: list, it0: int):
    """Descent loop; returns (v, converged, iterations, message)."""
    v = v0.copy()
    f, rho, omega = prob.state(v)
    tau = cfg.tau_initial
    step = 1.0
    prev = None
    for it in range(iters):
        res = prob.gram.dual_norms(rho)
        thresh = tol * (1.0 + _h1_norm(prob.grid, v))
        trace.append((it0 + it, f, float(np.max(res))))
        if np.max(res) <= thresh:
            return v, True, it, "converged"
        g = (rho * prob.W).ravel()
        d = None
        if cfg.method == "newton":
            H0, U = prob.hessian_parts(v, omega)
            while tau <= cfg.tau_max:
                d = prob.newton_direction(H0, U, g, tau)
                if d is not None and g @ d < 0:
                    break
                d = None
                tau *= 10.0
        if d is None:
            sd = _sobolev_direction(prob, rho).ravel()
            if prev is not None:
                # Barzilai-Borwein length in the H^1 metric
                s_prev, y_prev = prev
                sy = float(s_prev @ y_prev)
                if sy > 0:
                    step = float(s_prev @ (prob.P @ s_prev)) / sy
            d = step * sd
            tau = max(tau / 10.0, cfg.tau_initial) if cfg.method == "newton" else tau
        slope = float(g @ d)
        t = 1.0
        accepted = False
        for _ in range(cfg.max_backtracks):
            cand = v + t * d.reshape(v.shape)
            fc = prob.value(cand)
            if fc <= f + cfg.armijo_c * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if cfg.method == "newton" and tau <= cfg.tau_max:
                tau *= 10.0
                continue
            return v, False, it + 1, "line search failed"
        if cfg.method == "newton":
            tau = tau / 4.0 if t == 1.0 else tau * 4.0 ** (t < 0.25)
            tau = max(tau, 1e-12)
        v_new = cand
        f_new, rho_new, omega_new = prob.state(v_new)
        prev = ((v_new - v).ravel(), ((rho_new - rho) * prob.W).ravel())
        v, f, rho, omega = v_new, f_new, rho_new, omega_new
    res = prob.gram.dual_norms(rho)
    thresh = tol * (1.0 + _h1_norm(prob.grid, v))
    trace.append((it0 + iters, f, float(np.max(res))))
    return v, bool(np.max(res) <= thresh), iters, "iteration limit reached"


def _finish(prob: _Problem, v, converged, iterations, trace, restart, message, tol, s2a) -> SolverResult:
    model, grid = prob.model, prob.grid
    f, rho, omega = prob.state(v)
    res = prob.gram.dual_norms(rho)
    e = energy(model, grid, v, omega)
    x, _ = xi(model, grid, v)
    interior = v[:, :-1]
    positivity = bool(np.all(interior > 0))
    window = bool(np.all(omega > s2a) and np.all(omega < model.m))
    return SolverResult(
        u_star=FieldState(grid, v),
        omega_star=omega,
        E=e.total,
        Lambda=lambda_ratio(model, grid, v, omega),
        xi=x,
        charges=charges(grid, v, omega),
        sigma=np.asarray(prob.sigma, dtype=float),
        residual_norms=res,
        residual_threshold=tol * (1.0 + _h1_norm(grid, v)),
        iterations=iterations,
        converged=converged,
        positivity=positivity,
        frequency_window=window,
        sqrt_2alpha=s2a,
        masses=model.masses,
        trace=tuple(trace),
        restart=restart,
        message=message,
    )


def _solve_once(prob, v0, cfg, s2a, restart) -> SolverResult:
    trace: list = []
    v, conv, its, msg = _run(prob, v0, cfg, cfg.grad_tolerance, cfg.max_iterations, trace, 0)
    if conv:
        v = np.abs(v)
        polish = replace(cfg, max_iterations=cfg.polish_iterations)
        # polishing runs a fixed number of steps; stop early only when nothing is left to gain
        v, pconv, pits, pmsg = _run(prob, v, polish, cfg.grad_tolerance * 1e-6, cfg.polish_iterations, trace, its + 1)
        its += pits
        f, rho, _ = prob.state(v)
        conv = bool(np.max(prob.gram.dual_norms(rho)) <= cfg.grad_tolerance * (1.0 + _h1_norm(prob.grid, v)))
        msg = "converged" if conv else "polish lost convergence"
    return _finish(prob, v, conv, its, trace, restart, msg, cfg.grad_tolerance, s2a)


def minimize(
    model: NonlinearityModel,
    grid: RadialGrid,
    sigma,
    config: SolverConfig | None = None,
    *,
    sqrt_2alpha: float | None = None,
    z_star=None,
    start: FieldState | np.ndarray | None = None,
) -> SolverResult:
    """Minimize ``a(u) + 1/2 sum_j sigma_j^2 / b_j(u)`` over radial profiles on ``grid``.

    The best of ``config.restarts`` runs is returned: run 0 starts from the
    configured initial guess (or ``start``), run ``i > 0`` from the same guess
    multiplied by ``1 + restart_noise * N(0, 1)`` noise drawn from the
    generator seeded with ``(seed, i)``.  Converged runs beat unconverged
    ones; ties are broken by lower energy, then by run index.
    """
    cfg = config or SolverConfig()
    s = np.atleast_1d(np.asarray(sigma, dtype=float))
    if s.shape != (model.k,) or np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise DomainError(f"charges must be {model.k} positive numbers, got {s.tolist()}")
    if sqrt_2alpha is None or z_star is None:
        est = estimate_alpha(model)
        sqrt_2alpha = math.sqrt(2.0 * est.value) if sqrt_2alpha is None else sqrt_2alpha
        z_star = est.z_star if z_star is None else z_star
    b_floor = cfg.b_floor if cfg.b_floor is not None else default_b_floor(s)
    prob = _Problem(model, grid, s, b_floor)
    if start is not None:
        base = as_values(grid, start).astype(float).copy()
    else:
        base = _initial_values(model, grid, s, cfg.initial_guess, z_star, sqrt_2alpha)
    if base.shape[0] != model.k:
        raise ShapeError(f"initial field has {base.shape[0]} components, model has {model.k}")
    if np.any(b_values(grid, base) < b_floor):
        raise DegenerateComponentError(
            "initial guess has a component with int u_j^2 below the floor; choose another guess or larger charges"
        )

    best = None
    for i in range(cfg.restarts):
        v0 = base
        if i > 0:
            rng = np.random.default_rng([cfg.seed, i])
            v0 = base * (1.0 + cfg.restart_noise * rng.standard_normal(base.shape))
        try:
            res = _solve_once(prob, v0, cfg, sqrt_2alpha, i)
        except DegenerateComponentError:
            if i == 0 and cfg.restarts == 1:
                raise
            continue
        if best is None or (res.converged, -res.E) > (best.converged, -best.E):
            best = res
    if best is None:
        raise DegenerateComponentError("every run collapsed a component; try different charges or initial guess")
    return best


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    sigma: np.ndarray
    I: float
    Lambda: float
    converged: bool
    frequency_window: bool
    in_omega: bool
    omega: np.ndarray | None = None
    error: str | None = None
    probes: tuple["SweepRow", ...] = ()

    @property
    def probes_in_omega(self) -> bool:
        return bool(self.probes) and all(p.converged and p.in_omega for p in self.probes)


def _row(model, grid, sigma, cfg, s2a, z_star, eta, start=None) -> tuple[SweepRow, SolverResult | None]:
    try:
        res = minimize(model, grid, sigma, cfg, sqrt_2alpha=s2a, z_star=z_star, start=start)
    except (DegenerateComponentError, DomainError, ArithmeticError) as exc:
        return SweepRow(np.asarray(sigma, float), math.nan, math.nan, False, False, False, None, str(exc)), None
    return (
        SweepRow(
            np.asarray(sigma, float),
            res.E,
            res.Lambda,
            res.converged,
            res.frequency_window,
            bool(res.converged and res.Lambda < s2a + eta),
            res.omega_star,
            None if res.converged else res.message,
        ),
        res,
    )


def sweep(
    model: NonlinearityModel,
    grid: RadialGrid,
    sigma_set: Sequence,
    config: SolverConfig | None = None,
    *,
    eta: float | None = None,
    sqrt_2alpha: float | None = None,
    z_star=None,
    probe: bool = True,
    probe_step: float = 0.01,
    workers: int = 1,
) -> list[SweepRow]:
    """Solve for every charge vector and mark membership ``Lambda < sqrt(2 alpha) + eta``.

    Each member row is then perturbed by ``+-probe_step`` (relative) in each
    component and re-solved from the member's minimizer.  Failures are
    recorded per row.  Rows are returned in input order for any ``workers``.
    """
    from .model import check_assumptions
    from .verify import default_eta

    if len(sigma_set) == 0:
        raise ConfigurationError("sigma_set is empty")
    cfg = config or SolverConfig()
    if eta is None or sqrt_2alpha is None or z_star is None:
        rep = check_assumptions(model)
        eta = default_eta(rep) if eta is None else eta
        sqrt_2alpha = rep.sqrt_2alpha if sqrt_2alpha is None else sqrt_2alpha
        z_star = rep.alpha_minimizer if z_star is None else z_star

    def one(sig):
        row, res = _row(model, grid, sig, cfg, sqrt_2alpha, z_star, eta)
        if not (probe and row.in_omega):
            return row
        probes = []
        warm = replace(cfg, restarts=1)
        for j in range(model.k):
            for sign in (-1.0, 1.0):
                s = np.array(sig, dtype=float)
                s[j] *= 1.0 + sign * probe_step
                prow, _ = _row(model, grid, s, warm, sqrt_2alpha, z_star, eta, start=res.u_star)
                probes.append(prow)
        return replace(row, probes=tuple(probes))

    sigmas = [np.atleast_1d(np.asarray(s, dtype=float)) for s in sigma_set]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, sigmas))
    return [one(s) for s in sigmas]
