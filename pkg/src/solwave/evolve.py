"""Time evolution of the radial complex Klein-Gordon system.

    phi_tt - Lap phi_j + m_j^2 phi_j + d_j G(|phi_1|, ..., |phi_k|) phi_j / |phi_j| = 0

integrated with velocity Verlet on the real and imaginary parts.  The
Laplacian is the same flux-form stencil used by the static solver, so a
discrete minimizer is an exact standing wave of the semi-discrete system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError, StabilityError
from .grid import FieldState, RadialGrid, integrate, kinetic, laplacian_radial
from .model import NonlinearityModel

__all__ = [
    "ComplexFieldState",
    "EvolutionDiagnostics",
    "to_standing_wave",
    "wave_energy",
    "wave_charges",
    "evolve_nlkg",
]

_ZERO_AMPLITUDE = 1e-14


@dataclass(frozen=True, eq=False)
class ComplexFieldState:
    grid: RadialGrid
    phi: np.ndarray
    phi_t: np.ndarray

    def __post_init__(self):
        for name in ("phi", "phi_t"):
            a = np.array(getattr(self, name), dtype=complex)
            if a.ndim == 1:
                a = a[None, :]
            if a.ndim != 2 or a.shape[1] != self.grid.N:
                raise ShapeError(f"{name} must have shape (k, {self.grid.N}), got {a.shape}")
            if not np.all(np.isfinite(a)):
                raise ShapeError(f"{name} has non-finite entries")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.phi.shape != self.phi_t.shape:
            raise ShapeError("phi and phi_t shapes differ")

    @property
    def k(self) -> int:
        return self.phi.shape[0]


def to_standing_wave(u: FieldState, omega) -> ComplexFieldState:
    """Initial data of ``exp(-i omega_j t) u_j``: ``phi = u``, ``phi_t = -i omega u``."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if w.shape != (u.k,):
        raise ShapeError(f"expected {u.k} frequencies, got shape {w.shape}")
    return ComplexFieldState(u.grid, u.values.astype(complex), -1j * w[:, None] * u.values)


def _moduli_force(model, x, y):
    """Nonlinear force ``-d_j G(|phi|) phi_j / |phi_j|`` split into real and imaginary parts."""
    mod = np.hypot(x, y)
    dg = model.DG(mod.T).T
    safe = np.where(mod < _ZERO_AMPLITUDE, 1.0, mod)
    scale = np.where(mod < _ZERO_AMPLITUDE, 0.0, dg / safe)
    return -scale * x, -scale * y


def _acceleration(model, grid, x, y):
    m2 = model.mass_squared[:, None]
    nx, ny = _moduli_force(model, x, y)
    return laplacian_radial(grid, x) - m2 * x + nx, laplacian_radial(grid, y) - m2 * y + ny


def wave_energy(model: NonlinearityModel, state: ComplexFieldState) -> float:
    """``1/2 sum_j int |phi_t|^2 + |D phi|^2 + m_j^2 |phi|^2`` plus ``int G(|phi|)`` taken once."""
    g = state.grid
    x, y = state.phi.real, state.phi.imag
    mod = np.hypot(x, y)
    quad = np.abs(state.phi_t) ** 2 + model.mass_squared[:, None] * mod**2
    total = 0.5 * float(np.sum(integrate(g, quad)) + np.sum(kinetic(g, x)) + np.sum(kinetic(g, y)))
    return total + float(integrate(g, model.G(mod.T)))


def wave_charges(state: ComplexFieldState) -> np.ndarray:
    """``C_j = -Im int conj(phi_j) phi_t^j``."""
    return -integrate(state.grid, np.imag(np.conj(state.phi) * state.phi_t))


@dataclass(frozen=True)
class EvolutionDiagnostics:
    t: np.ndarray
    E: np.ndarray
    C: np.ndarray  # (samples, k)
    profile_drift: np.ndarray
    phase: np.ndarray  # (samples, k), unwrapped arg phi_j(t, r_probe)
    r_probe: float
    dt: float
    steps: int
    aborted: bool
    blowup_step: int | None
    final: ComplexFieldState

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.E - self.E[0])) / abs(self.E[0])) if self.E[0] != 0 else float(np.max(np.abs(self.E)))

    @property
    def charge_drift(self) -> np.ndarray:
        c0 = self.C[0]
        scale = np.where(c0 != 0, np.abs(c0), 1.0)
        return np.max(np.abs(self.C - c0), axis=0) / scale

    @property
    def max_profile_drift(self) -> float:
        return float(np.max(self.profile_drift))

    def to_csv(self) -> str:
        k = self.C.shape[1]
        head = "t,E," + ",".join(f"C_{j + 1}" for j in range(k)) + ",profile_drift"
        rows = [head]
        for i in range(self.t.size):
            vals = [self.t[i], self.E[i], *self.C[i], self.profile_drift[i]]
            rows.append(",".join(repr(float(v)) for v in vals))
        return "\n".join(rows) + "\n"


def evolve_nlkg(
    model: NonlinearityModel,
    grid: RadialGrid,
    state: ComplexFieldState,
    dt: float,
    T: float,
    *,
    stride: int | None = None,
    cfl: float = 0.5,
    r_probe: float | None = None,
    growth_limit: float = 0.1,
) -> EvolutionDiagnostics:
    """Velocity-Verlet integration up to time ``T``.

    Diagnostics are sampled every ``stride`` steps (default: about 200
    samples).  The run stops early and is flagged ``aborted`` when the
    energy moves by more than ``growth_limit`` relative.
    """
    if not grid.same_as(state.grid):
        raise ShapeError("state lives on a different grid")
    if state.k != model.k:
        raise ShapeError(f"model has {model.k} components, state has {state.k}")
    if not (0 < cfl <= 1.0):
        raise ConfigurationError(f"cfl must lie in (0, 1], got {cfl}")
    if not (dt > 0 and dt <= cfl * grid.dr * (1 + 1e-12)):
        raise StabilityError(f"dt = {dt!r} exceeds the stability bound cfl * dr = {cfl * grid.dr!r}")
    steps_f = T / dt
    steps = int(round(steps_f))
    if steps < 1 or abs(steps - steps_f) > 1e-9 * max(1.0, steps_f):
        raise ConfigurationError(f"T / dt must be a positive integer, got {steps_f!r}")
    stride = stride or max(1, steps // 200)
    r_probe = grid.r[0] if r_probe is None else r_probe
    ip = int(np.argmin(np.abs(grid.r - r_probe)))

    x, y = state.phi.real.copy(), state.phi.imag.copy()
    vx, vy = state.phi_t.real.copy(), state.phi_t.imag.copy()
    mod0 = np.hypot(x, y)
    norm0 = math.sqrt(float(np.sum(integrate(grid, mod0**2))))
    ax, ay = _acceleration(model, grid, x, y)

    ts, es, cs, drifts, phases = [], [], [], [], []
    aborted, blowup = False, None

    def record(step):
        st = ComplexFieldState(grid, x + 1j * y, vx + 1j * vy)
        ts.append(step * dt)
        es.append(wave_energy(model, st))
        cs.append(wave_charges(st))
        diff = np.hypot(x, y) - mod0
        d = math.sqrt(float(np.sum(integrate(grid, diff**2))))
        drifts.append(d / norm0 if norm0 > 0 else d)
        phases.append(np.arctan2(y[:, ip], x[:, ip]))

    record(0)
    e0 = es[0]
    half = 0.5 * dt
    step = 0
    for step in range(1, steps + 1):
        vx += half * ax
        vy += half * ay
        x += dt * vx
        y += dt * vy
        ax, ay = _acceleration(model, grid, x, y)
        vx += half * ax
        vy += half * ay
        if step % stride == 0 or step == steps:
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                aborted, blowup = True, step
                break
            record(step)
            if abs(es[-1] - e0) > growth_limit * max(abs(e0), 1e-300):
                aborted, blowup = True, step
                break

    ph = np.unwrap(np.array(phases), axis=0) if phases else np.zeros((0, model.k))
    finite = all(np.all(np.isfinite(a)) for a in (x, y, vx, vy))
    final = ComplexFieldState(grid, x + 1j * y, vx + 1j * vy) if finite else state
    return EvolutionDiagnostics(
        t=np.array(ts),
        E=np.array(es),
        C=np.array(cs),
        profile_drift=np.array(drifts),
        phase=ph,
        r_probe=float(grid.r[ip]),
        dt=dt,
        steps=step,
        aborted=aborted,
        blowup_step=blowup,
        final=final,
    )
