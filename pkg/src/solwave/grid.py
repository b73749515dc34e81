"""Radial discretisation of R^n.

Nodes sit at cell centres ``r_i = (i + 1/2) dr`` of a uniform partition of
``[0, r_max]``; faces sit at ``(i + 1) dr``.  All integrals use the midpoint
rule with weights ``w_i = |S^{n-1}| r_i^(n-1) dr``.  The gradient lives on
faces and the Laplacian is the flux-form operator built from the same
weights, so the discrete summation-by-parts identity

    integrate(-laplacian(u) * v) == sum_f W_f Du_f Dv_f

holds exactly.  The face at ``r = 0`` carries zero weight (regularity), and
the last face carries a Dirichlet condition ``u(r_max) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import sparse

from .errors import ConfigurationError, ShapeError

__all__ = [
    "RadialGrid",
    "FieldState",
    "FieldNorms",
    "make_grid",
    "sphere_area",
    "ball_volume",
    "integrate",
    "face_gradient",
    "laplacian_radial",
    "stiffness_matrix",
    "kinetic",
    "norms",
    "write_profile",
    "read_profile",
]


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    n: int
    r_max: float
    N: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ConfigurationError(f"grid.n must be an integer >= 3, got {self.n}")
        if not (math.isfinite(self.r_max) and self.r_max > 0):
            raise ConfigurationError(f"grid.r_max must be positive, got {self.r_max}")
        if int(self.N) != self.N or self.N < 16:
            raise ConfigurationError(f"grid.N must be an integer >= 16, got {self.N}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "r_max", float(self.r_max))
        dr = self.r_max / self.N
        area = sphere_area(self.n)
        r = (np.arange(self.N) + 0.5) * dr
        faces = (np.arange(self.N) + 1.0) * dr
        face_w = area * faces ** (self.n - 1) * dr
        face_w[-1] *= 0.5  # half cell between the last node and r_max
        for name, arr in (("r", r), ("weights", area * r ** (self.n - 1) * dr), ("faces", faces), ("face_weights", face_w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dr(self) -> float:
        return self.r_max / self.N

    def same_as(self, other: "RadialGrid") -> bool:
        return other is self or (other.n == self.n and other.N == self.N and math.isclose(other.r_max, self.r_max, rel_tol=1e-12))


def make_grid(n: int, r_max: float, N: int) -> RadialGrid:
    """Uniform half-offset grid on ``(0, r_max)`` for radial functions on R^n."""
    return RadialGrid(n=n, r_max=r_max, N=N)


@dataclass(frozen=True, eq=False)
class FieldState:
    """k radial profiles sampled on ``grid``; ``values`` has shape ``(k, N)``."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[1] != self.grid.N:
            raise ShapeError(f"field values must have shape (k, {self.grid.N}), got {np.shape(self.values)}")
        if not np.all(np.isfinite(v)):
            raise ShapeError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def k(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, j):
        return self.values[j]

    def with_values(self, values) -> "FieldState":
        return FieldState(self.grid, values)


def as_values(grid: RadialGrid, u) -> np.ndarray:
    """Return the ``(k, N)`` array behind ``u`` after checking it fits ``grid``."""
    if isinstance(u, FieldState):
        if not grid.same_as(u.grid):
            raise ShapeError("field lives on a different grid")
        return u.values
    v = np.asarray(u, dtype=float)
    if v.ndim == 1:
        v = v[None, :]
    if v.shape[-1] != grid.N:
        raise ShapeError(f"expected {grid.N} nodes, got shape {v.shape}")
    return v


def integrate(grid: RadialGrid, samples) -> float | np.ndarray:
    """Midpoint quadrature of ``int_{R^n} f(|x|) dx``; reduces the last axis."""
    s = np.asarray(samples, dtype=float)
    if s.shape[-1] != grid.N:
        raise ShapeError(f"expected {grid.N} samples, got shape {s.shape}")
    return s @ grid.weights


def face_gradient(grid: RadialGrid, u) -> np.ndarray:
    """Radial derivative on faces, with ``u(r_max) = 0`` imposed on the last one."""
    v = np.asarray(u, dtype=float)
    if v.shape[-1] != grid.N:
        raise ShapeError(f"expected {grid.N} nodes, got shape {v.shape}")
    d = np.empty_like(v)
    d[..., :-1] = np.diff(v, axis=-1) / grid.dr
    d[..., -1] = -2.0 * v[..., -1] / grid.dr
    return d


def kinetic(grid: RadialGrid, u) -> float | np.ndarray:
    """``||Du||^2_{L^2}`` per component."""
    d = face_gradient(grid, u)
    return (d * d) @ grid.face_weights


def stiffness_matrix(grid: RadialGrid) -> sparse.csr_matrix:
    """Symmetric matrix ``L`` with ``u^T L u = kinetic(u)``; ``-Laplacian = W^{-1} L``."""
    ab = stiffness_banded(grid)
    return sparse.diags([ab[0, 1:], ab[1], ab[0, 1:]], [-1, 0, 1], format="csr")


def stiffness_banded(grid: RadialGrid) -> np.ndarray:
    """Upper banded storage ``(2, N)`` of :func:`stiffness_matrix` for ``solveh_banded``."""
    c = grid.face_weights / grid.dr**2
    ab = np.zeros((2, grid.N))
    ab[1, 0] = c[0]
    ab[1, 1:-1] = c[:-2] + c[1:-1]
    ab[1, -1] = c[-2] + 4.0 * c[-1]
    ab[0, 1:] = -c[:-1]
    return ab


def laplacian_radial(grid: RadialGrid, component) -> np.ndarray:
    """Flux-form discretisation of ``u'' + (n-1)/r u'``; acts on the last axis."""
    v = np.asarray(component, dtype=float)
    d = face_gradient(grid, v)
    flux = d * grid.face_weights
    div = np.empty_like(v)
    div[..., 0] = flux[..., 0]
    div[..., 1:] = flux[..., 1:] - flux[..., :-1]
    div[..., -1] = 2.0 * flux[..., -1] - flux[..., -2]
    return div / (grid.weights * grid.dr)


class FieldNorms(NamedTuple):
    l2: np.ndarray
    lp: np.ndarray
    lq: np.ndarray
    grad_l2: np.ndarray
    h1: np.ndarray


def norms(grid: RadialGrid, field, p: float = 4.0, q: float = 5.0) -> FieldNorms:
    """Per-component ``L^2``, ``L^p``, ``L^q``, gradient ``L^2`` and ``H^1`` norms."""
    v = as_values(grid, field)
    b = integrate(grid, v * v)
    a = np.abs(v)
    lp = integrate(grid, a**p) ** (1.0 / p)
    lq = integrate(grid, a**q) ** (1.0 / q)
    kin = kinetic(grid, v)
    return FieldNorms(np.sqrt(b), lp, lq, np.sqrt(kin), np.sqrt(b + kin))


def write_profile(path, field: FieldState, extra: np.ndarray | None = None, extra_names=None) -> None:
    """Write ``r,u_1,...,u_k`` (plus optional extra columns) with 17 significant digits."""
    k = field.k
    header = ["r"] + [f"u_{j + 1}" for j in range(k)]
    cols = [field.grid.r, *field.values]
    if extra is not None:
        header += list(extra_names)
        cols += list(np.atleast_2d(extra))
    table = np.column_stack(cols)
    lines = [",".join(header)]
    lines += [",".join(f"{x:.17g}" for x in row) for row in table]
    Path(path).write_text("\n".join(lines) + "\n")


def read_profile(path, n: int, grid: RadialGrid | None = None) -> FieldState:
    """Read a profile table; the grid is rebuilt from the node column unless given."""
    text = Path(path).read_text().strip().splitlines()
    header = [h.strip() for h in text[0].split(",")]
    if not header or header[0] != "r" or any(not h.startswith("u_") for h in header[1:]):
        raise ConfigurationError(f"{path}: header must be r,u_1,...,u_k, got {text[0]!r}")
    data = np.array([[float(x) for x in line.split(",")] for line in text[1:]])
    r = data[:, 0]
    if grid is None:
        dr = r[1] - r[0]
        grid = make_grid(n, dr * len(r), len(r))
    if grid.N != len(r) or not np.allclose(r, grid.r, rtol=1e-12, atol=1e-12 * grid.r_max):
        raise ShapeError(f"{path}: node column does not match the grid")
    return FieldState(grid, data[:, 1:].T)
