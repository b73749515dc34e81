"""Nonlinearities G, their admissibility audits and the constants alpha, alpha_j.

A model stores the masses m_1 <= ... <= m_k, the potential G, its gradient DG
and the growth exponents (p, q).  F(z) = G(z) + 1/2 sum_j m_j^2 z_j^2 is always
derived from G; it is never stored on its own.

All evaluators are vectorised over leading axes: ``z`` has shape ``(..., k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from .errors import ConfigurationError, DomainError, ModelEvaluationError, ParameterError

ArrayFn = Callable[[np.ndarray], np.ndarray]

__all__ = [
    "NonlinearityModel",
    "AlphaSearch",
    "AlphaEstimate",
    "SamplingConfig",
    "AssumptionReport",
    "evaluate",
    "builtin_model",
    "free_model",
    "estimate_alpha",
    "estimate_alpha_j",
    "check_assumptions",
    "BUILTIN_MODELS",
]


@dataclass(frozen=True, eq=False)
class NonlinearityModel:
    """A k-component nonlinearity together with its masses.

    Parameters
    ----------
    masses : sequence of float
        Positive masses, sorted ascending.  ``m`` is the smallest one.
    potential : callable
        ``G``, mapping an array of shape ``(..., k)`` to shape ``(...)``.
    force : callable
        ``DG``, mapping shape ``(..., k)`` to shape ``(..., k)``.
    p, q : float
        Growth exponents in ``|DG(z)| <= c (|z|^(p-1) + |z|^(q-1))``.
    hessian : callable, optional
        Second derivatives of ``G``, shape ``(..., k, k)``.  When omitted,
        central differences of ``force`` are used.
    growth_constant : float, optional
        A known constant ``c``; audits then also check the sampled ratio
        against it.
    """

    masses: tuple[float, ...]
    potential: ArrayFn
    force: ArrayFn
    p: float
    q: float
    hessian: ArrayFn | None = None
    growth_constant: float | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        masses = tuple(float(m) for m in np.atleast_1d(self.masses))
        if not masses:
            raise ParameterError("a model needs at least one component")
        if any(not math.isfinite(m) or m <= 0 for m in masses):
            raise ParameterError(f"masses must be positive and finite, got {masses}")
        if any(b < a for a, b in zip(masses, masses[1:])):
            raise ParameterError(f"masses must be sorted ascending (m_1 <= ... <= m_k), got {masses}")
        if not (2.0 < self.p <= self.q):
            raise ParameterError(f"growth exponents need 2 < p <= q, got p={self.p}, q={self.q}")
        object.__setattr__(self, "masses", masses)

    @property
    def k(self) -> int:
        return len(self.masses)

    @property
    def m(self) -> float:
        """The smallest mass ``m_1``."""
        return self.masses[0]

    @property
    def mass_squared(self) -> np.ndarray:
        return np.asarray(self.masses) ** 2

    def _check_input(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.ndim == 0 and self.k == 1:
            z = z.reshape(1)
        if z.shape[-1] != self.k:
            raise ParameterError(f"expected points with {self.k} components, got shape {z.shape}")
        return z

    def _check_output(self, z, value, what):
        value = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(value)):
            pts = z.reshape(-1, self.k)
            bad = ~np.isfinite(value.reshape(pts.shape[0], -1)).all(axis=1)
            offending = pts[int(np.argmax(bad))]
            raise ModelEvaluationError(f"{self.name}: {what} is not finite at z = {offending.tolist()}")
        return value

    def G(self, z) -> np.ndarray:
        z = self._check_input(z)
        return self._check_output(z, self.potential(z), "G")

    def DG(self, z) -> np.ndarray:
        z = self._check_input(z)
        return self._check_output(z, self.force(z), "DG")

    def F(self, z) -> np.ndarray:
        z = self._check_input(z)
        return self.G(z) + 0.5 * np.sum(self.mass_squared * z * z, axis=-1)

    def D2G(self, z) -> np.ndarray:
        z = self._check_input(z)
        if self.hessian is not None:
            return self._check_output(z, self.hessian(z), "D2G")
        out = np.empty(z.shape + (self.k,))
        for i in range(self.k):
            h = 1e-6 * np.maximum(1.0, np.abs(z[..., i]))
            zp = z.copy()
            zm = z.copy()
            zp[..., i] += h
            zm[..., i] -= h
            out[..., :, i] = (self.force(zp) - self.force(zm)) / (2.0 * h[..., None])
        return self._check_output(z, 0.5 * (out + np.swapaxes(out, -1, -2)), "D2G")


def evaluate(model: NonlinearityModel, z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(G(z), DG(z), F(z))``."""
    g = model.G(z)
    dg = model.DG(z)
    f = g + 0.5 * np.sum(model.mass_squared * np.asarray(z, dtype=float).reshape(dg.shape) ** 2, axis=-1)
    return g, dg, f


# ---------------------------------------------------------------------------
# Built-in nonlinearities
# ---------------------------------------------------------------------------


def _safe_pow(a: np.ndarray, e: float) -> np.ndarray:
    """``a**e`` for ``a >= 0`` that returns 0 instead of inf/nan at ``a = 0``."""
    if e >= 0:
        return a**e
    out = np.zeros_like(a)
    np.power(a, e, out=out, where=a > 0)
    return out


def _coupled_family(masses, terms, q, name, params) -> NonlinearityModel:
    """G(z) = -sum_t prod_{i in S_t} |z_i|^(p_t) + |z|^q."""
    k = len(masses)
    growth_p = min(len(idx) * pw for idx, pw in terms)

    def potential(z):
        a = np.abs(z)
        g = np.linalg.norm(z, axis=-1) ** q
        for idx, pw in terms:
            g = g - np.prod(a[..., list(idx)] ** pw, axis=-1)
        return g

    def force(z):
        a = np.abs(z)
        s = np.sign(z)
        rho = np.linalg.norm(z, axis=-1)
        out = q * _safe_pow(rho, q - 2.0)[..., None] * z
        for idx, pw in terms:
            powers = a**pw
            for i in idx:
                others = [l for l in idx if l != i]
                rest = np.prod(powers[..., others], axis=-1)
                out[..., i] -= pw * s[..., i] * a[..., i] ** (pw - 1.0) * rest
        return out

    def hessian(z):
        a = np.abs(z)
        s = np.sign(z)
        rho = np.linalg.norm(z, axis=-1)
        eye = np.eye(k)
        out = (q * _safe_pow(rho, q - 2.0))[..., None, None] * eye
        out = out + (q * (q - 2.0) * _safe_pow(rho, q - 4.0))[..., None, None] * (z[..., :, None] * z[..., None, :])
        for idx, pw in terms:
            powers = a**pw
            for i in idx:
                rest_i = np.prod(powers[..., [l for l in idx if l != i]], axis=-1)
                out[..., i, i] -= pw * (pw - 1.0) * _safe_pow(a[..., i], pw - 2.0) * rest_i
                for l in idx:
                    if l == i:
                        continue
                    rest_il = np.prod(powers[..., [h for h in idx if h not in (i, l)]], axis=-1)
                    out[..., i, l] -= (
                        pw * pw * s[..., i] * s[..., l] * a[..., i] ** (pw - 1.0) * a[..., l] ** (pw - 1.0) * rest_il
                    )
        return out

    return NonlinearityModel(
        masses=tuple(masses),
        potential=potential,
        force=force,
        hessian=hessian,
        p=growth_p,
        q=q,
        name=name,
        params=dict(params),
    )


def _scalar_quartic_quintic(params) -> NonlinearityModel:
    mass = float(params.get("mass", 1.0))

    def potential(z):
        a = np.abs(z[..., 0])
        return -(a**4) + a**5

    def force(z):
        s = z[..., 0]
        a = np.abs(s)
        return (-4.0 * a * a * s + 5.0 * a**3 * s)[..., None]

    def hessian(z):
        s = z[..., 0]
        a = np.abs(s)
        return (-12.0 * s * s + 20.0 * a**3)[..., None, None]

    return NonlinearityModel(
        masses=(mass,),
        potential=potential,
        force=force,
        hessian=hessian,
        p=4.0,
        q=5.0,
        name="scalar_quartic_quintic",
        params={"mass": mass},
    )


def _coupled_k2(params) -> NonlinearityModel:
    p = float(params.get("p", 2.0))
    q = float(params.get("q", 4.5))
    masses = tuple(float(m) for m in params.get("masses", (1.0, 1.0)))
    if len(masses) != 2:
        raise ParameterError(f"coupled_k2 needs two masses, got {masses}")
    if not p > 1.0:
        raise ParameterError(f"1 < p violated (p = {p})")
    if not 2.0 * p < q:
        raise ParameterError(f"2p < q < 5 violated: 2p = {2 * p} is not below q = {q}")
    if not q < 5.0:
        raise ParameterError(f"2p < q < 5 violated: q < 5 violated (q = {q})")
    return _coupled_family(masses, [((0, 1), p)], q, "coupled_k2", {"p": p, "q": q, "masses": masses})


def _coupled_k3(params) -> NonlinearityModel:
    p1, p2, p3 = (float(params.get(f"p{i}", 1.5)) for i in (1, 2, 3))
    p4 = float(params.get("p4", 1.2))
    q = float(params.get("q", 4.5))
    masses = tuple(float(m) for m in params.get("masses", (1.0, 1.0, 1.0)))
    if len(masses) != 3:
        raise ParameterError(f"coupled_k3 needs three masses, got {masses}")
    for i, pi in enumerate((p1, p2, p3), start=1):
        if not 2.0 < 2.0 * pi < q:
            raise ParameterError(f"2 < 2p_i < q < 5 violated for p{i} = {pi}, q = {q}")
    if not q < 5.0:
        raise ParameterError(f"2 < 2p_i < q < 5 violated: q < 5 violated (q = {q})")
    if not 3.0 < 3.0 * p4 < q:
        raise ParameterError(f"3 < 3p_4 < q violated for p4 = {p4}, q = {q}")
    terms = [((0, 1), p1), ((1, 2), p2), ((0, 2), p3), ((0, 1, 2), p4)]
    params = {"p1": p1, "p2": p2, "p3": p3, "p4": p4, "q": q, "masses": masses}
    return _coupled_family(masses, terms, q, "coupled_k3", params)


def _uncoupled_sum(params) -> NonlinearityModel:
    components = params.get("components")
    if components is None:
        count = int(params.get("count", 2))
        components = [_scalar_quartic_quintic({"mass": params.get("mass", 1.0)}) for _ in range(count)]
    components = [builtin_model(c) if isinstance(c, str) else c for c in components]
    if any(c.k != 1 for c in components):
        raise ParameterError("uncoupled_sum composes scalar (k = 1) models only")
    masses = tuple(c.m for c in components)

    def potential(z):
        return sum(c.potential(z[..., j : j + 1]) for j, c in enumerate(components))

    def force(z):
        return np.concatenate([c.force(z[..., j : j + 1]) for j, c in enumerate(components)], axis=-1)

    def hessian(z):
        out = np.zeros(z.shape + (len(components),))
        for j, c in enumerate(components):
            out[..., j, j] = c.D2G(z[..., j : j + 1])[..., 0, 0]
        return out

    return NonlinearityModel(
        masses=masses,
        potential=potential,
        force=force,
        hessian=hessian,
        p=min(c.p for c in components),
        q=max(c.q for c in components),
        name="uncoupled_sum",
        params={"components": [c.name for c in components]},
    )


BUILTIN_MODELS = {
    "scalar_quartic_quintic": _scalar_quartic_quintic,
    "coupled_k2": _coupled_k2,
    "coupled_k3": _coupled_k3,
    "uncoupled_sum": _uncoupled_sum,
}


def builtin_model(name: str, params: dict | None = None) -> NonlinearityModel:
    """Build one of the named example nonlinearities.

    ``scalar_quartic_quintic``
        k = 1, ``G(s) = -|s|^4 + |s|^5``; params ``mass``.
    ``coupled_k2``
        ``G(z) = -(|z_1||z_2|)^p + |z|^q`` with ``1 < p``, ``2p < q < 5``;
        params ``p``, ``q``, ``masses``.
    ``coupled_k3``
        ``G(z) = -(z_1 z_2)^p1 - (z_2 z_3)^p2 - (z_1 z_3)^p3 - (z_1 z_2 z_3)^p4 + |z|^q``
        on absolute values, with ``2 < 2 p_i < q < 5`` and ``3 < 3 p4 < q``.
    ``uncoupled_sum``
        ``G(z) = G_1(z_1) + ... + G_k(z_k)``; params ``components`` (models
        or names) or ``count`` copies of the scalar model.
    """
    try:
        factory = BUILTIN_MODELS[name]
    except KeyError:
        raise ParameterError(f"unknown model {name!r}; choose one of {sorted(BUILTIN_MODELS)}") from None
    return factory(dict(params or {}))


def free_model(masses: Sequence[float]) -> NonlinearityModel:
    """The linear model ``G = 0``."""

    def zero(z):
        return np.zeros(z.shape[:-1])

    return NonlinearityModel(
        masses=tuple(masses),
        potential=zero,
        force=np.zeros_like,
        hessian=lambda z: np.zeros(z.shape + (z.shape[-1],)),
        p=3.0,
        q=3.0,
        name="free",
    )


# ---------------------------------------------------------------------------
# alpha and alpha_j
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlphaSearch:
    """Search settings for the infima over the orthant.

    The orthant box ``[0, z_cap]^k`` is covered by rays (``density`` angles
    per angular coordinate) times ``radial`` log-spaced radii reaching down
    to ``z_cap * rho_min_ratio``; the best grid points are then refined with
    bounded quasi-Newton descent.
    """

    z_cap: float = 10.0
    density: int = 61
    radial: int = 400
    rho_min_ratio: float = 1e-6
    tol: float = 1e-13
    candidates: int = 4


class AlphaEstimate(NamedTuple):
    value: float
    z_star: np.ndarray
    boundary_attained: bool


def _orthant_directions(k: int, density: int) -> np.ndarray:
    if k == 1:
        return np.ones((1, 1))
    angles = np.linspace(0.0, 0.5 * np.pi, density)
    mesh = np.meshgrid(*([angles] * (k - 1)), indexing="ij")
    phi = np.stack([g.ravel() for g in mesh], axis=-1)
    dirs = np.ones((phi.shape[0], k))
    sin_prod = np.ones(phi.shape[0])
    for i in range(k - 1):
        dirs[:, i] = sin_prod * np.cos(phi[:, i])
        sin_prod = sin_prod * np.sin(phi[:, i])
    dirs[:, k - 1] = sin_prod
    dirs[np.abs(dirs) < 1e-15] = 0.0
    return np.unique(np.round(dirs, 15), axis=0)


def _infimum(model: NonlinearityModel, search: AlphaSearch, weights: np.ndarray) -> AlphaEstimate:
    """inf over nonzero z in [0, z_cap]^k of F(z) / sum_i weights_i z_i^2."""
    if search.z_cap <= 0 or search.density < 2 or search.radial < 2:
        raise ConfigurationError(f"invalid search box {search}")
    dirs = _orthant_directions(model.k, search.density)
    dirs = dirs[(dirs * dirs) @ weights > 0]
    if dirs.size == 0:
        raise ConfigurationError("the search grid contains no admissible point")
    rho_hi = search.z_cap / dirs.max(axis=1)
    scale = np.logspace(math.log10(search.rho_min_ratio), 0.0, search.radial)
    pts = dirs[:, None, :] * (rho_hi[:, None] * scale[None, :])[..., None]
    pts = np.minimum(pts, search.z_cap)
    den = (pts * pts) @ weights
    if not np.any(den > 0):
        raise ConfigurationError("all grid points are zero; z_cap too small for the grid density")
    ratio = model.F(pts) / den
    flat = ratio.ravel()
    order = np.argsort(flat, kind="stable")
    starts = []
    for idx in order:
        z0 = pts.reshape(-1, model.k)[idx]
        if all(np.max(np.abs(z0 - s)) > 1e-3 * search.z_cap for s in starts):
            starts.append(z0)
        if len(starts) >= search.candidates:
            break

    def fun(z):
        d = float((z * z) @ weights)
        if d <= 0.0:
            return 1e300, np.zeros_like(z)
        f = float(model.F(z))
        grad = (model.DG(z) + model.mass_squared * z - 2.0 * (f / d) * weights * z) / d
        return f / d, grad

    best_val = float(flat[order[0]])
    best_z = pts.reshape(-1, model.k)[order[0]].copy()
    bounds = [(0.0, search.z_cap)] * model.k
    for z0 in starts:
        res = optimize.minimize(
            fun,
            z0,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"ftol": search.tol, "gtol": search.tol, "maxiter": 2000},
        )
        val = float(res.fun)
        if np.isfinite(val) and val < best_val:
            best_val, best_z = val, np.asarray(res.x, dtype=float)
    boundary = bool(np.max(best_z) >= search.z_cap * (1.0 - 1e-9))
    return AlphaEstimate(best_val, best_z, boundary)


def estimate_alpha(model: NonlinearityModel, search: AlphaSearch | None = None) -> AlphaEstimate:
    """Estimate ``alpha = inf F(z)/|z|^2`` over the closed orthant minus the origin."""
    return _infimum(model, search or AlphaSearch(), np.ones(model.k))


def estimate_alpha_j(model: NonlinearityModel, j: int, search: AlphaSearch | None = None) -> float:
    """Estimate ``alpha_j = inf F(z) / sum_{h != j} z_h^2`` (``j`` is 0-based)."""
    if model.k == 1:
        raise DomainError("alpha_j is undefined for a single component")
    if not 0 <= j < model.k:
        raise ParameterError(f"component index {j} out of range for k = {model.k}")
    weights = np.ones(model.k)
    weights[j] = 0.0
    return _infimum(model, search or AlphaSearch(), weights).value


# ---------------------------------------------------------------------------
# Assumption audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingConfig:
    """Sampling settings for :func:`check_assumptions`."""

    samples: int = 10_000
    z_cap: float = 10.0
    seed: int = 0
    n: int = 3
    search: AlphaSearch = field(default_factory=AlphaSearch)
    equality_rtol: float = 1e-8


@dataclass(frozen=True)
class AssumptionReport:
    alpha: float
    alpha_minimizer: np.ndarray
    alpha_j: tuple[float, ...]
    alpha_star: float
    a0_holds: bool
    a1_holds: bool
    a2_holds: bool
    a3_holds: bool
    a4_holds: bool
    boundary_attained: bool
    growth_constant: float
    prop1_epsilon: float
    inconclusive: bool
    m: float
    k: int

    @property
    def sqrt_2alpha(self) -> float:
        return math.sqrt(2.0 * self.alpha)


def _samples(k: int, cfg: SamplingConfig) -> np.ndarray:
    """Quasi-random points: half uniform in the box, half with log-uniform radius."""
    half = max(cfg.samples // 2, 1)
    sob = qmc.Sobol(d=k, scramble=True, seed=cfg.seed)
    m = int(math.ceil(math.log2(half)))
    box = (2.0 * sob.random_base2(m)[:half] - 1.0) * cfg.z_cap
    rng = np.random.default_rng(cfg.seed)
    dirs = rng.normal(size=(cfg.samples - half, k))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = cfg.z_cap * 10.0 ** rng.uniform(-4.0, 0.0, size=(cfg.samples - half, 1))
    return np.concatenate([box, dirs * radii])


def _prop1_epsilon(model: NonlinearityModel, cfg: SamplingConfig) -> float:
    """Largest radius eps with F(z) >= m^2 |z|^2 / 4 for all |z| <= eps on the ray grid."""
    dirs = _orthant_directions(model.k, min(cfg.search.density, 31))
    radii = cfg.z_cap * np.logspace(-6.0, 0.0, 600)
    pts = dirs[:, None, :] * radii[None, :, None]
    ok = np.all(model.F(pts) >= 0.25 * model.m**2 * radii[None, :] ** 2, axis=0)
    if not ok[0]:
        return 0.0
    first_bad = np.argmin(ok) if not ok.all() else len(radii)
    return float(radii[first_bad - 1])


def check_assumptions(model: NonlinearityModel, config: SamplingConfig | None = None) -> AssumptionReport:
    """Audit the standing assumptions on a sampled set.

    Verdicts are certified only on the sampled points; the infima alpha and
    alpha_j come from :func:`estimate_alpha` / :func:`estimate_alpha_j`.
    """
    cfg = config or SamplingConfig()
    k = model.k
    z = _samples(k, cfg)
    rng = np.random.default_rng(cfg.seed + 1)
    signs = rng.choice([-1.0, 1.0], size=z.shape)

    g = model.G(z)
    a0 = bool(np.allclose(model.G(signs * z), g, rtol=1e-14, atol=0.0) and np.allclose(model.G(np.abs(z)), g, rtol=1e-14, atol=0.0))

    f = model.F(z)
    g0 = float(model.G(np.zeros(k)))
    scale = 1.0 + 0.5 * np.sum(model.mass_squared * z * z, axis=-1)
    a1 = bool(g0 == 0.0 and np.all(f >= -1e-14 * scale))

    rho = np.linalg.norm(z, axis=-1)
    mask = rho > 0
    bound = rho[mask] ** (model.p - 1.0) + rho[mask] ** (model.q - 1.0)
    growth = float(np.max(np.linalg.norm(model.DG(z[mask]), axis=-1) / bound))
    critical = math.inf if cfg.n <= 2 else 2.0 * cfg.n / (cfg.n - 2.0)
    a2 = bool(math.isfinite(growth) and 2.0 < model.p <= model.q < critical)
    if model.growth_constant is not None:
        a2 = a2 and growth <= model.growth_constant * (1.0 + 1e-9)

    est = estimate_alpha(model, cfg.search)
    a3 = bool(est.value < 0.5 * model.m**2 and not est.boundary_attained)

    if k >= 2:
        alpha_j = tuple(estimate_alpha_j(model, j, cfg.search) for j in range(k))
        alpha_star = min(alpha_j)
        margin = cfg.equality_rtol * max(abs(est.value), 1e-300)
        a4 = all(aj > est.value + margin for aj in alpha_j)
    else:
        alpha_j = ()
        alpha_star = math.inf
        a4 = True

    return AssumptionReport(
        alpha=est.value,
        alpha_minimizer=est.z_star,
        alpha_j=alpha_j,
        alpha_star=alpha_star,
        a0_holds=a0,
        a1_holds=a1,
        a2_holds=a2,
        a3_holds=a3,
        a4_holds=bool(a4),
        boundary_attained=est.boundary_attained,
        growth_constant=growth,
        prop1_epsilon=_prop1_epsilon(model, cfg),
        inconclusive=est.boundary_attained,
        m=model.m,
        k=k,
    )
