"""Variable-exponent Lebesgue numerics on a triangulation.

Exponents, sources and fluxes are stored per triangle (barycenter samples),
so modulars and Luxemburg norms are finite sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import Grid, Patch, integrate, region_grid, restrict

# report names for the standing hypotheses on the data
EXPONENT_BOUNDS = "1 < p- <= p(x) <= p+"
EXPONENT_SOBOLEV = "grad p in L^s with s > n"
SUBCRITICAL = "p(x) <= n"
SOURCE_INTEGRABILITY = "t1 > n/p(x) and g in L^t1"
FLUX_INTEGRABILITY = "t2 > n/(p(x)-1) and F in L^t2"

DEFAULT_EPS_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4)


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Exponent ``p`` sampled per triangle, with declared bounds.

    ``grad`` holds per-triangle samples of the gradient of ``p`` (analytic
    when known). Without it, ``node_values`` are differenced per triangle;
    with neither, ``p`` is treated as piecewise constant with zero gradient.
    """

    values: np.ndarray
    p_minus: float
    p_plus: float
    s: float | None = None
    grad: np.ndarray | None = field(default=None, repr=False)
    node_values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not np.isfinite(values).all():
            raise ValueError("exponent values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: Grid, p: float, s: float | None = None) -> "ExponentField":
        return cls(np.full(grid.n_triangles, float(p)), float(p), float(p), s)

    @classmethod
    def from_function(cls, grid: Grid, func, grad=None, s=None,
                      p_minus=None, p_plus=None) -> "ExponentField":
        """Sample ``func(x, y)`` at barycenters and nodes.

        Undeclared bounds default to the sampled extremes.
        """
        values = grid.sample(func)
        nodes = grid.interpolate(func)
        g = None
        if grad is not None:
            b = grid.barycenters
            gx, gy = grad(b[:, 0], b[:, 1])
            g = np.column_stack([np.broadcast_to(gx, values.shape), np.broadcast_to(gy, values.shape)])
        lo = float(min(values.min(), nodes.min())) if p_minus is None else float(p_minus)
        hi = float(max(values.max(), nodes.max())) if p_plus is None else float(p_plus)
        return cls(values, lo, hi, s, g, nodes)

    def gradient_samples(self, grid: Grid) -> np.ndarray:
        if self.grad is not None:
            return np.asarray(self.grad, dtype=float)
        if self.node_values is not None:
            return np.einsum("ta,tad->td", self.node_values[grid.triangles], grid.grad_hat)
        return np.zeros((grid.n_triangles, 2))

    def grad_norm(self, grid: Grid) -> float:
        """Discrete ``|| |grad p| ||_{L^s}``; requires ``s``."""
        if self.s is None:
            raise ValueError("Sobolev exponent s not set")
        mag = np.hypot(*self.gradient_samples(grid).T)
        if not mag.any():
            return 0.0
        return integrate(grid, mag ** self.s) ** (1.0 / self.s)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Dirichlet data for ``div(|grad u|^{p-2} grad u) = g + div F``.

    ``boundary`` holds node values for the whole grid; only the entries on
    the domain boundary are used, as Dirichlet data.
    """

    grid: Grid
    exponent: ExponentField
    g: np.ndarray
    F: np.ndarray
    t1: float
    t2: float
    boundary: np.ndarray
    eps_schedule: tuple[float, ...] = DEFAULT_EPS_SCHEDULE
    tol: float = 1e-9
    max_iter: int = 200
    linear_tol: float = 1e-12

    def __post_init__(self):
        nt, nn = self.grid.n_triangles, self.grid.n_nodes
        g = np.broadcast_to(np.asarray(self.g, dtype=float), (nt,)).copy()
        F = np.broadcast_to(np.asarray(self.F, dtype=float), (nt, 2)).copy()
        bd = np.broadcast_to(np.asarray(self.boundary, dtype=float), (nn,)).copy()
        if self.exponent.values.shape != (nt,):
            raise ValueError(f"exponent needs {nt} triangle values")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "boundary", bd)
        object.__setattr__(self, "eps_schedule", tuple(float(e) for e in self.eps_schedule))

    @property
    def n(self) -> int:
        return self.grid.n

    def with_data(self, **changes) -> "ProblemSpec":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return ProblemSpec(**kw)


def modular(values, p: ExponentField, region) -> float:
    """``sum_T |T| |v_T|^{p_T}`` over the region's triangles."""
    v = restrict(region, values)
    pv = restrict(region, p.values)
    return integrate(region, np.abs(v) ** pv)


def luxemburg_norm(values, p: ExponentField, region, rtol: float = 1e-12) -> float:
    """Luxemburg norm ``inf{lam > 0 : modular(values / lam) <= 1}``.

    The modular of ``values / lam`` is strictly decreasing in ``lam``; the
    root is bracketed between ``rho**(1/p_max)`` and ``rho**(1/p_min)`` and
    located by bisection in ``log lam``.
    """
    v = np.abs(restrict(region, values))
    if not np.isfinite(v).all():
        raise ValueError("non-finite values")
    pv = restrict(region, p.values)
    areas = region_grid(region).areas
    if isinstance(region, Patch):
        areas = areas[region.triangle_indices]
    keep = v > 0
    if not keep.any():
        return 0.0
    v, pv, areas = v[keep], pv[keep], areas[keep]
    logv = np.log(v)
    loga = np.log(areas)

    def log_modular(log_lam):
        # shifted log-sum-exp: immune to under/overflow of |v|^p
        x = loga + pv * (logv - log_lam)
        top = float(x.max())
        return top + math.log(math.fsum(np.exp(x - top)))

    pmin, pmax = float(pv.min()), float(pv.max())
    log_rho = log_modular(0.0)
    a, b = sorted((log_rho / pmax, log_rho / pmin))
    a, b = a - 0.5, b + 0.5
    while b - a > 0.25 * rtol:
        mid = 0.5 * (a + b)
        if log_modular(mid) > 0:
            a = mid
        else:
            b = mid
    return math.exp(0.5 * (a + b))


def exponent_stats(p: ExponentField, region) -> tuple[float, float, float]:
    """``(min, max, p_m)`` of the exponent over the region; ``p_m`` is the min."""
    vals = restrict(region, p.values)
    if vals.size == 0:
        raise ValueError("empty region")
    lo, hi = float(vals.min()), float(vals.max())
    return lo, hi, lo


@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    threshold: float
    measured: float
    hard: bool = True
    detail: str = ""


@dataclass
class AssumptionReport:
    checks: list[AssumptionCheck]

    @property
    def hard_failures(self) -> list[AssumptionCheck]:
        return [c for c in self.checks if c.hard and not c.passed]

    @property
    def ok(self) -> bool:
        return not self.hard_failures

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def verify_assumptions(problem: ProblemSpec) -> AssumptionReport:
    """Check the standing hypotheses on ``p``, ``g`` and ``F``.

    Threshold inequalities on ``t1``, ``t2`` are strict and compared
    exactly, using the smallest sampled exponent. ``p(x) <= n`` is
    informational: failing it does not block a run.
    """
    grid, p, n = problem.grid, problem.exponent, problem.n
    p_inf = float(p.values.min())
    p_sup = float(p.values.max())
    checks = []

    ok = 1.0 < p.p_minus <= p_inf and p_sup <= p.p_plus
    checks.append(AssumptionCheck(
        EXPONENT_BOUNDS, bool(ok), 1.0, p.p_minus,
        detail=f"declared [{p.p_minus:g}, {p.p_plus:g}], sampled [{p_inf:g}, {p_sup:g}]"))

    if p.s is None:
        checks.append(AssumptionCheck(EXPONENT_SOBOLEV, False, float(n), math.nan, detail="s not given"))
    else:
        gnorm = p.grad_norm(grid)
        ok = p.s > n and math.isfinite(gnorm)
        checks.append(AssumptionCheck(EXPONENT_SOBOLEV, bool(ok), float(n), float(p.s),
                                      detail=f"||grad p||_L^s = {gnorm:.6g}"))

    checks.append(AssumptionCheck(SUBCRITICAL, p_sup <= n, float(n), p_sup, hard=False,
                                  detail="p(x) > n somewhere: Hoelder continuity follows from embedding"
                                  if p_sup > n else ""))

    thr1 = n / p_inf
    # t = inf stands for bounded data
    g_mod = integrate(grid, np.abs(problem.g) ** problem.t1) if math.isfinite(problem.t1) else 0.0
    ok = problem.t1 > thr1 and math.isfinite(g_mod) and np.isfinite(problem.g).all()
    checks.append(AssumptionCheck(SOURCE_INTEGRABILITY, bool(ok), thr1, float(problem.t1),
                                  detail=f"int |g|^t1 = {g_mod:.6g}"))

    thr2 = n / (p_inf - 1.0) if p_inf > 1.0 else math.inf
    Fmag = np.hypot(problem.F[:, 0], problem.F[:, 1])
    F_mod = integrate(grid, Fmag ** problem.t2) if math.isfinite(problem.t2) else 0.0
    ok = problem.t2 > thr2 and math.isfinite(F_mod) and np.isfinite(problem.F).all()
    checks.append(AssumptionCheck(FLUX_INTEGRABILITY, bool(ok), thr2, float(problem.t2),
                                  detail=f"int |F|^t2 = {F_mod:.6g}"))
    return AssumptionReport(checks)
