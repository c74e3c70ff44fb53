"""Discrete energy, weak residual and Dirichlet solver for the p(x)-Laplacian.

All quantities use the sign convention of the weak formulation

    int |grad u|^{p-2} grad u . grad z = - int g z + int F . grad z,

whose discrete critical points minimize

    J_eps(u) = int (eps^2 + |grad u|^2)^{p/2} / p + int g u - int F . grad u.

The minimizer freezes the coefficient ``(eps^2 + |grad u|^2)^{(p-2)/2}``,
solves the resulting weighted Laplace problem (Kacanov step) and damps the
update by backtracking on ``J_eps``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import pyamg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Grid, Patch, UnderResolvedBall, pairwise_sum
from .spaces import ProblemSpec

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Node values of a piecewise-linear function."""

    grid: Grid = field(repr=False)
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_nodes,):
            raise ValueError(f"expected {self.grid.n_nodes} node values, got {values.shape}")
        if not np.isfinite(values).all():
            raise ValueError("non-finite node values")
        object.__setattr__(self, "values", values)

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, c * self.values)

    __rmul__ = __mul__

    @classmethod
    def from_function(cls, grid: Grid, func) -> "ScalarField":
        return cls(grid, grid.interpolate(func))


@dataclass
class SolveDiagnostics:
    iterations: int = 0
    residual: float = np.inf
    converged: bool = False
    energy_history: list[float] = field(default_factory=list)
    decrements: list[float] = field(default_factory=list)
    eps_used: list[float] = field(default_factory=list)
    stage_iterations: list[int] = field(default_factory=list)
    message: str = ""
    tol: float = np.nan


def gradient_of(u: ScalarField) -> np.ndarray:
    """Per-triangle gradient of the interpolant, shape ``(n_triangles, 2)``."""
    grid = u.grid
    return np.einsum("ta,tad->td", u.values[grid.triangles], grid.grad_hat)


def regularized_flux(grad: np.ndarray, p, eps: float) -> np.ndarray:
    """``(eps^2 + |xi|^2)^{(p-2)/2} xi``; zero where ``xi = 0`` and ``eps = 0``."""
    grad = np.asarray(grad, dtype=float)
    s = eps * eps + np.einsum("...d,...d->...", grad, grad)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(s > 0, s ** ((np.asarray(p) - 2.0) / 2.0), 0.0)
    return w[..., None] * grad


class _Functional:
    """J_eps restricted to a set of triangles."""

    def __init__(self, grid: Grid, tris, p, g=None, F=None):
        self.grid = grid
        self.tris = np.arange(grid.n_triangles) if tris is None else np.asarray(tris)
        self.conn = grid.triangles[self.tris]
        self.G = grid.grad_hat[self.tris]
        self.area = grid.areas[self.tris]
        self.p = np.asarray(p, dtype=float)[self.tris]
        self.g = None if g is None or not np.any(g) else np.asarray(g, dtype=float)[self.tris]
        self.F = None if F is None or not np.any(F) else np.asarray(F, dtype=float)[self.tris]

    def grads(self, u):
        return np.einsum("ta,tad->td", u[self.conn], self.G)

    def value(self, u, eps):
        gu = self.grads(u)
        dens = (eps * eps + np.einsum("td,td->t", gu, gu)) ** (self.p / 2.0) / self.p
        if self.g is not None:
            dens = dens + self.g * u[self.conn].mean(axis=1)
        if self.F is not None:
            dens = dens - np.einsum("td,td->t", self.F, gu)
        return pairwise_sum(self.area * dens)

    def gradient(self, u, eps):
        """dJ/du at every grid node (zero off the triangle set)."""
        gu = self.grads(u)
        flux = regularized_flux(gu, self.p, eps)
        if self.F is not None:
            flux = flux - self.F
        local = self.area[:, None] * np.einsum("td,tad->ta", flux, self.G)
        if self.g is not None:
            local = local + (self.area * self.g / 3.0)[:, None]
        return np.bincount(self.conn.ravel(), local.ravel(), minlength=self.grid.n_nodes)

    def decrement(self, u, d, alpha, eps):
        """J(u + alpha d) - J(u), evaluated without cancellation."""
        gu = self.grads(u)
        gd = alpha * self.grads(d)
        s0 = eps * eps + np.einsum("td,td->t", gu, gu)
        ds = np.einsum("td,td->t", gd, 2.0 * gu + gd)
        half = self.p / 2.0
        dens = s0 ** half * np.expm1(half * np.log1p(ds / s0)) / self.p
        if self.g is not None:
            dens = dens + self.g * alpha * d[self.conn].mean(axis=1)
        if self.F is not None:
            dens = dens - np.einsum("td,td->t", self.F, gd)
        return pairwise_sum(self.area * dens)

    def stiffness(self, u, eps):
        gu = self.grads(u)
        w = (eps * eps + np.einsum("td,td->t", gu, gu)) ** ((self.p - 2.0) / 2.0)
        local = (self.area * w)[:, None, None] * np.einsum("tad,tbd->tab", self.G, self.G)
        rows = np.repeat(self.conn, 3, axis=1).ravel()
        cols = np.tile(self.conn, (1, 3)).ravel()
        n = self.grid.n_nodes
        return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    def linear_part(self):
        """Node vector of the u-linear terms of J (independent of u)."""
        local = np.zeros((self.tris.size, 3))
        if self.g is not None:
            local += (self.area * self.g / 3.0)[:, None]
        if self.F is not None:
            local -= self.area[:, None] * np.einsum("td,tad->ta", self.F, self.G)
        return np.bincount(self.conn.ravel(), local.ravel(), minlength=self.grid.n_nodes)


def _solve_linear(A, b, x0, tol):
    if A.shape[0] <= 400:
        return spla.spsolve(A.tocsc(), b)
    # pyamg draws its spectral-radius start vectors from the global RNG
    state = np.random.get_state()
    np.random.seed(0)
    try:
        ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric")
        return ml.solve(b, x0=x0, tol=tol, accel="cg", maxiter=500)
    finally:
        np.random.set_state(state)


def _minimize(fn: _Functional, u0, free, eps_schedule, tol, max_iter, linear_tol,
              stage_tol_factor=1e4) -> tuple[np.ndarray, SolveDiagnostics]:
    if not eps_schedule or min(eps_schedule) <= 0:
        raise ValueError("eps schedule must be non-empty with positive entries")
    u = np.array(u0, dtype=float)
    diag = SolveDiagnostics(tol=tol)
    lin = fn.linear_part()
    n_stage = len(eps_schedule)
    for k, eps in enumerate(eps_schedule):
        final = k == n_stage - 1
        stage_tol = tol if final else tol * stage_tol_factor
        diag.eps_used.append(eps)
        J = fn.value(u, eps)
        if not np.isfinite(J):
            raise SolverError(f"non-finite energy at eps={eps:g}")
        diag.energy_history.append(J)
        its = 0
        while True:
            r = fn.gradient(u, eps)[free]
            res = float(np.abs(r).max()) if r.size else 0.0
            if res <= stage_tol:
                break
            if its >= max_iter:
                break
            K = fn.stiffness(u, eps)
            Kff = K[free][:, free]
            rhs = -(lin[free] + (K @ np.where(_mask(u.size, free), 0.0, u))[free])
            x = _solve_linear(Kff, rhs, u[free], linear_tol)
            d = np.zeros_like(u)
            d[free] = x - u[free]
            slope = float(r @ d[free])
            if not slope < 0:
                diag.message = f"no descent direction at eps={eps:g}"
                break
            alpha, dJ = 1.0, None
            while alpha > 1e-12:
                dJ = fn.decrement(u, d, alpha, eps)
                if not np.isfinite(dJ):
                    raise SolverError(f"non-finite energy at eps={eps:g}")
                if dJ <= 1e-4 * alpha * slope:
                    break
                alpha *= 0.5
            else:
                diag.message = f"line search stalled at eps={eps:g}, residual {res:.3e}"
                break
            u = u + alpha * d
            its += 1
            diag.decrements.append(dJ)
            J = fn.value(u, eps)
            if not np.isfinite(J):
                raise SolverError(f"non-finite energy at eps={eps:g}")
            diag.energy_history.append(J)
        diag.iterations += its
        diag.stage_iterations.append(its)
        diag.residual = res
        log.debug("eps=%g: %d iterations, residual %.3e", eps, its, res)
    diag.converged = diag.residual <= tol
    if not diag.converged and not diag.message:
        diag.message = f"residual {diag.residual:.3e} > tol {tol:.1e} after max_iter"
    return u, diag


def _mask(n, idx):
    m = np.zeros(n, dtype=bool)
    m[idx] = True
    return m


def energy(u: ScalarField, problem: ProblemSpec, eps: float) -> float:
    """Regularized energy ``J_eps(u)`` of the whole problem."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    fn = _Functional(problem.grid, None, problem.exponent.values, problem.g, problem.F)
    return fn.value(u.values, eps)


def residual(u: ScalarField, problem: ProblemSpec, eps: float) -> np.ndarray:
    """Weak residual tested against the hat functions of interior nodes.

    Equals the gradient of :func:`energy` with respect to the interior node
    values, ordered as ``grid.interior_nodes``.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    fn = _Functional(problem.grid, None, problem.exponent.values, problem.g, problem.F)
    return fn.gradient(u.values, eps)[problem.grid.interior_nodes]


def solve_dirichlet(problem: ProblemSpec, initial: ScalarField | None = None
                    ) -> tuple[ScalarField, SolveDiagnostics]:
    """Minimize ``J_eps`` with the boundary values of ``problem``.

    Runs the eps-continuation schedule; non-convergence is flagged in the
    diagnostics and the last iterate is returned.
    """
    grid = problem.grid
    u0 = np.zeros(grid.n_nodes) if initial is None else initial.values.copy()
    u0[grid.boundary_mask] = problem.boundary[grid.boundary_mask]
    fn = _Functional(grid, None, problem.exponent.values, problem.g, problem.F)
    u, diag = _minimize(fn, u0, grid.interior_nodes, problem.eps_schedule,
                        problem.tol, problem.max_iter, problem.linear_tol)
    if not diag.converged:
        warnings.warn(f"solve_dirichlet did not converge: {diag.message}", ConvergenceWarning)
    return ScalarField(grid, u), diag


def pxharmonic_replacement(u: ScalarField, patch: Patch, problem: ProblemSpec,
                           return_diagnostics: bool = False):
    """p(x)-harmonic function on the patch with the boundary values of ``u``.

    Minimizes ``int_patch (eps^2 + |grad v|^2)^{p/2} / p`` over the interior
    patch nodes; ``v = u`` on the patch boundary and outside the patch.
    """
    if patch.interior_nodes.size == 0:
        raise UnderResolvedBall(f"patch at {patch.center} r={patch.radius:g} has no interior nodes")
    fn = _Functional(u.grid, patch.triangle_indices, problem.exponent.values)
    v, diag = _minimize(fn, u.values, patch.interior_nodes, problem.eps_schedule,
                        problem.tol, problem.max_iter, problem.linear_tol)
    if not diag.converged:
        warnings.warn(f"replacement did not converge: {diag.message}", ConvergenceWarning)
    out = ScalarField(u.grid, v)
    return (out, diag) if return_diagnostics else out


def patch_energy(u: ScalarField, patch: Patch, problem: ProblemSpec, eps: float) -> float:
    """``J_eps`` of ``u`` on the patch with the source and flux terms dropped."""
    fn = _Functional(u.grid, patch.triangle_indices, problem.exponent.values)
    return fn.value(u.values, eps)
