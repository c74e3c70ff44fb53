"""Manufactured problems with known solutions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..mesh import Grid, build_grid
from ..spaces import ExponentField, ProblemSpec

PRESETS = ("linear", "quadratic", "radial-flux", "radial-source", "px-smooth")


@dataclass
class ManufacturedProblem:
    name: str
    problem: ProblemSpec
    exact: Callable | None
    center: tuple[float, float] | None = None
    holder_exponent: float | None = None
    radial: dict | None = field(default=None, repr=False)
    params: dict = field(default_factory=dict)


def default_grid(n_nodes: int = 65, bounds=(0.0, 1.0, 0.0, 1.0)) -> Grid:
    return build_grid(bounds, n_nodes, n_nodes)


def _flux_of_gradient(grad, p):
    """Analytic flux ``|grad u|^{p-2} grad u`` as a function of position."""
    def flux(x, y):
        gx, gy = grad(x, y)
        pp = p(x, y)
        w = np.hypot(gx, gy) ** (pp - 2.0)
        return w * gx, w * gy
    return flux


def numeric_divergence(flux, x, y, h):
    """Fourth-order central differences of ``d/dx flux_x + d/dy flux_y``."""
    def d(f, shift):
        return (-f(*shift(2.0)) + 8.0 * f(*shift(1.0)) - 8.0 * f(*shift(-1.0)) + f(*shift(-2.0))) / (12.0 * h)
    fx = lambda a, b: flux(a, b)[0]
    fy = lambda a, b: flux(a, b)[1]
    return d(fx, lambda k: (x + k * h, y)) + d(fy, lambda k: (x, y + k * h))


def px_exponent(x, y):
    return 1.5 + 0.4 * np.sin(np.pi * x) * np.sin(np.pi * y)


def px_exponent_grad(x, y):
    c = 0.4 * np.pi
    return (c * np.cos(np.pi * x) * np.sin(np.pi * y), c * np.sin(np.pi * x) * np.cos(np.pi * y))


def px_solution(x, y):
    return x + 0.5 * y + 0.25 * np.sin(np.pi * x) * np.sin(np.pi * y)


def px_solution_grad(x, y):
    c = 0.25 * np.pi
    return (1.0 + c * np.cos(np.pi * x) * np.sin(np.pi * y), 0.5 + c * np.sin(np.pi * x) * np.cos(np.pi * y))


def manufactured_problem(name: str, params: dict | None = None, grid: Grid | None = None,
                         **solver) -> ManufacturedProblem:
    """Build a preset problem; ``solver`` entries go to :class:`ProblemSpec`.

    Radial presets are centered at the middle of the grid unless
    ``params["center"]`` says otherwise.
    """
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    params = dict(params or {})
    grid = grid or default_grid()
    a1, b1, a2, b2 = grid.bounds
    s = float(params.get("s", 4.0))
    n = grid.n

    if name in ("linear", "quadratic"):
        p = float(params.get("p", 2.0))
        if p != 2.0:
            raise ValueError(f"preset {name!r} is defined for p = 2 only")
        t1, t2 = float(params.get("t1", 3.0)), float(params.get("t2", 3.0))
        if name == "linear":
            exact = lambda x, y: x + 0.0 * y
            g = 0.0
        else:
            exact = lambda x, y: x ** 2 + y ** 2
            g = 2.0 * n
        prob = ProblemSpec(grid, ExponentField.constant(grid, p, s), g, 0.0, t1, t2,
                           grid.interpolate(exact), **solver)
        return ManufacturedProblem(name, prob, exact, holder_exponent=1.0, params=params)

    if name in ("radial-flux", "radial-source"):
        p = float(params.get("p", 2.0))
        cx, cy = params.get("center", (0.5 * (a1 + b1), 0.5 * (a2 + b2)))
        cx, cy = float(cx), float(cy)
        rad = lambda x, y: np.hypot(x - cx, y - cy)
        bc = grid.barycenters
        rb = rad(bc[:, 0], bc[:, 1])
        if name == "radial-flux":
            a = float(params.get("a", -0.5))
            if a <= -(p - 1.0):
                raise ValueError(f"radial-flux needs a > -(p-1) for F in some admissible L^t2, got a={a}")
            t2 = float(params.get("t2", 3.0))
            t1 = float(params.get("t1", 3.0))
            if not a * t2 > -n:
                raise ValueError(f"F = r^a e_r is not in L^t2 for a={a}, t2={t2}")
            e = a / (p - 1.0) + 1.0
            exact = lambda x, y: rad(x, y) ** e / e
            F = np.column_stack([(bc[:, 0] - cx), (bc[:, 1] - cy)]) * (rb ** (a - 1.0))[:, None]
            g = 0.0
            radial = {"F_r": lambda r: r ** a, "g": None}
        else:
            b = float(params.get("b", -1.5))
            if b <= -min(p, n):
                raise ValueError(f"radial-source needs b > -min(p, n), got b={b}")
            default_t1 = 0.5 * (n / p + n / -b) if b < 0 else 3.0
            t1 = float(params.get("t1", default_t1))
            t2 = float(params.get("t2", 3.0))
            if b < 0 and not b * t1 > -n:
                raise ValueError(f"g = r^b is not in L^t1 for b={b}, t1={t1}")
            e = (b + 1.0) / (p - 1.0) + 1.0
            k = (b + 2.0) ** (-1.0 / (p - 1.0))
            exact = lambda x, y: k * rad(x, y) ** e / e
            g = rb ** b
            F = 0.0
            radial = {"F_r": None, "g": lambda r: r ** b}
        prob = ProblemSpec(grid, ExponentField.constant(grid, p, s), g, F, t1, t2,
                           grid.interpolate(exact), **solver)
        return ManufacturedProblem(name, prob, exact, (cx, cy), min(e, 1.0), radial | {"p": p}, params)

    # px-smooth
    if grid.bounds != (0.0, 1.0, 0.0, 1.0):
        raise ValueError("px-smooth is defined on the unit square")
    t1, t2 = float(params.get("t1", 4.0)), float(params.get("t2", 8.0))
    exp_field = ExponentField.from_function(grid, px_exponent, grad=px_exponent_grad, s=s,
                                            p_minus=1.5, p_plus=1.9)
    flux = _flux_of_gradient(px_solution_grad, px_exponent)
    bc = grid.barycenters
    step = 0.25 * min(grid.hx, grid.hy)
    g = numeric_divergence(flux, bc[:, 0], bc[:, 1], step)
    prob = ProblemSpec(grid, exp_field, g, 0.0, t1, t2, grid.interpolate(px_solution), **solver)
    return ManufacturedProblem(name, prob, px_solution, holder_exponent=1.0, params=params)


def l2_error(grid: Grid, u_values: np.ndarray, exact) -> float:
    """L2 norm of ``u_h - exact`` by the edge-midpoint rule (exact for quadratics)."""
    tri = grid.triangles
    P = grid.nodes[tri]
    acc = []
    for a, b in ((0, 1), (1, 2), (2, 0)):
        mid = 0.5 * (P[:, a] + P[:, b])
        uh = 0.5 * (u_values[tri[:, a]] + u_values[tri[:, b]])
        acc.append((uh - exact(mid[:, 0], mid[:, 1])) ** 2)
    total = float(np.sum(grid.areas * (acc[0] + acc[1] + acc[2]) / 3.0))
    return math.sqrt(total)
