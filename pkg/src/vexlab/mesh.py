"""Structured triangulations of a rectangle and ball-shaped sub-patches.

Nodes are numbered row-major (``k = j * nx + i``, x fastest). Every square
cell is split along its ``(i, j) -> (i+1, j+1)`` diagonal into two
triangles, so all triangles are right isosceles and the piecewise-linear
stiffness matrix has non-positive off-diagonal entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class UnderResolvedBall(ValueError):
    """No triangle (or no interior node) of the grid fits inside the ball."""


@dataclass(frozen=True, eq=False)
class Grid:
    """Criss-cross P1 triangulation of ``(a1, b1) x (a2, b2)``."""

    bounds: tuple[float, float, float, float]
    nx: int
    ny: int
    nodes: np.ndarray = field(repr=False)
    triangles: np.ndarray = field(repr=False)
    areas: np.ndarray = field(repr=False)
    grad_hat: np.ndarray = field(repr=False)
    boundary_mask: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def n(self) -> int:
        return 2

    @property
    def hx(self) -> float:
        return (self.bounds[1] - self.bounds[0]) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.bounds[3] - self.bounds[2]) / (self.ny - 1)

    @property
    def diameter(self) -> float:
        a1, b1, a2, b2 = self.bounds
        return float(np.hypot(b1 - a1, b2 - a2))

    @property
    def area(self) -> float:
        a1, b1, a2, b2 = self.bounds
        return (b1 - a1) * (b2 - a2)

    @property
    def barycenters(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    @property
    def boundary_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.boundary_mask)

    @property
    def interior_nodes(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    def distance_to_boundary(self, x0) -> float:
        a1, b1, a2, b2 = self.bounds
        x, y = float(x0[0]), float(x0[1])
        return min(x - a1, b1 - x, y - a2, b2 - y)

    def interpolate(self, func) -> np.ndarray:
        """Node values of ``func(x, y)``."""
        return np.asarray(func(self.nodes[:, 0], self.nodes[:, 1]), dtype=float) * np.ones(self.n_nodes)

    def sample(self, func) -> np.ndarray:
        """Barycenter samples of ``func(x, y)``, one per triangle."""
        b = self.barycenters
        return np.asarray(func(b[:, 0], b[:, 1]), dtype=float) * np.ones(self.n_triangles)


def build_grid(bounds, nx: int, ny: int) -> Grid:
    """Triangulate ``bounds = (a1, b1, a2, b2)`` with ``nx * ny`` nodes.

    Produces ``2 (nx - 1)(ny - 1)`` triangles, all oriented counter-clockwise.
    """
    if int(nx) != nx or int(ny) != ny or nx < 2 or ny < 2:
        raise ValueError(f"node counts must be integers >= 2, got nx={nx}, ny={ny}")
    nx, ny = int(nx), int(ny)
    a1, b1, a2, b2 = (float(v) for v in bounds)
    if not (np.isfinite([a1, b1, a2, b2]).all() and b1 > a1 and b2 > a2):
        raise ValueError(f"degenerate rectangle {bounds!r}")

    xs = np.linspace(a1, b1, nx)
    ys = np.linspace(a2, b2, ny)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1))
    k00 = (j * nx + i).ravel()
    k10, k01, k11 = k00 + 1, k00 + nx, k00 + nx + 1
    lower = np.column_stack([k00, k10, k11])
    upper = np.column_stack([k00, k11, k01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)

    P = nodes[triangles]
    e1 = P[:, 1] - P[:, 0]
    e2 = P[:, 2] - P[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    areas = 0.5 * det
    # gradients of the three barycentric coordinates, constant per triangle
    grad_hat = np.empty((triangles.shape[0], 3, 2))
    for a in range(3):
        p, q = P[:, (a + 1) % 3], P[:, (a + 2) % 3]
        grad_hat[:, a, 0] = (p[:, 1] - q[:, 1]) / det
        grad_hat[:, a, 1] = (q[:, 0] - p[:, 0]) / det

    ii = np.tile(np.arange(nx), ny)
    jj = np.repeat(np.arange(ny), nx)
    boundary_mask = (ii == 0) | (ii == nx - 1) | (jj == 0) | (jj == ny - 1)

    for arr in (nodes, triangles, areas, grad_hat, boundary_mask):
        arr.setflags(write=False)
    return Grid((a1, b1, a2, b2), nx, ny, nodes, triangles, areas, grad_hat, boundary_mask)


@dataclass(frozen=True, eq=False)
class Patch:
    """Inner approximation of the closed ball ``B_r(x0)`` by whole triangles."""

    grid: Grid = field(repr=False)
    center: tuple[float, float]
    radius: float
    triangle_indices: np.ndarray = field(repr=False)
    boundary_nodes: np.ndarray = field(repr=False)
    interior_nodes: np.ndarray = field(repr=False)
    inside_domain: bool = True

    @property
    def n_triangles(self) -> int:
        return self.triangle_indices.size

    @property
    def nodes(self) -> np.ndarray:
        return np.union1d(self.boundary_nodes, self.interior_nodes)

    @property
    def area(self) -> float:
        return pairwise_sum(self.grid.areas[self.triangle_indices])


def ball_patch(grid: Grid, x0, r: float) -> Patch:
    """Collect every triangle whose three vertices lie in the closed ball.

    A ball poking out of the domain is not an error here; the result carries
    ``inside_domain=False`` and callers that need containment reject it.
    """
    r = float(r)
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    cx, cy = float(x0[0]), float(x0[1])
    d = np.hypot(grid.nodes[:, 0] - cx, grid.nodes[:, 1] - cy)
    in_ball = d <= r * (1.0 + 1e-12)
    full = in_ball[grid.triangles].all(axis=1)
    members = np.flatnonzero(full)
    if members.size == 0:
        raise UnderResolvedBall(
            f"under-resolved ball: no triangle fits in B({cx:g},{cy:g}; r={r:g}) "
            f"at h={max(grid.hx, grid.hy):g}")

    patch_nodes = np.unique(grid.triangles[members])
    touched_outside = np.zeros(grid.n_nodes, dtype=bool)
    touched_outside[grid.triangles[~full].ravel()] = True
    on_edge = touched_outside[patch_nodes] | grid.boundary_mask[patch_nodes]
    inside = grid.distance_to_boundary((cx, cy)) >= r
    return Patch(grid, (cx, cy), r, members, patch_nodes[on_edge], patch_nodes[~on_edge], inside)


def pairwise_sum(x: np.ndarray) -> float:
    # numpy reduces contiguous float arrays pairwise in a fixed order
    return float(np.sum(np.ascontiguousarray(x, dtype=float)))


def region_triangles(region) -> np.ndarray | slice:
    if isinstance(region, Patch):
        return region.triangle_indices
    return slice(None)


def region_grid(region) -> Grid:
    return region.grid if isinstance(region, Patch) else region


def restrict(region, values) -> np.ndarray:
    """Per-triangle ``values`` restricted to ``region``.

    Accepts either one value per region triangle or, for a patch, one value
    per grid triangle.
    """
    values = np.asarray(values, dtype=float)
    grid = region_grid(region)
    n_region = region.n_triangles
    if values.shape[0] == n_region:
        return values
    if isinstance(region, Patch) and values.shape[0] == grid.n_triangles:
        return values[region.triangle_indices]
    raise ValueError(f"expected {n_region} per-triangle values, got {values.shape[0]}")


def integrate(region, values) -> float:
    """Integral of a per-triangle constant function over a grid or patch."""
    vals = restrict(region, values)
    areas = region_grid(region).areas[region_triangles(region)]
    return pairwise_sum(vals * areas)
