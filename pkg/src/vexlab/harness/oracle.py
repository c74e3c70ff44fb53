"""Radial reference solutions computed by 1-D quadrature.

For ``u = u(r)`` with constant ``p`` in the plane the equation reduces to

    (r |u'|^{p-2} u')' = r g + (r F_r)',

so ``|u'|^{p-2} u' = (1/r) int_0^r s g(s) ds + F_r(r) + c/r``. Regularity at
the origin means ``c = 0``; annuli use ``c`` found by shooting. Nothing
here touches the finite element code.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


class _Antiderivative:
    """``x -> int_{edges[0]}^x f`` via composite Gauss-Legendre on ``edges``."""

    def __init__(self, f, edges):
        self.f = f
        self.edges = edges
        if edges[0] == 0.0:
            _check_integrable_at_zero(f, edges[1])
        a, b = edges[:-1], edges[1:]
        cells = self._gauss(a, b)
        self.cum = np.concatenate([[0.0], np.cumsum(cells)])

    def _gauss(self, a, b):
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        x = mid[..., None] + half[..., None] * _GL_X
        return half * (self.f(x) * _GL_W).sum(axis=-1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, self.edges.size - 2)
        a = self.edges[k]
        empty = x <= a
        part = self._gauss(a, np.where(empty, self.edges[k + 1], x))
        return self.cum[k] + np.where(empty, 0.0, part)


def _check_integrable_at_zero(f, x_small):
    """Reject integrands with ``x |f(x)|`` not decaying as ``x -> 0``.

    An integrable power ``x^gamma`` (``gamma > -1``) gives the ratio
    ``1e-4^(gamma+1) < 1`` below; ``1/x`` gives exactly 1.
    """
    xs = np.array([x_small, 1e4 * x_small])
    with np.errstate(all="ignore"):
        near, far = xs * np.abs(f(xs))
    if not np.isfinite(near) or (far > 0 and near >= 0.999 * far):
        raise ValueError("non-integrable radial data at r = 0")


def _edges(lo, hi, n_sub, grading):
    t = np.linspace(0.0, 1.0, n_sub + 1)
    if lo == 0.0:
        return hi * t ** grading
    return lo + (hi - lo) * t


def radial_oracle(p: float, r, g=None, F_r=None, r_ref: float = 0.0, u_ref: float = 0.0,
                  flux_const: float = 0.0, n_sub: int = 20000, grading: float = 8.0) -> np.ndarray:
    """``u(r)`` for constant ``p`` with ``u(r_ref) = u_ref``.

    ``g`` and ``F_r`` are callables of ``r`` (``None`` means zero). With
    ``flux_const = 0`` the integration starts at the origin on a mesh graded
    like ``t**grading`` so algebraic singularities there stay resolved.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    if n_sub < 10_000:
        raise ValueError("at least 1e4 subintervals")
    r = np.asarray(r, dtype=float)
    hi = float(max(r.max(), r_ref))
    lo = 0.0 if flux_const == 0.0 else float(min(r.min(), r_ref))
    if lo == 0.0 and flux_const != 0.0:
        raise ValueError("a nonzero flux constant needs r > 0")
    edges = _edges(lo, hi, n_sub, grading)

    G = _Antiderivative(lambda s: s * g(s), _edges(0.0, hi, n_sub, grading)) if g is not None else None

    def slope(x):
        A = np.zeros_like(x)
        if F_r is not None:
            A = A + F_r(x)
        if G is not None:
            A = A + G(x) / x
        if flux_const:
            A = A + flux_const / x
        return np.sign(A) * np.abs(A) ** (1.0 / (p - 1.0))

    U = _Antiderivative(slope, edges)
    out = u_ref + U(r) - U(np.array(r_ref))
    if not np.isfinite(out).all():
        raise ValueError("non-integrable radial data")
    return out


def radial_shooting(p: float, r_in: float, r_out: float, u_in: float, u_out: float,
                    g=None, F_r=None, **kw) -> float:
    """Flux constant ``c`` matching ``u(r_in) = u_in`` and ``u(r_out) = u_out``."""
    if not 0 < r_in < r_out:
        raise ValueError("need 0 < r_in < r_out")

    def miss(c):
        return radial_oracle(p, [r_out], g, F_r, r_in, u_in, flux_const=c, **kw)[0] - u_out

    lo, hi = -1.0, 1.0
    while miss(lo) > 0:
        lo *= 4.0
    while miss(hi) < 0:
        hi *= 4.0
    return brentq(miss, lo, hi, xtol=1e-15, rtol=1e-13)
