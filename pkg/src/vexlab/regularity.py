"""Hölder-regularity exponents, constants and empirical decay checks.

Every "check" returns a :class:`Verdict` carrying the threshold, the
measured value and the raw data it was computed from, so a report row can
always be traced back to a profile.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .mesh import Grid, Patch, UnderResolvedBall, ball_patch, integrate
from .solver import ScalarField, gradient_of
from .spaces import ExponentField

LIPSCHITZ_OR_BETTER = "Lipschitz-or-better"


class PreconditionError(ValueError):
    pass


class AlphaExponents(NamedTuple):
    alpha: float
    alpha1: float
    alpha2: float


@dataclass(frozen=True)
class RegularityConstants:
    n: int
    s: float
    beta: float
    delta: float
    q: float
    m: float
    eps0: float
    K: float
    R1: float
    c_abstract: float = 1.0

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in ("n", "s", "beta", "delta", "q", "m", "eps0", "K", "R1")}


@dataclass
class Verdict:
    name: str
    threshold: float
    measured: float
    margin: float
    passed: bool
    data: dict = field(default_factory=dict, repr=False)


@dataclass
class DecayProfile:
    center: tuple[float, float]
    radii: np.ndarray
    phi: np.ndarray
    mode: str
    p_m: float
    osc: np.ndarray | None = None
    n_triangles: np.ndarray | None = None

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        if self.radii.size > 1 and not (np.diff(self.radii) < 0).all():
            raise ValueError("radii must be strictly decreasing")
        if self.phi.shape != self.radii.shape:
            raise ValueError("one phi value per radius")
        if (self.phi < 0).any():
            raise ValueError("phi must be non-negative")

    @property
    def nondecreasing(self) -> bool:
        # radii are stored decreasing, so phi must be non-increasing along the array
        return bool((np.diff(self.phi) <= 0).all())


class SlopeFit(NamedTuple):
    slope: float
    residual: float


def compute_alpha(n: int, p_m: float, t1: float, t2: float) -> AlphaExponents:
    """Hölder exponent ``min(alpha1, alpha2)`` granted by the data integrability.

    ``alpha1 = 1 - n/(t1 p_m)`` and ``alpha2 = 1 - n/(t2 (p_m - 1))``;
    infinite ``t1``/``t2`` stand for bounded data.
    """
    if not t1 > n / p_m:
        raise PreconditionError(f"t1 > n/p_m violated: t1={t1}, n/p_m={n / p_m}")
    if not (p_m > 1 and t2 > n / (p_m - 1)):
        raise PreconditionError(f"t2 > n/(p_m-1) violated: t2={t2}, p_m={p_m}")
    a1 = 1.0 - n / (t1 * p_m)
    a2 = 1.0 - n / (t2 * (p_m - 1.0))
    return AlphaExponents(min(a1, a2), a1, a2)


def compute_regularity_constants(n: int, s: float, grad_p_norm: float, diam: float,
                            energy_total: float, c_abstract: float = 1.0) -> RegularityConstants:
    """Explicit exponents and admissible radius of the Morrey decay estimate.

    ``c_abstract`` stands in for the unquantified constant in the admissible
    radius ``R1``; it is an input, not a derived value.
    """
    if not s > n:
        raise PreconditionError(f"s > n violated: s={s}, n={n}")
    if not c_abstract > 0:
        raise PreconditionError("c_abstract must be positive")
    beta = 1.0 - n / s
    delta = (s - n) / (2.0 * s * n)
    q = (n + s) / 2.0
    m = s * q * (1.0 + delta) / (s - q)
    eps0 = 0.5 * min(1.0, m - 1.0)
    K = grad_p_norm * (1.0 + (diam / 2.0) ** beta * grad_p_norm)
    R1 = min(diam / 16.0, c_abstract * (energy_total + 1.0) ** (-m / beta))
    return RegularityConstants(n, float(s), beta, delta, q, m, eps0, K, R1, c_abstract)


def radius_ladder(grid: Grid, x0, R: float, count: int = 9, min_triangles: int = 20) -> np.ndarray:
    """Geometric radii ``R 2^{-i/2}``, dropping balls with too few triangles."""
    radii = []
    for i in range(count):
        r = R * 2.0 ** (-i / 2.0)
        try:
            if ball_patch(grid, x0, r).n_triangles >= min_triangles:
                radii.append(r)
        except UnderResolvedBall:
            pass
    return np.array(radii)


def _patches(grid: Grid, x0, radii, double_inside=True) -> list[Patch]:
    out = []
    dist = grid.distance_to_boundary(x0)
    for r in radii:
        if double_inside and 2.0 * r > dist * (1.0 + 1e-12):
            raise PreconditionError(f"ball B_2r escapes the domain: r={r:g}, dist={dist:g}")
        out.append(ball_patch(grid, x0, r))
    return out


def decay_profile(u: ScalarField, p: ExponentField, x0, radii, mode: str = "pm",
                  with_osc: bool = True) -> DecayProfile:
    """Ball integrals of ``|grad u|^{p(x)}`` (``mode="px"``) or ``|grad u|^{p_m}``.

    ``p_m`` is the smallest exponent on the largest ball.
    """
    if mode not in ("px", "pm"):
        raise ValueError(f"mode must be 'px' or 'pm', got {mode!r}")
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    patches = _patches(u.grid, x0, radii)
    gmag = np.hypot(*gradient_of(u).T)
    p_m = float(p.values[patches[0].triangle_indices].min())
    dens = gmag ** p.values if mode == "px" else gmag ** p_m
    phi = np.array([integrate(P, dens) for P in patches])
    osc = None
    if with_osc:
        osc = np.array([float(np.ptp(u.values[P.nodes])) for P in patches])
    counts = np.array([P.n_triangles for P in patches])
    return DecayProfile(tuple(map(float, x0)), radii, phi, mode, p_m, osc, counts)


def _loglog_fit(r, y) -> tuple[float, float, float]:
    lr, ly = np.log(r), np.log(y)
    A = np.column_stack([lr, np.ones_like(lr)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res ** 2)))


def fit_decay_slope(profile: DecayProfile) -> SlopeFit:
    """Least-squares slope of ``log phi`` against ``log r``."""
    keep = profile.phi > 0
    if (~keep).any():
        warnings.warn(f"dropping {int((~keep).sum())} zero entries from decay profile")
    if keep.sum() < 2:
        raise ValueError("fewer than 2 usable radii for the decay fit")
    slope, _, res = _loglog_fit(profile.radii[keep], profile.phi[keep])
    return SlopeFit(slope, res)


def check_morrey_decay(profile: DecayProfile, n: int, p_m: float, alpha: float,
                       margin: float = 0.05) -> Verdict:
    """Fitted decay rate against ``n - p_m + alpha p_m``."""
    threshold = n - p_m + alpha * p_m
    if not (profile.phi > 0).any():
        return Verdict("morrey_decay", threshold, math.inf, margin, True,
                       {"profile": profile, "note": "vacuous: phi = 0"})
    fit = fit_decay_slope(profile)
    return Verdict("morrey_decay", threshold, fit.slope, margin,
                   fit.slope >= threshold - margin, {"profile": profile, "fit_residual": fit.residual})


def check_energy_comparison(u: ScalarField, v: ScalarField, patch: Patch, p: ExponentField,
                            slack: float = 1e-8) -> Verdict:
    """Energy of the replacement against ``(p+/p-)`` times the energy of ``u``."""
    pv = p.values[patch.triangle_indices]
    Eu = integrate(patch, np.hypot(*gradient_of(u).T)[patch.triangle_indices] ** pv)
    Ev = integrate(patch, np.hypot(*gradient_of(v).T)[patch.triangle_indices] ** pv)
    bound = p.p_plus / p.p_minus
    ratio = Ev / Eu if Eu > 0 else (0.0 if Ev == 0 else math.inf)
    return Verdict("energy_comparison", bound, ratio, slack, Ev <= bound * Eu + slack,
                   {"energy_u": Eu, "energy_v": Ev, "center": patch.center, "radius": patch.radius})


def iteration_constants(A: float, a: float, b: float) -> tuple[float, float]:
    """``(eps_max, C_bound)`` of the iteration lemma for the given ``A, a, b``.

    With ``gamma = (a + b)/2`` and ``tau = (2 max(A, 1))^{-1/(a - gamma)}``,
    ``eps <= tau^a`` makes one step contract by ``tau^gamma``; summing the
    geometric series gives ``C = tau^{-b} max(1, A tau^{-b} / (1 - tau^{gamma - b}))``.
    """
    gamma = 0.5 * (a + b)
    tau = (2.0 * max(A, 1.0)) ** (-1.0 / (a - gamma))
    eps_max = tau ** a
    C = tau ** (-b) * max(1.0, A * tau ** (-b) / (1.0 - tau ** (gamma - b)))
    return eps_max, C


def check_iteration_lemma(profile: DecayProfile, A: float, a: float, b: float, eps: float,
                          eps_max: float | None = None) -> Verdict:
    """Hypothesis and conclusion of the iteration lemma on every sampled pair.

    Hypothesis: ``phi(r) <= A((r/R)^a + eps) phi(R) + A R^b``.
    Conclusion: ``phi(r) <= C (r/R)^b (phi(R) + R^b)`` with ``C`` no larger
    than the constant the lemma provides.
    """
    if not a > b >= 0:
        raise PreconditionError(f"need a > b >= 0, got a={a}, b={b}")
    if not profile.nondecreasing:
        raise ValueError("profile is not non-decreasing in r")
    r = profile.radii
    phi = profile.phi
    i, j = np.triu_indices(r.size, k=1)  # r[j] < r[i]
    small, big = r[j], r[i]
    ratio = small / big
    hyp_rhs = ((ratio ** a + eps) * phi[i] + big ** b)
    A_min = float(np.max(np.where(hyp_rhs > 0, phi[j] / hyp_rhs, 0.0))) if i.size else 0.0
    concl_rhs = ratio ** b * (phi[i] + big ** b)
    C_min = float(np.max(phi[j] / concl_rhs)) if i.size else 0.0
    lemma_eps_max, C_bound = iteration_constants(A, a, b)
    if eps_max is None:
        eps_max = lemma_eps_max
    hypothesis = A_min <= A
    conclusion = C_min <= C_bound
    small_eps = eps <= eps_max
    return Verdict("iteration_lemma", C_bound, C_min, 0.0, hypothesis and conclusion and small_eps,
                   {"A": A, "A_min": A_min, "C_fit": C_min, "C_bound": C_bound, "eps": eps,
                    "eps_max": eps_max, "hypothesis": hypothesis, "conclusion": conclusion,
                    "eps_flag": not small_eps, "profile": profile})


def dirichlet_growth_check(u: ScalarField, x0, radii, alpha: float, margin: float = 0.05) -> Verdict:
    """Growth of ``int_{B_r} |grad u|`` against ``r^{n-1+alpha}``."""
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    patches = _patches(u.grid, x0, radii)
    gmag = np.hypot(*gradient_of(u).T)
    psi = np.array([integrate(P, gmag) for P in patches])
    n = u.grid.n
    threshold = n - 1 + alpha
    data = {"radii": radii, "psi": psi}
    if not (psi > 0).any():
        return Verdict("dirichlet_growth", threshold, math.inf, margin, True, data | {"C_prime": 0.0})
    keep = psi > 0
    slope, _, res = _loglog_fit(radii[keep], psi[keep])
    data["C_prime"] = float(np.max(psi / radii ** threshold))
    data["fit_residual"] = res
    return Verdict("dirichlet_growth", threshold, slope, margin, slope >= threshold - margin, data)


@dataclass
class HolderEstimate:
    exponent: float | None
    per_center: list
    marker: str | None = None


def holder_exponent_estimate(u: ScalarField, centers, radii) -> HolderEstimate:
    """Worst oscillation-decay slope over the centers, capped at 1."""
    per_center = []
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    for c in centers:
        patches = [ball_patch(u.grid, c, r) for r in radii]
        osc = np.array([float(np.ptp(u.values[P.nodes])) for P in patches])
        keep = osc > 1e-14
        if keep.sum() < 2:
            per_center.append(None)
            continue
        slope, _, _ = _loglog_fit(radii[keep], osc[keep])
        per_center.append(min(slope, 1.0))
    vals = [s for s in per_center if s is not None]
    if not vals:
        return HolderEstimate(None, per_center, LIPSCHITZ_OR_BETTER)
    return HolderEstimate(min(vals), per_center)
