"""Solve, analyze and report one configured experiment."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..mesh import ball_patch, integrate
from ..regularity import (
    LIPSCHITZ_OR_BETTER, RegularityConstants, Verdict, check_energy_comparison,
    check_iteration_lemma, check_morrey_decay, compute_alpha, compute_regularity_constants,
    decay_profile, dirichlet_growth_check, fit_decay_slope, holder_exponent_estimate,
    radius_ladder)
from ..solver import ScalarField, SolveDiagnostics, gradient_of, pxharmonic_replacement, solve_dirichlet
from ..spaces import AssumptionReport, ProblemSpec, verify_assumptions
from . import presets
from .config import AnalysisConfig, ExperimentConfig, build_problem

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ASSUMPTION = 2
EXIT_SOLVER = 3
EXIT_VERDICT = 4

ALL_STAGES = ("replace", "decay", "constants")


@dataclass
class ExperimentReport:
    name: str
    assumptions: AssumptionReport
    diagnostics: SolveDiagnostics | None = None
    solution: ScalarField | None = field(default=None, repr=False)
    profiles: dict = field(default_factory=dict, repr=False)
    slopes: dict = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)
    constants: RegularityConstants | None = None
    errors: dict = field(default_factory=dict)
    replacements: list[dict] = field(default_factory=list)
    exit_code: int = EXIT_OK

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


def center_tag(c) -> str:
    return f"{c[0]:g}_{c[1]:g}"


def default_centers(mp: presets.ManufacturedProblem, analysis: AnalysisConfig):
    if analysis.centers:
        return [tuple(map(float, c)) for c in analysis.centers]
    if mp.center is not None:
        return [mp.center]
    a1, b1, a2, b2 = mp.problem.grid.bounds
    return [(0.5 * (a1 + b1), 0.5 * (a2 + b2))]


def analyze(u: ScalarField, problem: ProblemSpec, analysis: AnalysisConfig, centers,
            stages=ALL_STAGES, report: ExperimentReport | None = None) -> ExperimentReport:
    """Run the regularity checks on a computed solution.

    ``stages`` selects among ``"replace"`` (energy comparison and maximum
    principle), ``"decay"`` (Morrey decay, iteration lemma, Dirichlet growth,
    Hölder estimate) and ``"constants"``.
    """
    report = report or ExperimentReport("analysis", verify_assumptions(problem))
    grid, p, n = problem.grid, problem.exponent, problem.n
    t1 = problem.t1 if analysis.t1 is None else float(analysis.t1)
    t2 = problem.t2 if analysis.t2 is None else float(analysis.t2)
    alphas = []
    ladders = {}
    for c in centers:
        R = analysis.R if analysis.R is not None else 0.5 * grid.distance_to_boundary(c)
        radii = radius_ladder(grid, c, R, analysis.ladder_count, analysis.min_triangles)
        if radii.size < 2:
            raise ValueError(f"radius ladder at {c} has fewer than 2 resolved radii")
        ladders[c] = radii
        p_m = float(p.values[ball_patch(grid, c, radii[0]).triangle_indices].min())
        alpha = compute_alpha(n, p_m, t1, t2).alpha
        alphas.append(alpha)
        tag = center_tag(c)

        if "decay" in stages:
            prof = decay_profile(u, p, c, radii, "pm")
            report.profiles[c] = prof
            mv = check_morrey_decay(prof, n, p_m, alpha, analysis.margin_exponent)
            mv.name = f"morrey_decay@{tag}"
            report.verdicts.append(mv)
            if (prof.phi > 0).sum() >= 2:
                report.slopes[c] = fit_decay_slope(prof).slope

            prof_px = decay_profile(u, p, c, radii, "px", with_osc=False)
            b = n - p_m + alpha * p_m
            iv = check_iteration_lemma(prof_px, analysis.iteration_A, float(n), b, analysis.iteration_eps)
            iv.name = f"iteration_lemma@{tag}"
            report.verdicts.append(iv)

            dv = dirichlet_growth_check(u, c, radii, alpha, analysis.margin_exponent)
            dv.name = f"dirichlet_growth@{tag}"
            report.verdicts.append(dv)

        if "replace" in stages:
            patch = ball_patch(grid, c, radii[0])
            v = pxharmonic_replacement(u, patch, problem)
            ev = check_energy_comparison(u, v, patch, p, analysis.energy_slack)
            ev.name = f"energy_comparison@{tag}"
            report.verdicts.append(ev)
            v_max = float(np.abs(v.values[patch.interior_nodes]).max())
            u_bd = float(np.abs(u.values[patch.boundary_nodes]).max())
            report.verdicts.append(Verdict(
                f"max_principle@{tag}", u_bd, v_max, analysis.max_principle_slack,
                v_max <= u_bd + analysis.max_principle_slack, {"center": c, "radius": patch.radius}))
            report.replacements.append({"center": c, "radius": patch.radius,
                                        "energy_u": ev.data["energy_u"], "energy_v": ev.data["energy_v"],
                                        "ratio": ev.measured, "max_v": v_max, "max_boundary_u": u_bd})

    if "decay" in stages:
        common = ladders[centers[0]]
        for c in centers[1:]:
            if ladders[c].size < common.size:
                common = ladders[c]
        est = holder_exponent_estimate(u, centers, common)
        measured = 1.0 if est.marker == LIPSCHITZ_OR_BETTER else est.exponent
        threshold = min(alphas)
        report.verdicts.append(Verdict(
            "holder_estimate", threshold, measured, analysis.margin_exponent,
            measured >= threshold - analysis.margin_exponent,
            {"per_center": est.per_center, "marker": est.marker}))

    if "constants" in stages:
        s = p.s if analysis.s is None else float(analysis.s)
        e_total = integrate(grid, np.hypot(*gradient_of(u).T) ** p.values)
        report.constants = compute_regularity_constants(n, s, p.grad_norm(grid), grid.diameter,
                                                   e_total, analysis.c_abstract)
    return report


def run_experiment(config: ExperimentConfig, stages=ALL_STAGES, write: bool = True) -> ExperimentReport:
    """Build, check, solve and analyze; ``exit_code`` summarizes the outcome."""
    mp = build_problem(config)
    problem = mp.problem
    report = ExperimentReport(mp.name, verify_assumptions(problem))
    if not report.assumptions.ok:
        names = ", ".join(c.name for c in report.assumptions.hard_failures)
        log.warning("assumption failure: %s; analysis skipped", names)
        report.exit_code = EXIT_ASSUMPTION
    else:
        u, diag = solve_dirichlet(problem)
        report.diagnostics, report.solution = diag, u
        if mp.exact is not None:
            grid = problem.grid
            report.errors = {"l2": presets.l2_error(grid, u.values, mp.exact),
                             "max_node": float(np.abs(u.values - grid.interpolate(mp.exact)).max())}
        if not diag.converged:
            report.exit_code = EXIT_SOLVER
        else:
            analyze(u, problem, config.analysis, default_centers(mp, config.analysis), stages, report)
            report.exit_code = EXIT_OK if report.all_passed else EXIT_VERDICT
    if write:
        from .report import write_report
        write_report(report, config)
    return report


@dataclass
class OrderTable:
    preset: str
    resolutions: list[int]
    h: np.ndarray
    l2: np.ndarray
    max_node: np.ndarray

    @staticmethod
    def _orders(h, e):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.concatenate([[math.nan], np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])])

    @property
    def l2_orders(self):
        return self._orders(self.h, self.l2)

    @property
    def max_orders(self):
        return self._orders(self.h, self.max_node)

    @property
    def fitted_l2_order(self) -> float:
        return float(np.polyfit(np.log(self.h), np.log(self.l2), 1)[0])


def convergence_study(preset: str, resolutions, params=None, bounds=(0.0, 1.0, 0.0, 1.0),
                      **solver) -> OrderTable:
    """Errors against the exact solution over a sequence of grids."""
    resolutions = [int(r) for r in resolutions]
    if len(resolutions) < 3:
        raise ValueError("need at least 3 resolutions")
    h, l2, mx = [], [], []
    for nres in resolutions:
        mp = presets.manufactured_problem(preset, params, presets.default_grid(nres, bounds), **solver)
        if mp.exact is None:
            raise ValueError(f"preset {preset!r} has no exact solution")
        u, _ = solve_dirichlet(mp.problem)
        grid = mp.problem.grid
        h.append(max(grid.hx, grid.hy))
        l2.append(presets.l2_error(grid, u.values, mp.exact))
        mx.append(float(np.abs(u.values - grid.interpolate(mp.exact)).max()))
    return OrderTable(preset, resolutions, np.array(h), np.array(l2), np.array(mx))
