"""Experiment configuration, loaded from YAML.

See README.md ("Configuration") for the schema.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from ..mesh import Grid, build_grid
from ..spaces import DEFAULT_EPS_SCHEDULE, ExponentField, ProblemSpec
from . import presets
from .fieldio import read_field

NAMED_FIELDS = {
    "zero": lambda x, y: 0.0 * x,
    "one": lambda x, y: 1.0 + 0.0 * x,
    "x1": lambda x, y: x + 0.0 * y,
    "x2": lambda x, y: y + 0.0 * x,
    "r2": lambda x, y: x ** 2 + y ** 2,
    "px-smooth": presets.px_exponent,
    "px-smooth-solution": presets.px_solution,
}


class ConfigError(ValueError):
    pass


@dataclass
class SolverConfig:
    eps_schedule: tuple[float, ...] = DEFAULT_EPS_SCHEDULE
    tol: float = 1e-9
    max_iter: int = 200
    linear_tol: float = 1e-12

    def kwargs(self) -> dict:
        return {"eps_schedule": tuple(float(e) for e in self.eps_schedule), "tol": float(self.tol),
                "max_iter": int(self.max_iter), "linear_tol": float(self.linear_tol)}


@dataclass
class AnalysisConfig:
    centers: list | None = None
    R: float | None = None
    ladder_count: int = 9
    min_triangles: int = 20
    margin_exponent: float = 0.05
    margin_slope: float = 0.15
    t1: float | None = None
    t2: float | None = None
    s: float | None = None
    c_abstract: float = 1.0
    iteration_A: float = 1000.0
    iteration_eps: float = 0.0
    energy_slack: float = 1e-8
    max_principle_slack: float = 1e-6


@dataclass
class ExperimentConfig:
    problem: dict = field(default_factory=lambda: {"preset": "linear"})
    resolution: int = 65
    bounds: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
    solver: SolverConfig = field(default_factory=SolverConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output_dir: str = "out"
    plots: bool = True
    base_dir: Path = field(default_factory=Path.cwd, repr=False)

    def __post_init__(self):
        if int(self.resolution) < 17:
            raise ConfigError(f"grid resolution must be >= 17, got {self.resolution}")
        a = self.analysis
        if not (a.margin_exponent > 0 and a.margin_slope > 0):
            raise ConfigError("margins must be positive")

    @property
    def preset(self) -> str:
        return str(self.problem.get("preset", "custom"))


def _build(cls, data: dict | None, where: str):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")
    return cls(**data)


def config_from_dict(data: dict, base_dir=None) -> ExperimentConfig:
    data = dict(data or {})
    extra = set(data) - {"problem", "grid", "solver", "analysis", "output"}
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    grid = dict(data.get("grid") or {})
    out = dict(data.get("output") or {})
    return ExperimentConfig(
        problem=dict(data.get("problem") or {"preset": "linear"}),
        resolution=int(grid.get("n", 65)),
        bounds=tuple(float(v) for v in grid.get("bounds", (0.0, 1.0, 0.0, 1.0))),
        solver=_build(SolverConfig, data.get("solver"), "solver"),
        analysis=_build(AnalysisConfig, data.get("analysis"), "analysis"),
        output_dir=str(out.get("dir", "out")),
        plots=bool(out.get("plots", True)),
        base_dir=Path(base_dir) if base_dir else Path.cwd(),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return config_from_dict(data, base_dir=path.parent)


def _node_values(spec, grid: Grid, base_dir: Path) -> np.ndarray:
    if isinstance(spec, (int, float)):
        return np.full(grid.n_nodes, float(spec))
    if isinstance(spec, str):
        if spec not in NAMED_FIELDS:
            raise ConfigError(f"unknown field id {spec!r}; known: {sorted(NAMED_FIELDS)}")
        return grid.interpolate(NAMED_FIELDS[spec])
    if isinstance(spec, dict) and "path" in spec:
        return read_field(base_dir / spec["path"], grid)
    raise ConfigError(f"cannot interpret field {spec!r}")


def _cell_values(spec, grid: Grid, base_dir: Path) -> np.ndarray:
    if isinstance(spec, (int, float)):
        return np.full(grid.n_triangles, float(spec))
    if isinstance(spec, str) and spec in NAMED_FIELDS:
        return grid.sample(NAMED_FIELDS[spec])
    # node tables are averaged over each triangle's vertices
    return _node_values(spec, grid, base_dir)[grid.triangles].mean(axis=1)


def build_problem(config: ExperimentConfig) -> presets.ManufacturedProblem:
    """Problem described by the config: a preset or explicit fields."""
    grid = build_grid(config.bounds, config.resolution, config.resolution)
    prob = config.problem
    solver = config.solver.kwargs()
    if config.preset != "custom":
        params = dict(prob.get("params") or {})
        mp = presets.manufactured_problem(config.preset, params, grid, **solver)
        overrides = {k: float(prob[k]) for k in ("t1", "t2") if k in prob}
        if "p_minus" in prob or "p_plus" in prob:
            ex = mp.problem.exponent
            overrides["exponent"] = ExponentField(ex.values, float(prob.get("p_minus", ex.p_minus)),
                                                  float(prob.get("p_plus", ex.p_plus)), ex.s,
                                                  ex.grad, ex.node_values)
        if overrides:
            mp.problem = mp.problem.with_data(**overrides)
        return mp

    base = config.base_dir
    p_spec = prob.get("p", 2.0)
    p_nodes = _node_values(p_spec, grid, base)
    p_cells = _cell_values(p_spec, grid, base)
    exponent = ExponentField(
        p_cells,
        float(prob.get("p_minus", min(p_cells.min(), p_nodes.min()))),
        float(prob.get("p_plus", max(p_cells.max(), p_nodes.max()))),
        float(prob["s"]) if "s" in prob else 4.0,
        None,
        p_nodes,
    )
    F_spec = prob.get("F", [0.0, 0.0])
    if not isinstance(F_spec, (list, tuple)) or len(F_spec) != 2:
        raise ConfigError("F must be a two-component list")
    F = np.column_stack([_cell_values(c, grid, base) for c in F_spec])
    g = _cell_values(prob.get("g", 0.0), grid, base)
    bnd = _node_values(prob.get("boundary", 0.0), grid, base)
    if "t1" not in prob or "t2" not in prob:
        raise ConfigError("custom problems need t1 and t2")
    spec = ProblemSpec(grid, exponent, g, F, float(prob["t1"]), float(prob["t2"]), bnd, **solver)
    exact = None
    if isinstance(prob.get("exact"), str):
        exact = NAMED_FIELDS[prob["exact"]]
    return presets.ManufacturedProblem("custom", spec, exact)
