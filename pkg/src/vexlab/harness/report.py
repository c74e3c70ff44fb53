"""CSV (and optional SVG) output for experiment reports."""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

from .config import ExperimentConfig
from .experiment import ExperimentReport, OrderTable, center_tag
from .fieldio import write_field

REPORT_COLUMNS = ("name", "threshold", "measured", "margin", "pass")
CONSTANT_COLUMNS = ("n", "s", "beta", "delta", "q", "m", "eps0", "K", "R1")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def report_rows(report: ExperimentReport) -> list[tuple]:
    rows = [(f"assumption: {c.name}", float(c.threshold), float(c.measured), 0.0, c.passed)
            for c in report.assumptions.checks]
    d = report.diagnostics
    if d is not None:
        rows.append(("solver_convergence", float(d.tol), float(d.residual), 0.0, d.converged))
    rows += [(v.name, float(v.threshold), float(v.measured), float(v.margin), bool(v.passed))
             for v in report.verdicts]
    return rows


def write_report(report: ExperimentReport, config: ExperimentConfig) -> Path:
    out = Path(config.base_dir) / config.output_dir if not Path(config.output_dir).is_absolute() \
        else Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "report.csv", REPORT_COLUMNS, report_rows(report))

    for c, prof in report.profiles.items():
        osc = prof.osc if prof.osc is not None else [float("nan")] * prof.radii.size
        _write_csv(out / f"profile_{center_tag(c)}.csv", ("r", "phi", "osc"),
                   zip(map(float, prof.radii), map(float, prof.phi), map(float, osc)))
        if config.plots:
            from ..plotting import plot_profile
            slope = report.slopes.get(c)
            try:
                thr = report.verdict(f"morrey_decay@{center_tag(c)}").threshold
            except KeyError:
                thr = None
            plot_profile(out / f"profile_{center_tag(c)}.svg", prof, slope, thr)

    if report.constants is not None:
        row = report.constants.as_row()
        _write_csv(out / "constants.csv", CONSTANT_COLUMNS, [[row[k] for k in CONSTANT_COLUMNS]])

    if report.replacements:
        cols = ("center_x", "center_y", "radius", "energy_u", "energy_v", "ratio", "max_v", "max_boundary_u")
        _write_csv(out / "replacement.csv", cols,
                   [(r["center"][0], r["center"][1], r["radius"], r["energy_u"], r["energy_v"],
                     r["ratio"], r["max_v"], r["max_boundary_u"]) for r in report.replacements])

    d = report.diagnostics
    if d is not None:
        _write_csv(out / "diagnostics.csv", ("step", "energy"),
                   [(i, float(e)) for i, e in enumerate(d.energy_history)])
    if report.solution is not None:
        write_field(out / "solution.vexfield", report.solution.grid, report.solution.values)
    if report.errors:
        _write_csv(out / "errors.csv", ("l2", "max_node"),
                   [(report.errors["l2"], report.errors["max_node"])])

    meta = {"name": report.name, "exit_code": report.exit_code,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "solver": None if d is None else {"iterations": d.iterations, "residual": d.residual,
                                              "converged": d.converged, "eps_used": d.eps_used,
                                              "message": d.message}}
    (out / "run.json").write_text(json.dumps(meta, indent=2) + "\n")
    return out


def write_order_table(table: OrderTable, out: Path, plots: bool = True) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "convergence.csv", ("n", "h", "l2", "max_node", "order_l2", "order_max"),
               zip(table.resolutions, map(float, table.h), map(float, table.l2),
                   map(float, table.max_node), map(float, table.l2_orders), map(float, table.max_orders)))
    if plots:
        from ..plotting import plot_convergence
        plot_convergence(out / "convergence.svg", table)
    return out
