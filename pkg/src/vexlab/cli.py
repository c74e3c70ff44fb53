"""Command-line entry point: ``vexlab <command> <config>``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness.config import ConfigError, load_config
from .harness.experiment import ALL_STAGES, EXIT_OK, convergence_study, run_experiment
from .harness.report import report_rows, write_order_table

STAGES = {
    "solve": (),
    "replace": ("replace",),
    "decay": ("decay",),
    "verify": ALL_STAGES,
    "constants": ("constants",),
}


def _print_rows(report):
    for name, thr, meas, margin, ok in report_rows(report):
        print(f"{'PASS' if ok else 'FAIL'}  {name:40s} measured={meas:.6g} threshold={thr:.6g}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vexlab", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in STAGES:
        sp = sub.add_parser(name)
        sp.add_argument("config", type=Path)
        sp.add_argument("--out", help="output directory (overrides the config)")
    sp = sub.add_parser("convergence")
    sp.add_argument("config", type=Path)
    sp.add_argument("--levels", type=int, default=3, help="number of grid doublings (>= 3)")
    sp.add_argument("--out", help="output directory (overrides the config)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        config.output_dir = str(Path(args.out).resolve())

    if args.command == "convergence":
        if config.preset == "custom":
            print("error: convergence needs a preset with an exact solution", file=sys.stderr)
            return 1
        n0 = config.resolution
        res = [(n0 - 1) * 2 ** k + 1 for k in range(args.levels)]
        table = convergence_study(config.preset, res, config.problem.get("params"), config.bounds,
                                  **config.solver.kwargs())
        out = Path(config.output_dir)
        out = out if out.is_absolute() else config.base_dir / out
        write_order_table(table, out, config.plots)
        for n, h, e2, em, o2 in zip(table.resolutions, table.h, table.l2, table.max_node, table.l2_orders):
            print(f"n={n:5d} h={h:.4g} L2={e2:.4e} max={em:.4e} order={o2:.3f}")
        return EXIT_OK

    report = run_experiment(config, STAGES[args.command])
    _print_rows(report)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
