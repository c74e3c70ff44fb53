"""Plain-text node tables: header ``vexfield v1 nx ny``, then one value per line."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..mesh import Grid

HEADER = "vexfield v1"


def write_field(path, grid: Grid, values) -> None:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_nodes,):
        raise ValueError(f"expected {grid.n_nodes} node values")
    lines = [f"{HEADER} {grid.nx} {grid.ny}"] + [repr(float(v)) for v in values]
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path, grid: Grid | None = None) -> np.ndarray:
    text = Path(path).read_text().splitlines()
    if not text:
        raise ValueError(f"{path}: empty field file")
    head = text[0].split()
    if len(head) != 4 or " ".join(head[:2]) != HEADER:
        raise ValueError(f"{path}: bad header {text[0]!r}, expected '{HEADER} nx ny'")
    nx, ny = int(head[2]), int(head[3])
    values = np.array([float(t) for t in text[1:] if t.strip()])
    if values.size != nx * ny:
        raise ValueError(f"{path}: header says {nx}x{ny} but found {values.size} values")
    if grid is not None and (grid.nx, grid.ny) != (nx, ny):
        raise ValueError(f"{path}: table is {nx}x{ny}, grid is {grid.nx}x{grid.ny}")
    return values
