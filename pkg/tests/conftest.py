import functools

import numpy as np
import pytest

from vexlab.mesh import build_grid
from vexlab.spaces import ExponentField, ProblemSpec

UNIT = (0.0, 1.0, 0.0, 1.0)


@functools.lru_cache(maxsize=None)
def unit_grid(n: int):
    return build_grid(UNIT, n, n)


def make_problem(grid, p=2.0, g=0.0, F=(0.0, 0.0), boundary=0.0, t1=3.0, t2=3.0, s=4.0, **kw):
    """ProblemSpec with scalar or per-triangle data; ``p`` may be a number, array or ExponentField."""
    if isinstance(p, ExponentField):
        ex = p
    elif np.ndim(p) == 0:
        ex = ExponentField.constant(grid, p, s)
    else:
        vals = np.asarray(p, float)
        ex = ExponentField(vals, float(vals.min()), float(vals.max()), s)
    if callable(boundary):
        boundary = grid.interpolate(boundary)
    return ProblemSpec(grid, ex, g, F, t1, t2, boundary, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
