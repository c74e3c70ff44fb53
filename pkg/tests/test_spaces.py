import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from conftest import make_problem, unit_grid
from vexlab.mesh import ball_patch, build_grid
from vexlab.spaces import (
    EXPONENT_BOUNDS, EXPONENT_SOBOLEV, FLUX_INTEGRABILITY, SOURCE_INTEGRABILITY, SUBCRITICAL,
    ExponentField, exponent_stats, luxemburg_norm, modular, verify_assumptions)


def halves(grid, left, right):
    vals = np.where(grid.barycenters[:, 0] < 0.5, left, right).astype(float)
    return ExponentField(vals, float(min(left, right)), float(max(left, right)), 4.0)


def bisect(f, lo, hi, iters=200):
    """Plain scalar bisection for a decreasing f with one sign change."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_modular_examples():
    g = unit_grid(17)
    p = halves(g, 2.0, 3.0)
    assert modular(np.ones(g.n_triangles), p, g) == pytest.approx(1.0, abs=1e-14)
    assert modular(np.zeros(g.n_triangles), p, g) == 0.0
    assert modular(np.full(g.n_triangles, 2.0), p, g) == pytest.approx(6.0, abs=1e-12)


def test_modular_region_mismatch():
    g = unit_grid(9)
    with pytest.raises(ValueError):
        modular(np.ones(5), ExponentField.constant(g, 2.0), g)


def test_luxemburg_examples():
    g = unit_grid(17)
    one = np.ones(g.n_triangles)
    assert luxemburg_norm(one, ExponentField.constant(g, 2.0), g) == pytest.approx(1.0, rel=1e-12)
    assert luxemburg_norm(np.zeros(g.n_triangles), ExponentField.constant(g, 2.0), g) == 0.0
    lam = luxemburg_norm(one, halves(g, 2.0, 3.0), g)
    oracle = bisect(lambda x: 0.5 / x ** 2 + 0.5 / x ** 3 - 1.0, 0.1, 10.0)
    assert abs(lam - oracle) <= 1e-12 * oracle
    assert oracle == pytest.approx(1.0, abs=1e-14)  # 0.5 + 0.5 = 1 at lambda = 1
    lam2 = luxemburg_norm(np.full(g.n_triangles, 2.0), halves(g, 2.0, 3.0), g)
    oracle2 = bisect(lambda x: 2.0 / x ** 2 + 4.0 / x ** 3 - 1.0, 0.1, 10.0)
    assert abs(lam2 - oracle2) <= 1e-12 * oracle2


def test_luxemburg_scaling():
    g = unit_grid(17)
    u = g.sample(lambda x, y: np.sin(3 * x) + y ** 2)
    p = ExponentField.from_function(g, lambda x, y: 1.5 + 0.4 * x)
    assert luxemburg_norm(3 * u, p, g) == pytest.approx(3 * luxemburg_norm(u, p, g), rel=1e-11)
    assert luxemburg_norm(-u, p, g) == pytest.approx(luxemburg_norm(u, p, g), rel=1e-12)


def test_luxemburg_rejects_non_finite():
    g = unit_grid(9)
    v = np.ones(g.n_triangles)
    v[3] = np.inf
    with pytest.raises(ValueError):
        luxemburg_norm(v, ExponentField.constant(g, 2.0), g)


def test_luxemburg_on_patch():
    g = unit_grid(33)
    P = ball_patch(g, (0.5, 0.5), 0.3)
    p = ExponentField.constant(g, 2.0)
    lam = luxemburg_norm(np.ones(g.n_triangles), p, P)
    assert lam == pytest.approx(math.sqrt(P.area), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([1.2, 1.5, 2.0, 3.0, 4.5]),
       hnp.arrays(float, 32, elements=st.floats(-1e3, 1e3)))
def test_constant_p_matches_classical(q, vals):
    g = build_grid((0, 1, 0, 1), 5, 3)  # 16 triangles, area 1/16 each
    v = np.resize(vals, g.n_triangles)
    if not np.abs(v).max() > 1e-200:
        return
    p = ExponentField.constant(g, q)
    classical = float(np.sum(np.abs(v) ** q * g.areas)) ** (1 / q)
    lam = luxemburg_norm(v, p, g)
    assert lam == pytest.approx(classical, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(hnp.arrays(float, 16, elements=st.floats(-50, 50)),
       hnp.arrays(float, 16, elements=st.floats(1.1, 4.0)))
def test_unit_ball_property(vals, pv):
    g = build_grid((0, 1, 0, 1), 5, 3)
    if not np.abs(vals).max() > 1e-100:
        return
    p = ExponentField(pv, float(pv.min()), float(pv.max()))
    lam = luxemburg_norm(vals, p, g)
    assert modular(vals / lam, p, g) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(hnp.arrays(float, 16, elements=st.floats(-10, 10)),
       hnp.arrays(float, 16, elements=st.floats(0, 5)),
       hnp.arrays(float, 16, elements=st.floats(1.1, 4.0)))
def test_modular_monotone(u, extra, pv):
    g = build_grid((0, 1, 0, 1), 5, 3)
    v = np.where(u >= 0, 1.0, -1.0) * (np.abs(u) + extra)
    p = ExponentField(pv, float(pv.min()), float(pv.max()))
    assert modular(u, p, g) <= modular(v, p, g) * (1 + 1e-12)


def test_exponent_stats_examples():
    g = unit_grid(17)
    assert exponent_stats(ExponentField.constant(g, 2.0), g) == (2.0, 2.0, 2.0)
    p = ExponentField.from_function(g, lambda x, y: 1.5 + 0.4 * x)
    lo, hi, pm = exponent_stats(p, g)
    assert pm == lo == p.values.min() and pm >= 1.5 and hi <= 1.9
    piece = halves(g, 1.6, 1.9)
    P = ball_patch(g, (0.5, 0.5), 0.2)
    assert exponent_stats(piece, P)[2] == 1.6


def test_exponent_stats_empty_region():
    g = unit_grid(9)
    with pytest.raises(ValueError):
        exponent_stats(ExponentField(np.empty(0), 2.0, 2.0), g)


def test_grad_norm_analytic_vs_differenced():
    g = unit_grid(65)
    f = lambda x, y: 1.5 + 0.4 * x + 0.1 * y
    a = ExponentField.from_function(g, f, grad=lambda x, y: (0.4, 0.1), s=4.0)
    b = ExponentField.from_function(g, f, s=4.0)
    exact = math.hypot(0.4, 0.1)
    assert a.grad_norm(g) == pytest.approx(exact, rel=1e-12)
    assert b.grad_norm(g) == pytest.approx(exact, rel=1e-10)
    assert ExponentField.constant(g, 2.0, 4.0).grad_norm(g) == 0.0


def test_assumptions_all_pass_for_p_equal_n():
    g = unit_grid(17)
    rep = verify_assumptions(make_problem(g, 2.0, g=1.0, F=(0.5, -0.5)))
    assert rep.ok
    for name in (EXPONENT_BOUNDS, EXPONENT_SOBOLEV, SOURCE_INTEGRABILITY, FLUX_INTEGRABILITY):
        assert rep[name].passed
    sub = rep[SUBCRITICAL]
    assert sub.passed and sub.measured == sub.threshold == 2.0 and not sub.hard


def test_assumptions_t2_on_threshold_fails():
    g = unit_grid(17)
    rep = verify_assumptions(make_problem(g, 2.0, t2=2.0))
    assert not rep.ok
    assert [c.name for c in rep.hard_failures] == [FLUX_INTEGRABILITY]
    assert rep[FLUX_INTEGRABILITY].threshold == 2.0
    # the next representable t2 passes: no tolerance in the comparison
    assert verify_assumptions(make_problem(g, 2.0, t2=np.nextafter(2.0, 3.0))).ok


def test_assumptions_t1_threshold():
    g = unit_grid(17)
    rep = verify_assumptions(make_problem(g, 2.0, t1=1.0))
    assert [c.name for c in rep.hard_failures] == [SOURCE_INTEGRABILITY]


def test_assumptions_declared_p_minus_one():
    g = unit_grid(17)
    ex = ExponentField(np.full(g.n_triangles, 2.0), 1.0, 2.0, 4.0)
    rep = verify_assumptions(make_problem(g, ex))
    assert EXPONENT_BOUNDS in [c.name for c in rep.hard_failures]


def test_assumptions_sampled_out_of_declared_bounds():
    g = unit_grid(17)
    ex = ExponentField(np.full(g.n_triangles, 2.5), 1.5, 2.0, 4.0)
    assert not verify_assumptions(make_problem(g, ex))[EXPONENT_BOUNDS].passed


def test_assumptions_sobolev():
    g = unit_grid(17)
    assert not verify_assumptions(make_problem(g, 2.0, s=2.0))[EXPONENT_SOBOLEV].passed
    assert not verify_assumptions(make_problem(g, 2.0, s=None))[EXPONENT_SOBOLEV].passed


def test_supercritical_is_informational():
    g = unit_grid(17)
    rep = verify_assumptions(make_problem(g, 3.0))
    assert not rep[SUBCRITICAL].passed and rep.ok


def test_bounded_data_with_infinite_exponents():
    g = unit_grid(17)
    assert verify_assumptions(make_problem(g, 1.8, g=2.0, F=(1.0, 0.0), t1=math.inf, t2=math.inf)).ok


def test_non_finite_data_fails():
    g = unit_grid(9)
    gv = np.zeros(g.n_triangles)
    gv[0] = np.inf
    assert not verify_assumptions(make_problem(g, 2.0, g=gv))[SOURCE_INTEGRABILITY].passed


@pytest.mark.parametrize("scale", [1e-200, 1e-160, 1.0, 1e160, 1e200])
def test_luxemburg_extreme_magnitudes(scale):
    g = unit_grid(9)
    v = scale * np.linspace(0.5, 2.0, g.n_triangles)
    for q in (1.5, 3.0):
        ref = scale * float(np.sum(np.linspace(0.5, 2.0, g.n_triangles) ** q * g.areas)) ** (1 / q)
        assert luxemburg_norm(v, ExponentField.constant(g, q), g) == pytest.approx(ref, rel=1e-11)
