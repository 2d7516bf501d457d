import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from qlm import ConfigError, FillError
from qlm.domain import Ball, Domain, GridSpec, ScalarField
from qlm.families import FamilySpec, instantiate
from qlm.flat import convergence_run, decompose, fill_graph, flat_bound_form, flat_bound, loglog_slope


@pytest.fixture(scope="module")
def sch():
    return instantiate(FamilySpec("schwarzschild", 3, {"m": 0.5}, 3.0))


def test_constant_graph_trivial_cases():
    g = instantiate(FamilySpec("constant", 3, {"c": 0.4}, 1.0))
    assert decompose(g).dF_bound == pytest.approx(0.0, abs=1e-14)
    vol = 4 / 3 * math.pi
    d = decompose(g, 0.9)
    assert d.M_B_minus == pytest.approx(0.5 * vol, rel=1e-12)
    assert d.M_B_plus == 0 and d.M_A == 0
    assert flat_bound(g).ratio == 0.0


@pytest.mark.parametrize("h_ref", [0.0, 1.0, 2.5, 4.0])
def test_radial_decomposition_matches_quadrature(sch, h_ref):
    f = lambda r: math.sqrt(4 * (r - 1))
    bulk, _ = quad(lambda r: abs(f(r) - h_ref) * 4 * math.pi * r * r, 1, 3, points=[1 + h_ref**2 / 4],
                   epsrel=1e-12, limit=200)
    vh = 4 / 3 * math.pi
    ref = bulk + vh * abs(0.0 - h_ref) + vh
    assert decompose(sch, h_ref).dF_bound == pytest.approx(ref, rel=1e-9)


@given(st.floats(-5, 5), st.floats(0.0, 3.0))
def test_translation_invariance(shift, h_ref):
    g = instantiate(FamilySpec("schwarzschild", 3, {"m": 0.5}, 3.0))
    a = decompose(g, h_ref).dF_bound
    b = decompose(g.shifted(shift), h_ref + shift).dF_bound
    assert b == pytest.approx(a, rel=1e-9)


@given(st.floats(-1, 4), st.floats(-1, 4), st.floats(0, 1))
def test_bound_is_convex_in_reference_height(a, b, t):
    g = instantiate(FamilySpec("schwarzschild", 3, {"m": 0.5}, 3.0))
    mid = t * a + (1 - t) * b
    lhs = decompose(g, mid).dF_bound
    rhs = t * decompose(g, a).dF_bound + (1 - t) * decompose(g, b).dF_bound
    assert lhs <= rhs * (1 + 1e-9) + 1e-12


def test_mass_monotone_along_schwarzschild_ladder():
    run = convergence_run(FamilySpec("schwarzschild", 3, {"m": 0.2}, 16.0),
                          {"param": "m", "values": [0.2, 0.1, 0.05, 0.025, 0.0125]})
    assert all(b < a for a, b in zip(run.dF_bound[:-1], run.dF_bound[1:]))
    assert all(r == "h_o" for r in run.h_ref_rule)
    assert run.slope_window == [2, 5]
    assert 0 < run.slope < 1


def test_fill_error_on_tilted_horizon():
    dom = Domain(3, Ball((0, 0, 0), 1.0), (Ball((0, 0, 0), 0.3),))
    grid = GridSpec.around(dom, 24)
    g = ScalarField.from_function(dom, grid, lambda x: 1.0 + x[..., 0] + np.sum(x**2, axis=-1))
    with pytest.raises(FillError):
        fill_graph(g)
    with pytest.raises(FillError):
        decompose(g)


def test_grid_decomposition_close_to_radial():
    spec = FamilySpec("schwarzschild", 3, {"m": 0.5}, 3.0)
    a = decompose(instantiate(spec), 1.5).dF_bound
    b = decompose(instantiate(spec, mode="grid", resolution=48), 1.5).dF_bound
    assert b == pytest.approx(a, rel=3e-2)


def test_gravity_well_flat_but_not_uniform():
    run = convergence_run(FamilySpec("gravity_well", 3, {"w": 0.4, "d": 2.5}, 1.0),
                          [{"w": w, "d": 1.0 / w} for w in (0.4, 0.2, 0.1, 0.05)])
    r = run.dF_over_sup
    assert all(b < a for a, b in zip(r[:-1], r[1:]))
    assert run.sup_distance[-1] > run.sup_distance[0]


def test_loglog_slope():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert loglog_slope(x, 3 * x**0.5) == pytest.approx(0.5)
    assert math.isnan(loglog_slope([1.0], [1.0]))
    assert math.isnan(loglog_slope([1.0, -2.0], [1.0, 1.0]))


def test_bound_form_terms():
    total, terms = flat_bound_form(3, 0.01, 0.5, 0.0, 4.0, 2.0)
    assert terms[1] == pytest.approx(1e-6)
    assert terms[0] == pytest.approx(0.5e-6)
    assert terms[2] == pytest.approx(4 * 2**0.25 * 0.1)
    assert total == pytest.approx(sum(terms))
    assert flat_bound_form(3, 0.0, 0, 0, 1, 1) == (0.0, [0.0, 0.0, 0.0])


def test_flat_bound_ratio_is_finite(sch):
    b = flat_bound(sch)
    assert b.dF_bound > 0 and 0 < b.ratio < math.inf


@pytest.mark.parametrize("ladder", [[], {"param": "m", "values": []}, {"param": "m", "values": [0.1, 0.3, 0.2]},
                                    {"values": [0.1]}, [0.1, 0.2]])
def test_bad_ladders(ladder):
    with pytest.raises(ConfigError):
        convergence_run(FamilySpec("schwarzschild", 3, {"m": 0.1}, 4.0), ladder)


def test_non_monotone_mass_warns():
    with pytest.warns(RuntimeWarning):
        run = convergence_run(FamilySpec("schwarzschild", 3, {"m": 0.1}, 4.0),
                              [{"m": 0.1, "R": 4.0}, {"m": 0.11, "R": 0.25}, {"m": 0.12, "R": 100.0}])
    assert run.warnings


def test_csv_and_dat(tmp_path):
    run = convergence_run(FamilySpec("schwarzschild", 3, {"m": 0.1}, 4.0), {"param": "m", "values": [0.1, 0.05]})
    run.to_csv(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "param,m_BY,dF_bound,vol_excess,h_o,gap"
    assert len(run.dat_rows()) == 2
