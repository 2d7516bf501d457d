import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qlm import (PreconditionError, adm_limit_check, brown_york_mass, lam_functional, lam_identity_check,
                 mass_report, minkowski_check, monotonicity_and_bulk_identity, penrose_check)
from qlm.families import FamilySpec, instantiate
from qlm.level_sets import extract_level_set
from qlm.mass import MeanConvexityWarning, boundary_mass

from conftest import schwarzschild_mby


@pytest.mark.parametrize("R", [4.0, 8.0, 16.0, 32.0])
def test_boundary_mass_closed_form(R):
    g = instantiate(FamilySpec("schwarzschild", 3, {"m": 1.0}, R))
    assert boundary_mass(g) == pytest.approx(schwarzschild_mby(R), rel=1e-12)


def test_boundary_mass_n4_closed_form():
    m, R = 0.5, 3.0
    g = instantiate(FamilySpec("schwarzschild", 4, {"m": m}, R))
    assert boundary_mass(g) == pytest.approx(R * R * (1 - math.sqrt(1 - 2 * m / R**2)), rel=1e-12)


def test_grid_boundary_mass(sch8_grid):
    assert boundary_mass(sch8_grid) == pytest.approx(schwarzschild_mby(8.0), rel=5e-3)


@given(st.floats(0.05, 0.95))
def test_L_equals_mass_parameter_on_schwarzschild(t):
    # s^2/W^2 = 2m/r and Hc = 2/r make the integrand constant
    g = instantiate(FamilySpec("schwarzschild", 3, {"m": 0.7}, 5.0))
    lo, hi = g.value_range()
    ls = extract_level_set(g, lo + t * (hi - lo))
    assert lam_functional(ls) == pytest.approx(0.7, rel=1e-12)
    assert brown_york_mass(ls) >= lam_functional(ls)


def test_lam_identity_is_algebraic(sch8_grid):
    d, s = lam_identity_check(extract_level_set(sch8_grid, 4.0))
    assert d <= 1e-12 * s


def test_adm_limit_monotone():
    a = adm_limit_check(FamilySpec("schwarzschild", 3, {"m": 1.0}, 4.0), [4, 8, 16, 32])
    assert a.monotone_decreasing
    assert a.final_error == pytest.approx(schwarzschild_mby(32.0) - 1.0, rel=1e-10)
    assert a.final_error < 0.02


def test_penrose_margin_at_radius_four():
    p = penrose_check(instantiate(FamilySpec("schwarzschild", 3, {"m": 1.0}, 4.0)))
    assert p.horizon_term == pytest.approx(1.0)
    assert p.margin == pytest.approx(4 * (1 - math.sqrt(0.5)) - 1, rel=1e-12)
    with pytest.raises(PreconditionError):
        penrose_check(instantiate(FamilySpec("cap", 3, {}, 0.8)))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_minkowski_equality_on_round_spheres(n):
    g = instantiate(FamilySpec("schwarzschild", n, {"m": 1.0}, 6.0))
    lo, hi = g.value_range()
    r = minkowski_check(extract_level_set(g, 0.5 * (lo + hi)))
    assert abs(r.relative_deficit) < 1e-12


def test_minkowski_nonnegative_on_convex_grid_slice():
    g = instantiate(FamilySpec("paraboloid", 3, {}, 1.0), mode="grid", resolution=40)
    r = minkowski_check(extract_level_set(g, 0.5))
    assert r.relative_deficit > -5e-3


def test_bulk_identity_schwarzschild_is_flat(sch8):
    b = monotonicity_and_bulk_identity(sch8, 1.0, sch8.boundary_level_value())
    assert abs(b.delta_L) < 1e-12 and abs(b.bulk) < 1e-12
    assert b.monotone


def test_bulk_identity_cap_analytic():
    g = instantiate(FamilySpec("cap", 3, {"rho": 1.0}, 0.8))
    lo, hi = g.value_range()
    b = monotonicity_and_bulk_identity(g, lo + 0.05 * (hi - lo), hi)
    # R = 6 on the unit sphere and the shell volume is elementary
    r1 = g.radius_of(b.h1)
    bulk = 6 * 4 / 3 * math.pi * (0.8**3 - r1**3) / (16 * math.pi)
    assert b.bulk == pytest.approx(bulk, rel=1e-10)
    assert b.bulk_relative_residual < 1e-8
    assert b.monotone


def test_bulk_identity_cap_grid(cap_grid):
    lo, hi = cap_grid.value_range()
    b = monotonicity_and_bulk_identity(cap_grid, lo + 0.02 * (hi - lo), cap_grid.boundary_level_value())
    assert b.bulk_relative_residual < 0.03


def test_bulk_identity_rejects_reversed_heights(sch8):
    with pytest.raises(PreconditionError):
        monotonicity_and_bulk_identity(sch8, 3.0, 1.0)


def test_non_mean_convex_slice_warns():
    g = instantiate(FamilySpec("saddle", 3, {}, 1.0), mode="grid", resolution=24)
    ls = extract_level_set(g, 0.1)
    with pytest.warns(MeanConvexityWarning):
        brown_york_mass(ls)


def test_mass_report_schwarzschild(tmp_path, sch8):
    rep = mass_report(sch8, K=20)
    assert rep.m_BY == pytest.approx(schwarzschild_mby(8.0), rel=1e-12)
    assert rep.L_boundary == pytest.approx(1.0, rel=1e-12)
    assert rep.mass_dominates_L and rep.L_monotone
    assert rep.penrose["margin"] > 0
    assert np.all(np.diff(rep.m_BY_h) < 0)
    rep.to_csv(tmp_path / "m.csv")
    assert (tmp_path / "m.csv").read_text().startswith("h,m_BY,L,minkowski_deficit,regular")


def test_constant_graph_has_zero_mass():
    rep = mass_report(instantiate(FamilySpec("constant", 3, {"c": 0.2}, 1.0)), K=4)
    assert rep.m_BY == 0.0 and rep.L_boundary == 0.0
