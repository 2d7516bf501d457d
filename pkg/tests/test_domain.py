import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qlm import DomainError
from qlm.domain import (INTERIOR, OUTSIDE, Ball, Box, Domain, GridSpec, ScalarField, fd_derivatives, gradient,
                        hessian, volume_integral)
from qlm.families import FamilySpec, instantiate


def unit_ball(n=3):
    return Domain(n, Ball((0.0,) * n, 1.0))


def quad_field(res=32, n=3):
    dom = unit_ball(n)
    grid = GridSpec.around(dom, res)
    return ScalarField.from_function(dom, grid, lambda x: np.sum(x**2, axis=-1))


def test_grid_rejects_coarse_resolution():
    with pytest.raises(ValueError):
        GridSpec((4, 4, 4), (0, 0, 0), (1, 1, 1))


def test_grid_around_pads_the_domain():
    g = GridSpec.around(unit_ball(), 32, pad_cells=3)
    assert g.lo[0] < -1 and g.hi[0] > 1
    assert np.allclose(g.spacing, g.spacing[0])


def test_domain_containment_is_validated():
    with pytest.raises(ValueError):
        Domain(3, Ball((0, 0, 0), 1.0), (Ball((0.9, 0, 0), 0.5),))
    with pytest.raises(ValueError):
        Domain(3, Ball((0, 0, 0), 2.0), (Ball((0.3, 0, 0), 0.4), Ball((-0.3, 0, 0), 0.4)))


def test_domain_dict_round_trip():
    d = Domain(3, Ball((0, 0, 0), 2.0), (Ball((0.5, 0, 0), 0.3),))
    e = Domain.from_dict(d.to_dict())
    assert e.to_dict() == d.to_dict()


def test_ball_volume_on_grid():
    f = quad_field(64)
    assert volume_integral(f, 1.0) == pytest.approx(4 * math.pi / 3, rel=2e-3)


def test_sublevel_volume_of_radial_square():
    # {|x|^2 < 1/4} is the ball of radius 1/2
    f = quad_field(64)
    assert volume_integral(f, 1.0, ("sublevel", 0.25)) == pytest.approx(4 * math.pi / 3 / 8, rel=5e-3)


def test_fd_derivatives_exact_on_quadratics():
    f = quad_field(24)
    g, H = fd_derivatives(np.array(f.values), f.grid.spacing)
    pts = f.points
    assert np.allclose(g, 2 * pts, atol=1e-10)
    assert np.allclose(H, 2 * np.eye(3), atol=1e-8)


def test_fd_second_order_convergence():
    errs = []
    for res in (24, 48):
        dom = unit_ball(2)
        grid = GridSpec.around(dom, res)
        f = ScalarField.from_function(dom, grid, lambda x: np.sin(x[..., 0]) * np.cos(x[..., 1]))
        g, _ = f.derivative_arrays()
        exact = np.cos(f.points[..., 0]) * np.cos(f.points[..., 1])
        inner = f.mask == INTERIOR
        errs.append(np.max(np.abs(g[..., 0] - exact)[inner]))
    assert math.log2(errs[0] / errs[1]) > 1.8


def test_mask_and_node_access():
    f = quad_field(16)
    centre = (8, 8, 8)
    assert f.node_mask(centre) == "interior"
    assert f.mask[0, 0, 0] == OUTSIDE
    with pytest.raises(DomainError):
        f.derivatives_at((0, 0, 0))
    with pytest.raises(DomainError):
        gradient(f, (99, 0, 0))
    g = gradient(f, centre)
    assert np.allclose(g, 2 * f.point_of(centre), atol=1e-10)
    assert np.allclose(hessian(f, centre), 2 * np.eye(3), atol=1e-8)


def test_interior_values_must_be_finite():
    dom = unit_ball(3)
    grid = GridSpec.around(dom, 16)
    vals = np.zeros(grid.resolution)
    vals[8, 8, 8] = np.nan
    with pytest.raises(ValueError):
        ScalarField(dom, grid, vals)


def test_boundary_level_value_of_radial_square():
    assert quad_field(48).boundary_level_value() == pytest.approx(1.0, abs=5e-3)


def test_constant_slope_graph_volume():
    a = 0.7
    dom = Domain(3, Box((0, 0, 0), (1, 1, 1)))
    grid = GridSpec.around(dom, 24)
    f = ScalarField.from_function(dom, grid, lambda x: a * x[..., 0])
    assert f.graph_volume() == pytest.approx(math.sqrt(1 + a * a), rel=1e-9)


def test_constant_graph_has_excess_equal_to_slab():
    dom = unit_ball(3)
    grid = GridSpec.around(dom, 48)
    f = ScalarField.from_function(dom, grid, lambda x: np.full(x.shape[:-1], 0.5))
    up, down = f.excess_integrals(0.2)
    assert down == 0.0
    assert up == pytest.approx(0.3 * 4 * math.pi / 3, rel=3e-3)


def test_shifted_moves_values_and_profile():
    g = instantiate(FamilySpec("cap", 3, {"rho": 1.0}, 0.8), mode="grid", resolution=16)
    s = g.shifted(2.0)
    ok = np.isfinite(g.values)
    assert ok.any() and np.allclose((s.values - g.values)[ok], 2.0)
    assert s.boundary_level_value() == pytest.approx(g.boundary_level_value() + 2.0)


def test_horizon_fill_value_is_profile_value():
    g = instantiate(FamilySpec("schwarzschild", 3, {"m": 1.0}, 8.0), mode="grid", resolution=32)
    assert g.fill_value(0) == 0.0
    assert g.horizon_volumes()[0] == pytest.approx(4 * math.pi / 3 * 8)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_sublevel_volume_monotone(h1, h2):
    f = _QF
    lo, hi = sorted((h1, h2))
    assert volume_integral(f, 1.0, ("sublevel", lo)) <= volume_integral(f, 1.0, ("sublevel", hi)) + 1e-12


@given(st.floats(0.1, 0.9))
def test_sublevel_and_superlevel_partition(h):
    f = _QF
    total = volume_integral(f, 1.0)
    parts = volume_integral(f, 1.0, ("sublevel", h)) + volume_integral(f, 1.0, ("superlevel", h))
    assert parts == pytest.approx(total, rel=1e-3)


_QF = quad_field(24)
