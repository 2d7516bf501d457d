import math

import numpy as np
import pytest

from qlm import NearCriticalError
from qlm.families import FamilySpec, instantiate
from qlm.level_sets import (area_profile, default_ladder, extract_level_set, first_variation,
                            level_mean_curvatures, regularity_threshold, surface_integral)


def _r_of_h(h, m=1.0):
    return 2 * m + h * h / (8 * m)


def test_grid_level_set_area_close_to_sphere(sch8_grid):
    h = 5.0
    ls = extract_level_set(sch8_grid, h)
    r = _r_of_h(h)
    assert ls.regular
    assert ls.area == pytest.approx(4 * math.pi * r * r, rel=5e-3)


def test_grid_slice_mean_curvature_is_two_over_r(sch8_grid):
    h = 5.0
    ls = extract_level_set(sch8_grid, h)
    hc, H = level_mean_curvatures(ls)
    r = _r_of_h(h)
    avg = surface_integral(ls, hc) / ls.area
    assert avg == pytest.approx(2 / r, rel=1e-2)
    assert np.all(np.abs(H) < np.abs(hc))


def test_empty_outside_range(sch8):
    lo, hi = sch8.value_range()
    ls = extract_level_set(sch8, hi + 1.0)
    assert ls.empty and ls.area == 0 and not ls.regular
    assert first_variation(ls) == 0.0


def test_first_variation_matches_radial_derivative(sch8):
    # V = 4 pi r(h)^2 and dr/dh = 1 / f'(r)
    h = 3.0
    r = _r_of_h(h)
    fp = math.sqrt(2 / (r - 2))
    assert first_variation(extract_level_set(sch8, h)) == pytest.approx(8 * math.pi * r / fp, rel=1e-12)


def test_area_profile_two_derivative_estimates_agree(sch8):
    p = area_profile(sch8, K=200)
    assert p.monotonicity_violation() == 0.0
    assert p.boundary_excess() <= 1e-12
    assert p.vprime_discrepancy() < 1e-3


def test_area_profile_grid_monotone(cap_grid):
    p = area_profile(cap_grid, K=40)
    assert p.monotonicity_violation() < 1e-3
    assert p.boundary_excess() < 0.01


def test_area_profile_csv(tmp_path, sch8):
    p = area_profile(sch8, K=8)
    out = tmp_path / "a.csv"
    p.to_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "h,V,Vprime_fd,Vprime_var,regular"
    assert len(lines) == 9


def test_critical_level_raises():
    g = instantiate(FamilySpec("bump", 3, {"a": -0.2}, 1.0), mode="grid", resolution=24)
    lo, _ = g.value_range()
    ls = extract_level_set(g, lo + 1e-14)
    if ls.critical_facets.size:
        with pytest.raises(NearCriticalError):
            level_mean_curvatures(ls)
    # the flat rim of the bump on the boundary is critical at the radial level
    r = instantiate(FamilySpec("constant", 3, {"c": 1.0}, 1.0))
    assert regularity_threshold(r) == 0.0


def test_default_ladder_endpoints(sch8):
    lo, hi = sch8.value_range()
    lad = default_ladder(sch8, 10)
    assert lad[-1] == pytest.approx(hi) and lad[0] > lo and np.all(np.diff(lad) > 0)


def test_surface_integral_of_one_is_area(sch8_grid):
    ls = extract_level_set(sch8_grid, 4.0)
    assert surface_integral(ls, 1.0) == pytest.approx(ls.area)
    assert surface_integral(ls, lambda s: np.ones_like(s.areas)) == pytest.approx(ls.area)


def test_truncated_horizon_collar_is_not_regular(sch8_grid):
    lo, hi = sch8_grid.value_range()
    ls = extract_level_set(sch8_grid, lo + 1e-3 * (hi - lo))
    assert not ls.regular
