import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial.transform import Rotation

from qlm import (ConfigError, DomainError, HorizonProximityError, PreconditionError, ball_criterion,
                 check_admissibility, graph_mean_curvature, mean_curvature_sign_check, scalar_curvature)
from qlm.families import FamilySpec, instantiate
from qlm.geometry import (curvature_sample, graph_mean_curvature_array, induced_metric, principal_curvatures,
                          scalar_curvature_array)


def _shape_eigs(g, H):
    # generalized symmetric eigenproblem Pi v = k g v
    W = np.sqrt(1 + g @ g)
    return scipy.linalg.eigh(H / W, induced_metric(g), eigvals_only=True)


finite = st.floats(-3, 3, allow_nan=False)


@given(arrays(float, 3, elements=finite), arrays(float, (3, 3), elements=finite))
def test_curvatures_match_generalized_eigenproblem(g, A):
    H = 0.5 * (A + A.T)
    k = _shape_eigs(g, H)
    assert graph_mean_curvature_array(g, H) == pytest.approx(k.sum(), abs=1e-9)
    R_ref = k.sum() ** 2 - (k**2).sum()
    assert scalar_curvature_array(g, H) == pytest.approx(R_ref, abs=1e-8)
    assert np.allclose(np.sort(principal_curvatures(g, H)), np.sort(k), atol=1e-8)


@given(arrays(float, 3, elements=finite), arrays(float, (3, 3), elements=finite), st.integers(0, 2**31))
def test_scalar_curvature_rotation_invariant(g, A, seed):
    H = 0.5 * (A + A.T)
    Q = Rotation.random(random_state=seed).as_matrix()
    R0 = scalar_curvature_array(g, H)
    R1 = scalar_curvature_array(Q @ g, Q @ H @ Q.T)
    assert R1 == pytest.approx(R0, abs=1e-8 * (1 + abs(R0)))


def test_cap_has_constant_curvature_analytic():
    rho = 1.3
    g = instantiate(FamilySpec("cap", 3, {"rho": rho}, 1.0))
    s = curvature_sample(g, [0.3, 0.2, -0.1])
    assert s.scalar_curvature == pytest.approx(6 / rho**2, rel=1e-10)
    assert s.mean_curvature == pytest.approx(3 / rho, rel=1e-10)
    assert np.allclose(s.principal_curvatures, 1 / rho)
    assert s.max_sectional == pytest.approx(1 / rho**2)


def test_cap_grid_curvature(cap_grid):
    mid = tuple(r // 2 for r in cap_grid.grid.resolution)
    assert scalar_curvature(cap_grid, mid) == pytest.approx(6.0, rel=1e-2)
    assert graph_mean_curvature(cap_grid, mid) == pytest.approx(3.0, rel=1e-2)


def test_schwarzschild_is_scalar_flat(sch8):
    for r in (2.5, 4.0, 7.5):
        assert abs(scalar_curvature(sch8, r)) < 1e-12
        assert graph_mean_curvature(sch8, r) > 0


def test_saddle_curvature_at_origin():
    a = 0.5
    g = instantiate(FamilySpec("saddle", 3, {"a": a}, 1.0), mode="grid", resolution=17)
    mid = (8, 8, 8)
    assert np.allclose(g.point_of(mid), 0, atol=1e-12)
    assert scalar_curvature(g, mid) == pytest.approx(-8 * a * a, rel=1e-9)


def test_node_api_errors(sch8, cap_grid):
    with pytest.raises(DomainError):
        scalar_curvature(sch8, 9.0)
    with pytest.raises(HorizonProximityError):
        scalar_curvature(sch8, 2.0)
    with pytest.raises(DomainError):
        scalar_curvature(cap_grid, (0, 0, 0))
    with pytest.raises(DomainError):
        scalar_curvature(cap_grid, (999, 0, 0))


@pytest.mark.parametrize("kind, expected", [("schwarzschild", "pass"), ("cap", "pass"), ("constant", "pass"),
                                            ("paraboloid", "pass"), ("gravity_well", "fail"),
                                            ("saddle", "fail")])
def test_admissibility_verdicts(kind, expected):
    R = {"schwarzschild": 4.0, "cap": 0.8}.get(kind, 1.0)
    spec = FamilySpec(kind, 3, {}, R)
    g = instantiate(spec, mode="analytic" if spec.radial else "grid", resolution=24)
    rep = check_admissibility(g)
    assert rep.verdict == expected
    if kind in ("gravity_well", "saddle"):
        assert rep.negative_R_certificate["R"] < 0


def test_mean_curvature_sign():
    assert mean_curvature_sign_check(instantiate(FamilySpec("constant", 3, {}, 1.0))).verdict == "degenerate-zero"
    s = mean_curvature_sign_check(instantiate(FamilySpec("schwarzschild", 3, {}, 4.0)))
    assert s.verdict == "single-signed" and s.sign == 1
    c = mean_curvature_sign_check(instantiate(FamilySpec("cap", 3, {}, 0.8)))
    assert c.verdict == "single-signed" and c.sign == 1
    assert c.min_H == pytest.approx(3.0)
    w = mean_curvature_sign_check(instantiate(FamilySpec("gravity_well", 3, {"w": 0.5, "d": 1.0}, 1.0)))
    assert w.verdict == "mixed"


def test_ball_criterion_cap():
    rho = 1.0
    g = instantiate(FamilySpec("cap", 3, {"rho": rho}, 0.5))
    rep = ball_criterion(g)
    assert rep.C == pytest.approx(1 / rho, rel=1e-8)
    assert rep.threshold == pytest.approx(rho / 2)
    flat = ball_criterion(instantiate(FamilySpec("constant", 3, {}, 1.0)))
    assert flat.threshold == float("inf")
    with pytest.raises(PreconditionError):
        ball_criterion(instantiate(FamilySpec("schwarzschild", 4, {}, 4.0)))
