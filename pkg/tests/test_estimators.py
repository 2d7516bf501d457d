import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from qlm import FlatDistance, QuasiLocalMass, StabilityAnalyzer
from qlm.families import FamilySpec, instantiate
from qlm.flat import decompose
from qlm.stability import compute_h_o

from conftest import schwarzschild_mby


@pytest.fixture(scope="module")
def sch16():
    return instantiate(FamilySpec("schwarzschild", 3, {"m": 0.1}, 16.0))


@pytest.mark.parametrize("est", [QuasiLocalMass(K=32), StabilityAnalyzer(K=32), FlatDistance()])
def test_params_round_trip_and_clone(est):
    p = est.get_params()
    c = clone(est)
    assert c.get_params() == p
    with pytest.raises(NotFittedError):
        c.transform([1.0])


def test_quasi_local_mass(sch8):
    est = QuasiLocalMass(K=32).fit(sch8)
    assert est.m_BY_ == pytest.approx(schwarzschild_mby(8.0), rel=1e-12)
    out = est.transform([2.0, 4.0])
    assert out.shape == (2, 2)
    assert np.allclose(out[:, 1], 1.0)
    assert out[0, 0] > out[1, 0]
    assert est.set_params(K=64).K == 64
    assert QuasiLocalMass().fit(sch8).transform([]).shape == (0, 2)


def test_stability_analyzer(sch16):
    est = StabilityAnalyzer(K=32).fit(sch16)
    assert est.h_o_ == pytest.approx(compute_h_o(sch16, K=32))
    y = est.transform([est.h_o_ - 1.0, est.h_o_])
    assert np.isnan(y[0]) and y[1] == pytest.approx(est.threshold_ / 2)


def test_flat_distance(sch16):
    est = FlatDistance().fit(sch16)
    assert est.dF_bound_ == pytest.approx(decompose(sch16, est.bound_.h_o).dF_bound)
    v = est.transform([0.0, 1.0])
    assert v.shape == (2,) and np.all(v > 0)
    with pytest.raises(ValueError):
        est.transform([np.nan])
