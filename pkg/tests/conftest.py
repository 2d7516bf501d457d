import math
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qlm.families import FamilySpec, instantiate

settings.register_profile("qlm", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qlm")


def schwarzschild_mby(r, m=1.0):
    """Closed-form boundary Brown-York mass of the n = 3 Schwarzschild sphere of radius r."""
    return r * (1.0 - math.sqrt(1.0 - 2.0 * m / r))


@pytest.fixture(scope="session")
def sch8():
    return instantiate(FamilySpec("schwarzschild", 3, {"m": 1.0}, 8.0))


@pytest.fixture(scope="session")
def sch8_grid():
    return instantiate(FamilySpec("schwarzschild", 3, {"m": 1.0}, 8.0), mode="grid", resolution=48)


@pytest.fixture(scope="session")
def cap_grid():
    return instantiate(FamilySpec("cap", 3, {"rho": 1.0}, 0.8), mode="grid", resolution=48)


@pytest.fixture(autouse=True)
def _quiet_runtime_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


# one summary line per acceptance criterion
_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    ok = _CRITERIA.setdefault(mark.args[0], True)
    _CRITERIA[mark.args[0]] = ok and not rep.failed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if _CRITERIA[k] else 'FAIL'}")
