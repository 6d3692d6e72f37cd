import numpy as np
import pytest

from dpkirchhoff.config import build_problem, default_config
from dpkirchhoff.exponents import ExponentField, WeightField
from dpkirchhoff.mesh import rect_mesh

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = report.user_properties and dict(report.user_properties).get("criterion")
    if crit:
        _CRITERIA[crit] = "PASS" if report.outcome == "passed" else "FAIL"


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m is not None:
        item.user_properties.append(("criterion", (m.args[0], m.args[1])))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), outcome in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"criterion {num} [{title}]: {outcome}")


@pytest.fixture(scope="session")
def problem():
    return build_problem(default_config())


@pytest.fixture(scope="session")
def fields():
    p = ExponentField.sine(1.3, 0.1, name="p")
    q = ExponentField.affine(1.6, 0.0, 0.1, name="q")
    mu = WeightField(lambda x: x[..., 0], 0.0, 1.0, spec={"kind": "affine", "cx": 1.0})
    return p, q, mu


@pytest.fixture(scope="session")
def mesh3():
    return rect_mesh(3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
