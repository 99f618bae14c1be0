import numpy as np
import pytest

from bsmimo.antenna import DipoleArraySpec, build_network
from bsmimo.pattern import make_grid

ACCEPTANCE_RESULTS = {}


@pytest.fixture(scope="session")
def default_spec():
    return DipoleArraySpec.default()


@pytest.fixture(scope="session")
def default_net(default_spec):
    return build_network(default_spec)


@pytest.fixture(scope="session")
def small_net():
    """Coarse-grid array at three frequencies, cheap enough for sweeps."""
    spec = DipoleArraySpec.default(n_freq=3, span=(0.9, 1.1))
    return build_network(spec, make_grid(32, 64))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    ac = None
    for kw in report.keywords:
        if kw.startswith("ac") and kw[2:].isdigit():
            ac = int(kw[2:])
    if ac is None:
        return
    if report.when == "call" or report.outcome != "passed":
        ok = ACCEPTANCE_RESULTS.get(ac, (True, []))[0] and report.outcome == "passed"
        names = ACCEPTANCE_RESULTS.get(ac, (True, []))[1] + [report.nodeid.split("::")[-1]]
        ACCEPTANCE_RESULTS[ac] = (ok, names)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for ac in sorted(ACCEPTANCE_RESULTS):
        ok, names = ACCEPTANCE_RESULTS[ac]
        tr.write_line(f"AC{ac:<2} {'PASS' if ok else 'FAIL'}  ({len(names)} checks)")


def pytest_configure(config):
    for i in range(1, 11):
        config.addinivalue_line("markers", f"ac{i}: acceptance criterion {i}")
