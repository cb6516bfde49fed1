import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pptcost.sdp import SolverConfig
from pptcost.states import punch_card_pi0

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

# filled by test_acceptance, printed once at the end of the run
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def pi0():
    return punch_card_pi0()


@pytest.fixture(scope="session")
def cfg():
    return SolverConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {line}")
