import numpy as np
import pytest

from xxz_sov.params import ModelParams

ACCEPTANCE = {}


def record(number: int, title: str, passed: bool, detail: str = ""):
    ACCEPTANCE[number] = (title, bool(passed), detail)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=["massless", "massive", "generic"])
def regime(request):
    return request.param


@pytest.fixture
def params3(regime):
    return ModelParams.random(3, regime, 31)


def random_points(rng, count):
    return rng.uniform(0.6, 1.6, count) * np.exp(1j * rng.uniform(0, 2 * np.pi, count))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        line = f"{'PASS' if passed else 'FAIL'} {number:2d} {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
