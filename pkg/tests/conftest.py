import numpy as np
import pytest

from spincalogero.suites import build_rmatrices

ALGEBRAS = ["sl(2)", "sl(3)", "su(3)", "sl(2)^3"]


@pytest.fixture(params=ALGEBRAS)
def r_cartan(request):
    return build_rmatrices(request.param)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
