import pytest

from pathcal import BasisFunction, Factor, ModelSpec, Monomial, Scenario

import support


@pytest.fixture
def scenario():
    return Scenario(1800.0, 30.0, 1.5)


@pytest.fixture
def log_model():
    """{1, log10 d} with d in meters."""
    return ModelSpec("line", "nominal", (
        BasisFunction("one", (Monomial(1.0),)),
        BasisFunction("log d", (Monomial(1.0, (Factor("log10_d", unit="m"),)),)),
    ))


def pytest_terminal_summary(terminalreporter):
    if support.ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in support.ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
