import pytest

from tacd.fixtures import table3_market, table3_scenario
from tacd.scenario import generate_scenario


@pytest.fixture
def table3():
    return table3_scenario()


@pytest.fixture
def market():
    return table3_market()


@pytest.fixture
def small_random():
    return generate_scenario(6, 6, seed=11)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
