import math

import pytest
from hypothesis import settings

from qi_spoof.scenario import load_scenario, shipped_scenario

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def set1():
    return load_scenario(shipped_scenario("set1"))


@pytest.fixture(scope="session")
def set2():
    return load_scenario(shipped_scenario("set2"))


@pytest.fixture(scope="session")
def set2_bb84():
    return load_scenario(shipped_scenario("set2_bb84"))


@pytest.fixture(scope="session")
def set3():
    return load_scenario(shipped_scenario("set3"))


def rel_close(a, b, rel=1e-12, abs_=1e-300):
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line; it is echoed now and repeated in the session summary."""

    def record(number: int, passed: bool, detail: str) -> None:
        line = f"CRITERION {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
