import pytest
from hypothesis import settings

from ropesim import Scenario

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

FINE_RAMP = 1e-10

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def ref():
    return Scenario(m=80.0, g=9.8, L=10.0, delta_l=1.0, h0=5.0)


@pytest.fixture
def acceptance_log():
    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
