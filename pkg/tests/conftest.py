from __future__ import annotations

import pytest

from confinit.config import default_config


@pytest.fixture
def small_config():
    # 20 nodes for 30 s: enough churn to exercise every handler, fast under both engines
    return default_config(n_nodes=20, duration_s=30.0, attacker_fraction=0.2, seed=7)


# Acceptance criteria record one verdict line each; they are printed together
# at the end of the session so they show up without -s.
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    def record(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
