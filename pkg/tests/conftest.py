"""Shared fixtures and the acceptance summary printed at the end of a run."""

import numpy as np
import pytest

CRITERIA: list[str] = []


def record(number: int, title: str, passed: bool, detail: str) -> str:
    line = f"[criterion {number:2d}] {'PASS' if passed else 'FAIL'} {title}: {detail}"
    CRITERIA.append(line)
    print(line)
    return line


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(CRITERIA):
        terminalreporter.write_line(line)
