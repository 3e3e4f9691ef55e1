from __future__ import annotations

import json
from pathlib import Path

import pytest

from wolffkit import Parameters

DATA = Path(__file__).parent / "data"
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def expected():
    return json.loads((DATA / "expected_fixtures.json").read_text())


@pytest.fixture
def p3():
    return Parameters(3, 2.0, 0.5, 1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
