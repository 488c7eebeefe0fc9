from pathlib import Path

import pytest

from cpve.model import parse_model_file

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

_acceptance_lines: list[str] = []


@pytest.fixture
def fixture_path():
    return lambda name: FIXTURES / f"{name}.toml"


@pytest.fixture
def load():
    return lambda name: parse_model_file(FIXTURES / f"{name}.toml")


@pytest.fixture
def criterion():
    """Record one acceptance line; the summary is printed at the end of the run."""

    def record(number: int, ok: bool, detail: str):
        _acceptance_lines.append(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
