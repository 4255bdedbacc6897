from __future__ import annotations

import pathlib

import pytest

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture
def data_text():
    def read(name: str) -> str:
        return (DATA / name).read_text(encoding="utf-8")

    return read


@pytest.fixture
def data_path():
    def path(name: str) -> str:
        return str(DATA / name)

    return path


# One verdict line per acceptance criterion, echoed after the run so the
# lines survive output capture.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
