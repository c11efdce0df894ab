import pytest

from lgmdopt.events import pool_to_grid, synthesize_composite


@pytest.fixture(scope="session")
def composite():
    """Full-resolution composite stimulus and its labels (seed 0)."""
    return synthesize_composite(0)


@pytest.fixture(scope="session")
def composite32(composite):
    stream, labels = composite
    return pool_to_grid(stream, 32, 32), labels


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
