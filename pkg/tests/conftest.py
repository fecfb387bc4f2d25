import numpy as np
import pytest

from hypsmap.grid import build_grid


@pytest.fixture(scope="session")
def grid():
    return build_grid(4096, 20.0)


@pytest.fixture(scope="session")
def coarse():
    return build_grid(1024, 20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion."""
    lines = request.config.stash[_LINES]

    def record(label: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {label}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: s.split("criterion ")[1]):
            terminalreporter.write_line(line)
