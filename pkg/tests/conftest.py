import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import runs  # noqa: E402


@pytest.fixture(scope="session")
def beta48():
    return runs.beta_run(48)


@pytest.fixture(scope="session")
def beta64():
    return runs.beta_run(64)


@pytest.fixture(scope="session")
def round32():
    return runs.round_run()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
