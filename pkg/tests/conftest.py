import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from systolic_dse.core import build_table, enumerate_case1_labels, enumerate_case2_labels  # noqa: E402


@pytest.fixture(scope="session")
def table1():
    return enumerate_case1_labels()


@pytest.fixture(scope="session")
def table2():
    return enumerate_case2_labels()


@pytest.fixture(scope="session")
def table3():
    return build_table(3)


# One-line verdicts recorded by the acceptance tests, echoed after the run.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
