import os

import hypothesis
import pytest

from cagen.model import RUNNING_EXAMPLE_SUITE, running_example

hypothesis.settings.register_profile("ci", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def example():
    return running_example()


@pytest.fixture
def example_suite():
    return list(RUNNING_EXAMPLE_SUITE)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line, then fail the test if the check did not hold."""
    def record(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
