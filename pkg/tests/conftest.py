import numpy as np
import pytest

from llfba.model import build_example_loop_model, build_two_cycle_model

# the textbook FBA optimum of the example network: flux runs around the loop
EXAMPLE_FBA_V = np.array([10.0, 30.0, 30.0, -20.0, 10.0])


@pytest.fixture
def example():
    return build_example_loop_model()


@pytest.fixture
def two_cycles():
    return build_two_cycle_model()


# acceptance verdicts, filled by test_acceptance.py and printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
