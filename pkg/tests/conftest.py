import numpy as np
import pytest

from magicflow.convolution import validate_qubit_duality

# criterion number -> printed line, filled by test_acceptance
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session", autouse=True)
def _qubit_gate():
    # the qubit fast path refuses to run until the dense oracle agrees
    validate_qubit_duality()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[num])
