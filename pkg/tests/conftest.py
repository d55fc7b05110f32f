import numpy as np
import pytest

import oracles


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if oracles.ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(oracles.ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
