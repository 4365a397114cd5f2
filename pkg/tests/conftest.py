import numpy as np
import pytest


def cgauss(rng, shape):
    z = rng.standard_normal(tuple(shape) + (2,))
    return z[..., 0] + 1j * z[..., 1]


def herm(x):
    return np.conj(np.swapaxes(x, -1, -2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance criteria register one line each here; printed in the summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
