import numpy as np
import pytest

from lmmse_mismatch.numkit import RandomStream

# Filled by tests/test_acceptance.py; printed once at the end of the run.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)


@pytest.fixture
def stream():
    return RandomStream(2024)


def random_psd(rng, p, rank=None):
    C = rng.standard_normal((rank or p, p))
    K = C.T @ C / p
    return 0.5 * (K + K.T)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
