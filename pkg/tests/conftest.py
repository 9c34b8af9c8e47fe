import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def sample_covariance_with_stderr(X):
    """Sample covariance of the rows of ``X`` (zero mean known) and per-entry standard errors."""
    n = X.shape[0]
    P = X[:, :, None] * X.conj()[:, None, :]
    mean = P.mean(axis=0)
    se = P.real.std(axis=0, ddof=1) / np.sqrt(n) + 1j * P.imag.std(axis=0, ddof=1) / np.sqrt(n)
    return mean, se


def assert_within(estimate, expected, se, k):
    diff = estimate - expected
    slack = 1e-12 * max(1.0, np.abs(expected).max())
    assert np.all(np.abs(diff.real) <= k * se.real + slack), np.max(np.abs(diff.real) / (se.real + 1e-300))
    assert np.all(np.abs(diff.imag) <= k * se.imag + slack), np.max(np.abs(diff.imag) / (se.imag + 1e-300))


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


def pytest_terminal_summary(terminalreporter):
    lines = getattr(sys.modules.get("test_acceptance"), "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
