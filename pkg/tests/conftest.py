import numpy as np
import pytest

from onebitcs.model import (
    DeviationSpec,
    gen_deviation,
    gen_gaussian_matrix,
    gen_sparse_signal,
    measure,
    quantize,
    thresholds_from_deviation,
)

# (criterion number, line) pairs filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
            terminalreporter.write_line(line)


def make_instance(n, m, K, a, seed, sign=+1, kind="rademacher"):
    """Random (A, x, tau, bits) with ``tau = y + sign * delta``."""
    rng = np.random.default_rng(seed)
    x = gen_sparse_signal(n, K, rng)
    A = gen_gaussian_matrix(m, n, rng).entries
    delta = gen_deviation(DeviationSpec(kind, a), m, rng)
    y = measure(A, x)
    tau = thresholds_from_deviation(y, delta, sign=sign)
    return A, x, tau, quantize(y, tau).bits


@pytest.fixture
def instance():
    return make_instance
