import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "geomops",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("geomops")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def fd_grad(f, p, h=1e-5):
    """Central-difference gradient of a scalar function of one point."""
    p = np.asarray(p, dtype=float)
    g = np.empty(len(p))
    for i in range(len(p)):
        e = np.zeros(len(p))
        e[i] = h
        g[i] = (f(p + e) - f(p - e)) / (2 * h)
    return g


def fd_hess(f, p, h=1e-4):
    p = np.asarray(p, dtype=float)
    n = len(p)
    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            H[i, j] = (f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)) / (4 * h * h)
    return H


ACCEPTANCE = {}


def record(number, title, detail, ok):
    """Store one acceptance line; printed by the terminal summary below."""
    ACCEPTANCE[number] = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}  {title}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
