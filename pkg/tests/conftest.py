import numpy as np
import pytest

from sgkron.cxlinalg import unit_det_normalize
from sgkron.model import ThetaKron


def rand_herm(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def rand_hpd(rng, d, unit_det=True):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T / d + 0.5 * np.eye(d)
    return unit_det_normalize(m)[0] if unit_det else m


def rand_theta(rng, a, b, n):
    return ThetaKron(rand_hpd(rng, a), rand_hpd(rng, b), rng.uniform(0.5, 2.0, n))


def rand_patch(rng, n, p):
    return (rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))) / np.sqrt(2)


def dense_cost(x, theta):
    """Reference cost with the full covariance tau_i * kron(A, B)."""
    sigma = np.kron(theta.a_factor, theta.b_factor)
    total = 0.0
    for xi, t in zip(np.atleast_2d(x), theta.textures):
        s = t * sigma
        total += np.linalg.slogdet(s)[1] + np.real(xi.conj() @ np.linalg.solve(s, xi))
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Acceptance results, printed as one line each at the end of the session.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
