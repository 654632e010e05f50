import numpy as np
import pytest

ACCEPTANCE_LINES = []


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(rng, dim, rank=None):
    rank = dim if rank is None else rank
    w = rng.uniform(0.1, 1.0, size=rank)
    w = np.concatenate([w / w.sum(), np.zeros(dim - rank)])
    u = random_unitary(rng, dim)
    return (u * w) @ u.conj().T


def random_pd(rng, dim, lo=0.2, hi=2.0):
    u = random_unitary(rng, dim)
    return (u * rng.uniform(lo, hi, size=dim)) @ u.conj().T


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (a + a.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def record(line):
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def qubit2d_reference(r, z0):
    """Closed-form Sigma, J, tau of the 2-D qubit family at (0, r), as tabulated in the literature."""
    z = z0 * np.sqrt(1 - r**2)
    a = z0**2 / z
    b = z0**2 / z**2
    Sigma = np.array([
        [1, -1j * a, 1j * r - z],
        [1j * a, b, -(r / z + 1j) * z0**2],
        [-1j * r - z, -(r / z - 1j) * z0**2, 1],
    ])
    J = np.array([[1, -1j * a], [1j * a, b]])
    tau = np.array([
        [1, -1j * a],
        [1j * a, b],
        [-1j * r - z, -(r / z - 1j) * z0**2],
    ])
    return Sigma, J, tau
