import numpy as np
import pytest

from periodic_lindblad.bath import ExponentialBath
from periodic_lindblad.spectral import SystemModel, decompose
from periodic_lindblad.steering import CosineSteering

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
H_QUBIT = np.diag([-0.5, 0.5]).astype(complex)
# drive frequency of the canonical fast-driving model; congruence-free for {0, +-1}
OMEGA_FAST = 3.7


def random_density(d, rng):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


def random_hermitian(d, rng):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (A + A.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def qubit_model():
    return SystemModel(H_QUBIT, (SX,))


@pytest.fixture
def qubit_spec(qubit_model):
    return decompose(qubit_model)


@pytest.fixture
def cos_fast():
    return CosineSteering(Omega=OMEGA_FAST)


@pytest.fixture
def exp_bath():
    return ExponentialBath(a=1.0, c=1.0)
