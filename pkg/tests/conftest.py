import numpy as np
import pytest

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENT2 = np.eye(2, dtype=complex)

# energy eigenbasis convention: excited = (1, 0), ground = (0, 1)
KET_E = np.array([1.0, 0.0], dtype=complex)
KET_G = np.array([0.0, 1.0], dtype=complex)
KET_PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
KET_MINUS = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)

P_PLUS = np.outer(KET_PLUS, KET_PLUS.conj())
P_MINUS = np.outer(KET_MINUS, KET_MINUS.conj())

H_QUBIT = SZ / 2.0

# |+> -> |g> and |-> -> |g>, completed unitarily
U_PLUS_TO_G = np.array([[1.0, -1.0], [1.0, 1.0]], dtype=complex) / np.sqrt(2.0)
U_MINUS_TO_G = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)


def ket_dm(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
