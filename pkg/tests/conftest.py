"""Shared fixtures and independent reference helpers.

Reference implementations here deliberately avoid the package's own fast
paths (gate tables, kernel sweeps, commutator series) so that tests compare
two independent routes to the same quantity.
"""

import numpy as np
import pytest
from scipy.linalg import expm

from renyiqnn.models import UQNNParams

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string_dense(n: int, axes) -> np.ndarray:
    """Literal kron build of a Pauli string, independent of the package."""
    factors = [PAULI["i"]] * n
    for q, a in axes:
        factors[q] = PAULI[a]
    m = factors[0]
    for f in factors[1:]:
        m = np.kron(m, f)
    return m


def uqnn_state_reference(p: UQNNParams) -> np.ndarray:
    """Full pure state via dense scipy expm products, slowest possible route."""
    n = p.n_v + p.n_h
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    for g, th in zip(reversed(p.generators), reversed(p.thetas)):
        h = g.coeff * pauli_string_dense(n, g.axes)
        psi = expm(-1j * th * h) @ psi
    return psi


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (g + g.conj().T) / 2


def random_state_vec(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260815)


@pytest.fixture
def rng_factory():
    def make(seed: int) -> np.random.Generator:
        return np.random.default_rng(seed)

    return make


def fd_richardson(loss, thetas: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Richardson-extrapolated central differences, O(h^4) truncation.

    Plain central differences lose digits when the loss curvature is steep
    (ill-conditioned inverted states); this stays accurate there.
    """
    from renyiqnn.divergence import fd_gradient

    return (4.0 * fd_gradient(loss, thetas, h / 2) - fd_gradient(loss, thetas, h)) / 3.0
