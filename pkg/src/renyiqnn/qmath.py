"""Dense complex linear algebra primitives for 2^n-dimensional Hermitian operators.

All operators are plain complex numpy arrays. One global convention is used
throughout the package: qubit 0 is the first (leftmost) tensor factor and the
most significant bit of the computational-basis index; visible qubits occupy
the leading factors.
"""

from __future__ import annotations

import os

import numpy as np

HERM_TOL = 1e-12

# Dense storage of a 2^12 x 2^12 complex matrix is ~270 MB; refuse beyond that
# unless the user raises the cap explicitly.
_DEFAULT_DIM_CAP = 2**12


def dim_cap() -> int:
    """Maximum allowed Hilbert-space dimension (env RENYIQNN_DIM_CAP overrides)."""
    raw = os.environ.get("RENYIQNN_DIM_CAP")
    if raw is None:
        return _DEFAULT_DIM_CAP
    cap = int(raw)
    if cap < 2:
        raise ValueError(f"RENYIQNN_DIM_CAP must be >= 2, got {cap}")
    return cap


def check_dim(dim: int) -> None:
    cap = dim_cap()
    if dim > cap:
        raise ValueError(f"dimension {dim} exceeds cap {cap} (set RENYIQNN_DIM_CAP to raise)")


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def _symmetrize(m: np.ndarray) -> np.ndarray:
    # Suppress roundoff drift before eigendecomposition.
    return 0.5 * (m + m.conj().T)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product with the dimension cap enforced on the result."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    check_dim(a.shape[0] * b.shape[0])
    return np.kron(a, b)


def partial_trace(m: np.ndarray, n_keep: int, n_drop: int) -> np.ndarray:
    """Trace out the trailing n_drop qubits, keeping the leading n_keep.

    The kept qubits are the first tensor factors (visible registers live at
    the front everywhere in this package).
    """
    m = np.asarray(m)
    dk, dd = 2**n_keep, 2**n_drop
    if m.shape != (dk * dd, dk * dd):
        raise ValueError(f"matrix shape {m.shape} does not match {n_keep}+{n_drop} qubits")
    if n_drop == 0:
        return m.copy()
    return np.einsum("ijkj->ik", m.reshape(dk, dd, dk, dd))


def herm_expm(h: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """e^{scale*h} for Hermitian h, via eigendecomposition.

    Returns a Hermitian positive-definite matrix. The input is symmetrized
    first so tiny anti-Hermitian roundoff does not feed the eigensolver.
    """
    h = _symmetrize(np.asarray(h, dtype=complex))
    w, v = np.linalg.eigh(h)
    out = (v * np.exp(scale * w)) @ v.conj().T
    return _symmetrize(out)


def pinv_psd(m: np.ndarray, rel_cutoff: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a Hermitian PSD matrix.

    Eigenvalues below rel_cutoff * lambda_max are treated as exact zeros.
    """
    m = _symmetrize(np.asarray(m, dtype=complex))
    w, v = np.linalg.eigh(m)
    wmax = float(w[-1])
    if wmax <= 0.0:
        raise ValueError("rank zero: cannot pseudo-invert an all-zero PSD matrix")
    inv_w = np.where(w >= rel_cutoff * wmax, 1.0, 0.0) / np.where(w >= rel_cutoff * wmax, w, 1.0)
    return _symmetrize((v * inv_w) @ v.conj().T)


def op_norm(m: np.ndarray) -> float:
    """Operator norm of a Hermitian matrix: max |eigenvalue|."""
    w = np.linalg.eigvalsh(_symmetrize(np.asarray(m, dtype=complex)))
    return float(np.max(np.abs(w)))
