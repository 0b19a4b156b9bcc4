"""Pauli-basis Hamiltonians: random two-/three-local models, LCU form, normalization.

A Pauli string is stored sparsely as an axes list [(qubit, "x"|"y"|"z"), ...].
Its dense action on index i is a bit flip plus a phase, which keeps every
state-preparation and trace evaluation O(2^n) instead of O(4^n).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from . import qmath

AXES = ("x", "y", "z")

PAULI_MATS = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _parity(v: np.ndarray) -> np.ndarray:
    """Bit parity of each entry (works for indices below 2^32)."""
    v = v.copy()
    for shift in (16, 8, 4, 2, 1):
        v ^= v >> shift
    return v & 1


def _bit(q: int, n: int) -> int:
    # Qubit 0 is the most significant bit of the basis index.
    return 1 << (n - 1 - q)


@dataclass(frozen=True)
class PauliTerm:
    """One weighted Pauli string: coeff * prod_q sigma_axis(q)."""

    coeff: float
    axes: tuple[tuple[int, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "axes", tuple((int(q), str(a)) for q, a in self.axes))
        qubits = [q for q, _ in self.axes]
        if any(a not in AXES for _, a in self.axes):
            raise ValueError(f"bad axis in {self.axes}")
        if sorted(set(qubits)) != qubits:
            raise ValueError(f"qubit indices must be strictly increasing: {qubits}")
        if qubits and qubits[0] < 0:
            raise ValueError("negative qubit index")

    def masks(self, n_qubits: int) -> tuple[int, int, int]:
        """(xmask, zmask, n_y) with P = i^{n_y} X^xmask Z^zmask."""
        x = z = ny = 0
        for q, a in self.axes:
            if q >= n_qubits:
                raise ValueError(f"qubit {q} out of range for n={n_qubits}")
            b = _bit(q, n_qubits)
            if a in ("x", "y"):
                x |= b
            if a in ("z", "y"):
                z |= b
            ny += a == "y"
        return x, z, ny

    def action(self, n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
        """(idx, col_phase) of the unit-coefficient string: P|i> = col_phase[i] |idx[i]>.

        Applying to a vector is `(col_phase * v)[idx]` since idx is an involution.
        """
        x, z, ny = self.masks(n_qubits)
        return string_action(x, z, n_qubits, ny)

    def dense(self, n_qubits: int) -> np.ndarray:
        """Dense coeff * Pauli-string matrix."""
        d = 2**n_qubits
        qmath.check_dim(d)
        idx, col_phase = self.action(n_qubits)
        m = np.zeros((d, d), dtype=complex)
        m[idx, np.arange(d)] = self.coeff * col_phase
        return m


def string_action(
    xmask: int, zmask: int, n_qubits: int, n_y: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Action arrays for i^{n_y} X^xmask Z^zmask on the 2^n basis."""
    d = 2**n_qubits
    i = np.arange(d)
    idx = i ^ xmask
    col_phase = (1j**n_y) * np.where(_parity(i & zmask) == 1, -1.0, 1.0).astype(complex)
    return idx, col_phase


def apply_string(v: np.ndarray, idx: np.ndarray, col_phase: np.ndarray) -> np.ndarray:
    """P v for a string in action form."""
    return (col_phase * v)[idx]


def string_trace(m: np.ndarray, idx: np.ndarray, col_phase: np.ndarray) -> complex:
    """Tr(P m) in O(dim): sum_k col_phase[k] * m[k, idx[k]]."""
    d = m.shape[0]
    return complex(np.sum(col_phase * m[np.arange(d), idx]))


@dataclass
class LCUHamiltonian:
    """H = sum_l coeff_l * PauliString_l on n_qubits qubits."""

    n_qubits: int
    terms: list[PauliTerm] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen = set()
        for t in self.terms:
            if t.axes in seen:
                raise ValueError(f"duplicate Pauli string {t.axes}")
            seen.add(t.axes)

    def alpha_norm(self) -> float:
        """l1 norm of the coefficient vector."""
        return float(sum(abs(t.coeff) for t in self.terms))

    def dense(self) -> np.ndarray:
        d = 2**self.n_qubits
        qmath.check_dim(d)
        m = np.zeros((d, d), dtype=complex)
        cols = np.arange(d)
        for t in self.terms:
            idx, col_phase = t.action(self.n_qubits)
            m[idx, cols] += t.coeff * col_phase
        return m

    def to_json_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "terms": [
                {"coeff": float(t.coeff), "axes": [[q, a] for q, a in t.axes]}
                for t in self.terms
            ],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "LCUHamiltonian":
        terms = [
            PauliTerm(float(t["coeff"]), tuple((int(q), a) for q, a in t["axes"]))
            for t in doc["terms"]
        ]
        return cls(int(doc["n_qubits"]), terms)

    def save_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)

    @classmethod
    def load_json(cls, path: str) -> "LCUHamiltonian":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def dense(h: LCUHamiltonian) -> np.ndarray:
    return h.dense()


def single_axes(n: int) -> list[tuple[tuple[int, str], ...]]:
    return [((q, a),) for q in range(n) for a in AXES]


def pair_axes(n: int) -> list[tuple[tuple[int, str], ...]]:
    return [
        ((i, a), (j, b))
        for i, j in combinations(range(n), 2)
        for a, b in product(AXES, AXES)
    ]


def triple_axes(n: int) -> list[tuple[tuple[int, str], ...]]:
    return [
        ((i, a), (j, b), (k, c))
        for i, j, k in combinations(range(n), 3)
        for a, b, c in product(AXES, AXES, AXES)
    ]


def two_local_terms(n: int, coeff: float = 1.0) -> list[PauliTerm]:
    """All 3n + 9*C(n,2) two-local strings in canonical order.

    Order is deterministic: by locality, then qubit indices, then axes
    (x < y < z), so the same list always enumerates the same way.
    """
    return [PauliTerm(coeff, ax) for ax in single_axes(n) + pair_axes(n)]


def random_two_local(
    n: int, std_single: float, std_pair: float, rng: np.random.Generator
) -> LCUHamiltonian:
    """Random H2 = sum_i J^i_a s_a^i + sum_{i<j} J^{ij}_{ab} s_a^i s_b^j."""
    if n < 1:
        raise ValueError("need at least one qubit")
    terms = [PauliTerm(std_single * rng.standard_normal(), ax) for ax in single_axes(n)]
    terms += [PauliTerm(std_pair * rng.standard_normal(), ax) for ax in pair_axes(n)]
    return LCUHamiltonian(n, terms)


def random_three_local(n: int, std: float, rng: np.random.Generator) -> LCUHamiltonian:
    """Random H3 = H2 + triple terms, all coefficients ~ N(0, std^2)."""
    if n < 3:
        raise ValueError("three-local terms need n >= 3")
    axes = single_axes(n) + pair_axes(n) + triple_axes(n)
    terms = [PauliTerm(std * rng.standard_normal(), ax) for ax in axes]
    return LCUHamiltonian(n, terms)


def normalize(h: LCUHamiltonian, tau: float) -> LCUHamiltonian:
    """Rescale coefficients so the dense realization has operator norm tau."""
    norm = qmath.op_norm(h.dense())
    if norm == 0.0:
        raise ValueError("cannot normalize the zero Hamiltonian")
    s = tau / norm
    return LCUHamiltonian(h.n_qubits, [PauliTerm(s * t.coeff, t.axes) for t in h.terms])
