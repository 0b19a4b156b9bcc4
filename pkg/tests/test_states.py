import math

import numpy as np
import pytest

from renyiqnn.hamiltonians import LCUHamiltonian, PauliTerm
from renyiqnn.states import (
    DensityMatrix,
    entanglement_entropy,
    fidelity,
    haar_unitary,
    random_density_matrix,
    thermal_state,
)
from tests.conftest import random_state_vec


def pure(vec: np.ndarray) -> DensityMatrix:
    return DensityMatrix.from_mat(np.outer(vec, vec.conj()))


class TestDensityMatrixValidation:
    def test_accepts_valid(self, rng):
        random_density_matrix(2, rng).validate()

    def test_rejects_non_hermitian(self):
        m = np.eye(2, dtype=complex) / 2
        m[0, 1] = 0.1
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix.from_mat(m).validate()

    def test_rejects_wrong_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix.from_mat(np.eye(2, dtype=complex)).validate()

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError, match="eigenvalue"):
            DensityMatrix.from_mat(np.diag([1.5, -0.5]).astype(complex)).validate()

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError, match="power of 2"):
            DensityMatrix.from_mat(np.eye(3, dtype=complex) / 3)

    def test_purity(self, rng):
        v = random_state_vec(4, rng)
        assert abs(pure(v).purity() - 1.0) < 1e-12
        assert abs(DensityMatrix.from_mat(np.eye(4, dtype=complex) / 4).purity() - 0.25) < 1e-12


class TestThermalState:
    def test_zero_hamiltonian_is_maximally_mixed(self):
        out = thermal_state(np.zeros((8, 8)))
        assert np.allclose(out.mat, np.eye(8) / 8)

    def test_ln2_sigma_z(self):
        # e^{-ln2} : e^{+ln2} = 1/2 : 2, normalized to diag(1/5, 4/5)
        h = LCUHamiltonian(1, [PauliTerm(math.log(2), ((0, "z"),))])
        assert np.allclose(thermal_state(h).mat, np.diag([0.2, 0.8]), atol=1e-12)

    def test_half_ln2_sigma_z(self):
        # ratio e^{-ln2/2} : e^{+ln2/2} = 1 : 2, i.e. diag(1/3, 2/3)
        h = LCUHamiltonian(1, [PauliTerm(math.log(2) / 2, ((0, "z"),))])
        assert np.allclose(thermal_state(h).mat, np.diag([1 / 3, 2 / 3]), atol=1e-12)

    def test_unit_trace_and_full_rank(self, rng):
        from renyiqnn.hamiltonians import random_two_local

        for _ in range(5):
            rho = thermal_state(random_two_local(3, 0.5, 0.5, rng))
            assert abs(np.trace(rho.mat) - 1) < 1e-10
            assert np.linalg.eigvalsh(rho.mat).min() > 0

    def test_rejects_huge_norm(self):
        with pytest.raises(ValueError, match="norm"):
            thermal_state(np.diag([800.0, -800.0]))


class TestFidelity:
    def test_self_fidelity(self, rng):
        rho = random_density_matrix(2, rng)
        assert abs(fidelity(rho, rho) - 1.0) < 1e-9

    def test_orthogonal_pure_states(self):
        zero = pure(np.array([1.0, 0.0], dtype=complex))
        one = pure(np.array([0.0, 1.0], dtype=complex))
        assert abs(fidelity(zero, one)) < 1e-9

    def test_pure_vs_maximally_mixed(self):
        # root convention: F(|0><0|, I/2) = sqrt(<0|I/2|0>) = sqrt(1/2)
        zero = pure(np.array([1.0, 0.0], dtype=complex))
        mixed = DensityMatrix.from_mat(np.eye(2, dtype=complex) / 2)
        assert abs(fidelity(zero, mixed) - math.sqrt(0.5)) < 1e-12

    def test_pure_pure_is_overlap_magnitude(self, rng):
        a, b = random_state_vec(4, rng), random_state_vec(4, rng)
        # rank-deficient inputs cost a few digits in the matrix square root
        assert abs(fidelity(pure(a), pure(b)) - abs(np.vdot(a, b))) < 1e-7

    def test_symmetry(self, rng):
        rho, sigma = random_density_matrix(2, rng), random_density_matrix(2, rng)
        assert abs(fidelity(rho, sigma) - fidelity(sigma, rho)) < 1e-9

    def test_unitary_invariance(self, rng):
        rho, sigma = random_density_matrix(2, rng), random_density_matrix(2, rng)
        u = haar_unitary(2, rng)
        conj = lambda m: DensityMatrix.from_mat(u @ m.mat @ u.conj().T)
        assert abs(fidelity(conj(rho), conj(sigma)) - fidelity(rho, sigma)) < 1e-9

    def test_unity_iff_equal(self, rng):
        rho = random_density_matrix(2, rng)
        sigma = random_density_matrix(2, rng)
        assert fidelity(rho, sigma) < 1.0 - 1e-6  # generic distinct pair
        assert fidelity(rho, rho) > 1.0 - 1e-9

    def test_range(self, rng):
        for _ in range(10):
            f = fidelity(random_density_matrix(2, rng), random_density_matrix(2, rng))
            assert -1e-9 <= f <= 1 + 1e-9

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            fidelity(random_density_matrix(1, rng), random_density_matrix(2, rng))


class TestHaarUnitary:
    def test_unitarity(self, rng):
        u = haar_unitary(2, rng)
        assert np.max(np.abs(u.conj().T @ u - np.eye(4))) < 1e-10

    def test_determinism(self, rng_factory):
        a = haar_unitary(2, rng_factory(5))
        b = haar_unitary(2, rng_factory(5))
        assert np.array_equal(a, b)

    def test_entry_moment_matches_haar(self, rng):
        # E|U_00|^2 = 1/dim for Haar; 3 sigma band from the empirical variance
        vals = np.array([abs(haar_unitary(2, rng)[0, 0]) ** 2 for _ in range(10000)])
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        assert abs(vals.mean() - 0.25) < 3 * se


class TestRandomDensityMatrix:
    def test_valid_and_full_rank(self, rng):
        rho = random_density_matrix(2, rng)
        rho.validate()
        assert np.linalg.eigvalsh(rho.mat).min() > 0

    def test_rank_control(self, rng):
        rho = random_density_matrix(2, rng, rank=1)
        w = np.linalg.eigvalsh(rho.mat)
        assert (w > 1e-12).sum() == 1


class TestEntanglementEntropy:
    def test_product_state_zero(self):
        v = np.zeros(8, dtype=complex)
        v[0] = 1.0
        assert abs(entanglement_entropy(pure(v), 2)) < 1e-12

    def test_bell_state(self):
        bell = np.zeros(4, dtype=complex)
        bell[0] = bell[3] = 1 / math.sqrt(2)
        assert abs(entanglement_entropy(pure(bell), 1) - math.log(2)) < 1e-10

    def test_mixed_input_rejected(self, rng):
        with pytest.raises(ValueError, match="pure"):
            entanglement_entropy(random_density_matrix(2, rng), 1)

    def test_range_and_page_report(self, rng):
        vals = []
        for _ in range(20):
            v = random_state_vec(64, rng)
            s = entanglement_entropy(pure(v), 3)
            assert -1e-9 <= s <= 3 * math.log(2) + 1e-9
            vals.append(s)
        page = 3 * math.log(2) - 0.5  # asymptotic half-system estimate, report only
        print(f"haar 3+3 entropy mean {np.mean(vals):.4f} vs page-like value {page:.4f}")
