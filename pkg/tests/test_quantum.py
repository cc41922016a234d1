import numpy as np
import pytest
from scipy.stats import kstest

from iontomo import (
    DensityMatrix,
    PureState,
    Unitary,
    fidelity,
    haar_random_pure_state,
    tensor_product,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)


class TestTypes:
    def test_pure_state_norm_enforced(self):
        with pytest.raises(ValueError):
            PureState(amplitudes=np.array([1.0, 1.0]), n_qubits=1)

    def test_pure_state_dimension_check(self):
        with pytest.raises(ValueError):
            PureState(amplitudes=np.array([1.0, 0.0, 0.0]), n_qubits=1)

    def test_density_matrix_validation(self):
        with pytest.raises(ValueError):
            DensityMatrix(matrix=np.array([[0.5, 0.5j], [0.5j, 0.5]]), n_qubits=1)
        with pytest.raises(ValueError):
            DensityMatrix(matrix=np.diag([0.7, 0.7]).astype(complex), n_qubits=1)
        with pytest.raises(ValueError):
            DensityMatrix(matrix=np.diag([1.5, -0.5]).astype(complex), n_qubits=1)

    def test_unitary_validation(self):
        Unitary(matrix=np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2))
        with pytest.raises(ValueError):
            Unitary(matrix=np.array([[1, 1], [1, 1]], dtype=complex) / np.sqrt(2))

    def test_density_from_pure_state(self):
        psi = haar_random_pure_state(2, 3)
        rho = psi.density()
        assert rho.n_qubits == 2
        assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-12)

    def test_serialization_round_trips(self):
        psi = haar_random_pure_state(2, 11)
        assert np.allclose(PureState.from_dict(psi.to_dict()).amplitudes, psi.amplitudes)
        rho = psi.density()
        assert np.allclose(DensityMatrix.from_dict(rho.to_dict()).matrix, rho.matrix)


class TestHaarSampling:
    def test_unit_norm(self):
        for seed in range(5):
            psi = haar_random_pure_state(3, seed)
            assert abs(np.linalg.norm(psi.amplitudes) - 1.0) < 1e-12

    def test_deterministic(self):
        a = haar_random_pure_state(2, 42)
        b = haar_random_pure_state(2, 42)
        np.testing.assert_array_equal(a.amplitudes, b.amplitudes)

    def test_needs_a_qubit(self):
        with pytest.raises(ValueError):
            haar_random_pure_state(0, 1)

    def test_first_moment(self):
        rng = np.random.default_rng(2024)
        values = [abs(haar_random_pure_state(1, rng).amplitudes[0]) ** 2 for _ in range(10_000)]
        assert np.mean(values) == pytest.approx(0.5, abs=0.02)

    def test_overlap_uniformity(self):
        # for Haar-random single-qubit states |c0|^2 is uniform on [0, 1]
        rng = np.random.default_rng(7)
        values = [abs(haar_random_pure_state(1, rng).amplitudes[0]) ** 2 for _ in range(100_000)]
        assert kstest(values, "uniform").pvalue > 1e-3


class TestFidelity:
    def test_self_fidelity(self):
        psi = haar_random_pure_state(2, 0)
        assert fidelity(psi.density(), psi) == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed(self):
        psi = haar_random_pure_state(2, 1)
        assert fidelity(DensityMatrix.maximally_mixed(2), psi) == pytest.approx(0.25, abs=1e-12)

    def test_orthogonal_states(self):
        a = PureState.from_amplitudes([1, 0])
        b = PureState.from_amplitudes([0, 1])
        assert fidelity(a.density(), b) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fidelity(DensityMatrix.maximally_mixed(2), haar_random_pure_state(1, 0))

    def test_linearity_in_rho(self):
        psi = haar_random_pure_state(2, 5)
        rho1 = haar_random_pure_state(2, 6).density().matrix
        rho2 = haar_random_pure_state(2, 7).density().matrix
        f1 = fidelity(DensityMatrix.from_matrix(rho1), psi)
        f2 = fidelity(DensityMatrix.from_matrix(rho2), psi)
        for alpha in (0.0, 0.25, 0.5, 1.0):
            mixed = DensityMatrix.from_matrix(alpha * rho1 + (1 - alpha) * rho2)
            expected = alpha * f1 + (1 - alpha) * f2
            assert fidelity(mixed, psi) == pytest.approx(expected, abs=1e-10)


class TestTensorProduct:
    def test_identities(self):
        np.testing.assert_array_equal(tensor_product([np.eye(2), np.eye(2)]), np.eye(4))

    def test_diagonal(self):
        d = np.diag([0.9, 0.1])
        np.testing.assert_allclose(tensor_product([d, d]), np.diag([0.81, 0.09, 0.09, 0.01]))

    def test_basis_action(self):
        ket00 = np.array([1, 0, 0, 0], dtype=complex)
        ket10 = np.array([0, 0, 1, 0], dtype=complex)
        np.testing.assert_allclose(tensor_product([X, Z]) @ ket00, ket10)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            tensor_product([])
