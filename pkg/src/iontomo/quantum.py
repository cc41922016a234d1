"""Dense complex linear algebra for multi-qubit states.

Pure states and density matrices are plain numpy arrays wrapped in thin
validated containers; everything here targets the few-qubit regime (dense
2^n x 2^n matrices, n up to ~6).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

__all__ = [
    "PureState",
    "DensityMatrix",
    "Unitary",
    "haar_random_pure_state",
    "fidelity",
    "tensor_product",
]

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-9
NORM_TOL = 1e-12


def _n_qubits_for(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2**n != dim or n < 1:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


def _complex_to_pairs(a: np.ndarray) -> list:
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _pairs_to_complex(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


@dataclass(frozen=True)
class PureState:
    """Normalized state vector on n qubits."""

    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        if _n_qubits_for(amps.size) != self.n_qubits:
            raise ValueError(f"amplitude vector of length {amps.size} does not match {self.n_qubits} qubits")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state vector norm deviates from 1 by {abs(norm - 1.0):.2e}")

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(amplitudes=amps, n_qubits=_n_qubits_for(amps.size))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityMatrix":
        return DensityMatrix(matrix=np.outer(self.amplitudes, self.amplitudes.conj()),
                             n_qubits=self.n_qubits)

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "amplitudes": _complex_to_pairs(self.amplitudes)}

    @classmethod
    def from_dict(cls, d: dict) -> "PureState":
        return cls(amplitudes=_pairs_to_complex(d["amplitudes"]), n_qubits=d["n_qubits"])


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix on n qubits."""

    matrix: np.ndarray
    n_qubits: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if _n_qubits_for(m.shape[0]) != self.n_qubits:
            raise ValueError(f"matrix of dimension {m.shape[0]} does not match {self.n_qubits} qubits")
        if np.abs(m - m.conj().T).max() > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian within tolerance")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace deviates from 1 by {abs(np.trace(m).real - 1.0):.2e}")
        if float(np.linalg.eigvalsh(m)[0]) < EIGENVALUE_FLOOR:
            raise ValueError("density matrix has a negative eigenvalue beyond tolerance")

    @classmethod
    def from_matrix(cls, matrix) -> "DensityMatrix":
        m = np.asarray(matrix, dtype=complex)
        return cls(matrix=m, n_qubits=_n_qubits_for(m.shape[0]))

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        d = 2**n_qubits
        return cls(matrix=np.eye(d, dtype=complex) / d, n_qubits=n_qubits)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "matrix": _complex_to_pairs(self.matrix)}

    @classmethod
    def from_dict(cls, d: dict) -> "DensityMatrix":
        return cls(matrix=_pairs_to_complex(d["matrix"]), n_qubits=d["n_qubits"])


@dataclass(frozen=True)
class Unitary:
    """Unitary matrix acting on n qubits."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("unitary must be square")
        defect = np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]), ord=2)
        if defect > 1e-10:
            raise ValueError(f"matrix is not unitary: ||U^dag U - I|| = {defect:.2e}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def haar_random_pure_state(n_qubits: int, seed) -> PureState:
    """Haar-distributed pure state: i.i.d. standard complex Gaussian vector,
    normalized. Deterministic for a given seed; `seed` may be anything
    accepted by numpy.random.default_rng, including a Generator."""
    if n_qubits < 1:
        raise ValueError(f"need at least one qubit, got {n_qubits}")
    rng = np.random.default_rng(seed)
    dim = 2**n_qubits
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(amplitudes=v / np.linalg.norm(v), n_qubits=n_qubits)


def fidelity(rho: DensityMatrix, psi: PureState) -> float:
    """Overlap <psi| rho |psi>, clamped to [0, 1]."""
    if rho.dim != psi.dim:
        raise ValueError(f"dimension mismatch: rho is {rho.dim}-dim, psi is {psi.dim}-dim")
    value = float(np.real(psi.amplitudes.conj() @ rho.matrix @ psi.amplitudes))
    if value < -1e-9 or value > 1.0 + 1e-9:
        raise ValueError(f"fidelity {value} outside the numerically valid range")
    return min(max(value, 0.0), 1.0)


def tensor_product(ops) -> np.ndarray:
    """Kronecker product of a list of square matrices, in list order."""
    mats = [np.asarray(op, dtype=complex) for op in ops]
    if not mats:
        raise ValueError("tensor product of an empty list is undefined")
    return reduce(np.kron, mats)
