"""Fuzzy and ideal qubit measurements, Pauli-basis protocols, and sampling.

Readout errors enter as the diagonal pair

    L0 = diag(1 - p10, p01),   L1 = diag(p10, 1 - p01),

a two-outcome POVM (L0 + L1 = I exactly). p10 = p01 = 0 recovers the ideal
computational-basis projectors. Measuring in a rotated basis conjugates every
element by the basis unitary: L_b^U = U^dag L_b U.

Basis unitaries (mapping the measured eigenbasis onto the computational
basis; outcome 0 corresponds to the +1 eigenvector):

    Z: identity
    X: (1/sqrt2) [[1,  1], [1, -1]]
    Y: (1/sqrt2) [[1, -i], [1,  i]]

Multi-qubit settings measure each qubit independently: operators, unitaries
and outcome indices tensor per qubit, with the first qubit as the most
significant bit of the outcome index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .quantum import DensityMatrix, Unitary, tensor_product

__all__ = [
    "BASIS_UNITARIES",
    "FuzzyQubitPOVM",
    "ProtocolRow",
    "CountRecord",
    "build_fuzzy_povm",
    "pauli_protocol",
    "ideal_outcome_operators",
    "outcome_probabilities",
    "sample_counts",
    "simulate_record",
]

_SQRT2 = np.sqrt(2.0)
BASIS_UNITARIES: dict[str, np.ndarray] = {
    "Z": np.eye(2, dtype=complex),
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / _SQRT2,
    "Y": np.array([[1, -1j], [1, 1j]], dtype=complex) / _SQRT2,
}


@dataclass(frozen=True)
class FuzzyQubitPOVM:
    """Two-outcome single-qubit POVM mixing the projectors with readout errors."""

    p10: float
    p01: float

    def __post_init__(self):
        if not 0.0 <= self.p10 < 1.0:
            raise ValueError(f"p10 must lie in [0, 1), got {self.p10}")
        if not 0.0 <= self.p01 < 1.0:
            raise ValueError(f"p01 must lie in [0, 1), got {self.p01}")
        if self.p10 + self.p01 >= 1.0:
            raise ValueError(
                f"p10 + p01 = {self.p10 + self.p01} leaves the outcomes uninformative")

    @property
    def elements(self) -> tuple[np.ndarray, np.ndarray]:
        l0 = np.diag([1.0 - self.p10, self.p01]).astype(complex)
        l1 = np.diag([self.p10, 1.0 - self.p01]).astype(complex)
        return l0, l1

    def to_dict(self) -> dict:
        return {"p10": self.p10, "p01": self.p01}


def build_fuzzy_povm(p10: float, p01: float) -> FuzzyQubitPOVM:
    """POVM pair for given misidentification probabilities; (0, 0) gives the
    ideal projectors."""
    return FuzzyQubitPOVM(p10=p10, p01=p01)


@dataclass(frozen=True)
class ProtocolRow:
    """One measurement setting: basis label per qubit, the rotated outcome
    operators (2^n of them), and the number of shots."""

    basis: str
    basis_unitary: Unitary
    outcome_operators: np.ndarray  # (2^n, 2^n, 2^n)
    shots: int

    def __post_init__(self):
        ops = np.asarray(self.outcome_operators, dtype=complex)
        object.__setattr__(self, "outcome_operators", ops)
        d = ops.shape[1]
        if ops.ndim != 3 or ops.shape != (d, d, d) or d != 2 ** len(self.basis):
            raise ValueError(f"expected ({d}, {d}, {d}) outcome operators for basis {self.basis!r}")
        if self.shots < 0:
            raise ValueError(f"shots must be >= 0, got {self.shots}")
        if np.abs(ops.sum(axis=0) - np.eye(d)).max() > 1e-10:
            raise ValueError("outcome operators do not sum to the identity")
        for op in ops:
            if np.abs(op - op.conj().T).max() > 1e-10:
                raise ValueError("outcome operator is not Hermitian")
            if float(np.linalg.eigvalsh(op)[0]) < -1e-10:
                raise ValueError("outcome operator is not positive semidefinite")

    @property
    def n_qubits(self) -> int:
        return len(self.basis)

    @property
    def n_outcomes(self) -> int:
        return self.outcome_operators.shape[0]


def _rotated_operators(bases: str, povms) -> np.ndarray:
    """Outcome operators U^dag (tensor of single-qubit elements) U for one row."""
    u = tensor_product([BASIS_UNITARIES[b] for b in bases])
    elements = [p.elements for p in povms]
    ops = []
    for bits in product((0, 1), repeat=len(bases)):
        l = tensor_product([elements[q][bit] for q, bit in enumerate(bits)])
        ops.append(u.conj().T @ l @ u)
    return np.stack(ops)


def pauli_protocol(n_qubits: int, povm, shots_per_basis: int) -> list[ProtocolRow]:
    """All 3^n measurement settings choosing X, Y or Z per qubit.

    `povm` is a single FuzzyQubitPOVM applied to every qubit, or a sequence of
    n per-qubit POVMs. Outcome index bit j (most significant first) is qubit
    j's outcome.
    """
    if n_qubits < 1:
        raise ValueError(f"need at least one qubit, got {n_qubits}")
    if shots_per_basis < 1:
        raise ValueError(f"shots per basis must be >= 1, got {shots_per_basis}")
    if isinstance(povm, FuzzyQubitPOVM):
        povms = [povm] * n_qubits
    else:
        povms = list(povm)
        if len(povms) != n_qubits:
            raise ValueError(f"expected {n_qubits} per-qubit POVMs, got {len(povms)}")
    rows = []
    for bases in product("XYZ", repeat=n_qubits):
        label = "".join(bases)
        u = Unitary(matrix=tensor_product([BASIS_UNITARIES[b] for b in bases]))
        rows.append(ProtocolRow(basis=label, basis_unitary=u,
                                outcome_operators=_rotated_operators(label, povms),
                                shots=shots_per_basis))
    return rows


_IDEAL = FuzzyQubitPOVM(p10=0.0, p01=0.0)


def ideal_outcome_operators(row: ProtocolRow) -> np.ndarray:
    """Rotated computational projectors for the same setting, i.e. the
    operators an error-blind analysis would assume."""
    return _rotated_operators(row.basis, [_IDEAL] * row.n_qubits)


def outcome_probabilities(rho: DensityMatrix | np.ndarray, row: ProtocolRow) -> np.ndarray:
    """Born probabilities trace(rho * L) for every outcome operator of a row."""
    mat = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if mat.shape[0] != row.outcome_operators.shape[1]:
        raise ValueError(
            f"dimension mismatch: state is {mat.shape[0]}-dim, row is {row.outcome_operators.shape[1]}-dim")
    p = np.einsum("kij,ji->k", row.outcome_operators, mat).real
    if abs(p.sum() - 1.0) > 1e-10:
        raise ValueError(f"outcome probabilities sum to {p.sum()}, expected 1")
    return np.clip(p, 0.0, 1.0)


def sample_counts(probabilities, shots: int, seed) -> np.ndarray:
    """Multinomial draw of `shots` outcomes. Deterministic for a given seed;
    `seed` may be a Generator for stream reuse."""
    p = np.asarray(probabilities, dtype=float)
    if shots < 0:
        raise ValueError(f"shots must be >= 0, got {shots}")
    if (p < -1e-9).any() or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("probabilities must be nonnegative and sum to 1 within 1e-9")
    if shots == 0:
        return np.zeros(p.size, dtype=np.int64)
    p = np.clip(p, 0.0, None)
    rng = np.random.default_rng(seed)
    return rng.multinomial(shots, p / p.sum())


@dataclass(frozen=True)
class CountRecord:
    """Observed counts for every row of a protocol, plus the error model the
    counts were generated (or are believed to have been generated) with."""

    bases: tuple[str, ...]
    counts: np.ndarray  # (n_rows, 2^n)
    shots_per_basis: int
    p10: float
    p01: float

    def __post_init__(self):
        counts = np.asarray(self.counts)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "bases", tuple(self.bases))
        if counts.ndim != 2 or counts.shape[0] != len(self.bases):
            raise ValueError("counts must be (n_rows, n_outcomes) matching the basis labels")
        if not np.allclose(counts.sum(axis=1), self.shots_per_basis, rtol=1e-12, atol=1e-6):
            raise ValueError("counts in every row must sum to shots_per_basis")

    def to_dict(self) -> dict:
        rows = [{"basis": b, "counts": np.asarray(c).tolist()} for b, c in zip(self.bases, self.counts)]
        return {"rows": rows, "shots_per_basis": int(self.shots_per_basis),
                "error_model": {"p10": self.p10, "p01": self.p01}}

    @classmethod
    def from_dict(cls, d: dict) -> "CountRecord":
        bases = tuple(r["basis"] for r in d["rows"])
        counts = np.asarray([r["counts"] for r in d["rows"]])
        return cls(bases=bases, counts=counts, shots_per_basis=d["shots_per_basis"],
                   p10=d["error_model"]["p10"], p01=d["error_model"]["p01"])


def simulate_record(rho: DensityMatrix, protocol: list[ProtocolRow], seed,
                    p10: float = 0.0, p01: float = 0.0) -> CountRecord:
    """Draw counts for every protocol row from the Born probabilities of rho.

    p10/p01 are recorded on the result for bookkeeping only; the statistics
    come entirely from the rows' outcome operators.
    """
    if not protocol:
        raise ValueError("protocol must contain at least one row")
    rng = np.random.default_rng(seed)
    counts = [sample_counts(outcome_probabilities(rho, row), row.shots, rng) for row in protocol]
    return CountRecord(bases=tuple(r.basis for r in protocol), counts=np.asarray(counts),
                       shots_per_basis=protocol[0].shots, p10=p10, p01=p01)
