"""State vectors over a labelled computational basis.

A state is a complex amplitude array plus a basis tag telling how indices
map to bitstrings: either the full 2^n spin basis or a fixed particle-number
determinant sector (see fermion.DeterminantSector, which provides the same
dim / bitstring / index_of interface).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NormalizationError, ShapeError


@dataclass(frozen=True)
class SpinBasis:
    """Full computational basis of n qubits; qubit 1 is the most significant bit."""

    n: int

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def n_bits(self) -> int:
        return self.n

    def bitstring(self, index: int) -> str:
        return format(index, f"0{self.n}b")

    def index_of(self, bitstring: str) -> int:
        if len(bitstring) != self.n:
            raise ShapeError(f"bitstring length {len(bitstring)} != {self.n}")
        return int(bitstring, 2)


@dataclass
class StateVector:
    """Amplitudes over a tagged basis."""

    amps: np.ndarray
    basis: object

    def __post_init__(self):
        self.amps = np.asarray(self.amps)
        if self.amps.ndim != 1 or self.amps.shape[0] != self.basis.dim:
            raise ShapeError(
                f"amplitude array of length {self.amps.shape} does not match "
                f"basis dimension {self.basis.dim}"
            )

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "StateVector":
        return StateVector(self.amps / self.norm(), self.basis)

    def require_normalized(self, tol: float = 1e-9) -> None:
        nrm = self.norm()
        if abs(nrm - 1.0) > tol:
            raise NormalizationError(f"state norm {nrm} deviates from 1 by more than {tol}")

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def same_basis(self, other: "StateVector") -> bool:
        return self.basis is other.basis or self.basis == other.basis


def basis_state(basis, index: int) -> StateVector:
    """Unit vector on one basis element."""
    amps = np.zeros(basis.dim, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps, basis)


def inner(u: StateVector, v: StateVector) -> complex:
    if u.dim != v.dim:
        raise ShapeError(f"dimension mismatch {u.dim} vs {v.dim}")
    return complex(np.vdot(u.amps, v.amps))
