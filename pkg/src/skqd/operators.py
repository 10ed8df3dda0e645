"""Dispatch helpers treating spin and fermionic Hamiltonians uniformly."""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .fermion import DeterminantSector, FermionHamiltonian, sector_matrix
from .paulis import PauliSum, apply_array, dense_matrix
from .states import SpinBasis, StateVector


def check_basis(h, basis) -> None:
    if isinstance(h, PauliSum):
        if not isinstance(basis, SpinBasis) or basis.n != h.n:
            raise ShapeError("state basis does not match the spin Hamiltonian")
    elif isinstance(h, FermionHamiltonian):
        if not isinstance(basis, DeterminantSector) or basis.n_modes != h.n_modes:
            raise ShapeError("state basis does not match the fermionic Hamiltonian")
    else:
        raise TypeError(f"unsupported Hamiltonian type {type(h).__name__}")


def matvec_fn(h, basis):
    """Callable computing H @ amps in the given basis."""
    check_basis(h, basis)
    if isinstance(h, PauliSum):
        return lambda amps: apply_array(h, amps)
    mat = sector_matrix(h, basis)
    return lambda amps: mat @ amps


def dense_of(h, basis) -> np.ndarray:
    check_basis(h, basis)
    if isinstance(h, PauliSum):
        return dense_matrix(h)
    return sector_matrix(h, basis).toarray()


def expectation(h, v: StateVector) -> float:
    mv = matvec_fn(h, v.basis)
    return float(np.real(np.vdot(v.amps, mv(v.amps))))
