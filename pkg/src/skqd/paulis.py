"""Spin Hamiltonians as weighted Pauli strings.

Conventions: the computational basis is indexed by bitstrings with qubit 1
as the most significant bit, and Z|0> = +|0>. A Pauli string acts on a basis
state through bit masks: X flips a bit, Z contributes a sign from the input
bit, and Y does both with a factor of i (Y = i X Z per qubit). Term-by-term
mask application keeps the memory footprint linear in 2^n, which is what
makes iterative eigensolves feasible beyond the dense-matrix range.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import CapacityError, ConvergenceError, InvalidSizeError, ShapeError
from .states import SpinBasis, StateVector

_PAULI_CHARS = frozenset("IXYZ")


@lru_cache(maxsize=32)
def _index_array(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-qubit Paulis, e.g. 'ZZI' on 3 qubits."""

    n: int
    ops: str

    def __post_init__(self):
        if len(self.ops) != self.n:
            raise ShapeError(f"ops string of length {len(self.ops)} on {self.n} qubits")
        bad = set(self.ops) - _PAULI_CHARS
        if bad:
            raise ValueError(f"unknown Pauli characters {sorted(bad)}")

    @property
    def x_mask(self) -> int:
        m = 0
        for j, c in enumerate(self.ops):
            if c in "XY":
                m |= 1 << (self.n - 1 - j)
        return m

    @property
    def z_mask(self) -> int:
        m = 0
        for j, c in enumerate(self.ops):
            if c in "ZY":
                m |= 1 << (self.n - 1 - j)
        return m

    @property
    def phase(self) -> complex:
        return 1j ** self.ops.count("Y")


def _single(n: int, site: int, op: str) -> PauliString:
    # site is 1-based to match the j=1..n labelling of the chain models
    chars = ["I"] * n
    chars[site - 1] = op
    return PauliString(n, "".join(chars))


def _pair(n: int, site_a: int, site_b: int, op: str) -> PauliString:
    chars = ["I"] * n
    chars[site_a - 1] = op
    chars[site_b - 1] = op
    return PauliString(n, "".join(chars))


@dataclass(frozen=True)
class PauliSum:
    """Real-weighted sum of Pauli strings sharing a qubit count (Hermitian)."""

    n: int
    terms: tuple

    def __post_init__(self):
        for coeff, string in self.terms:
            if string.n != self.n:
                raise ShapeError("all Pauli strings must share the qubit count")
            if not np.isfinite(coeff):
                raise ValueError("coefficients must be finite")

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    @property
    def basis(self) -> SpinBasis:
        return SpinBasis(self.n)

    def compiled(self):
        """(coeff * phase, x_mask, z_mask) triples for mask application."""
        return [
            (coeff * string.phase, string.x_mask, string.z_mask)
            for coeff, string in self.terms
        ]

    def is_real(self) -> bool:
        """True when every term carries a real phase (even Y count)."""
        return all(string.ops.count("Y") % 2 == 0 for _, string in self.terms)


def build_tfim_open(n: int, h1: float, h2: float) -> PauliSum:
    """Open-chain Ising model with transverse field h1 and a Z pin h2 on site 1.

    H = -sum_{j=1}^{n-1} Z_j Z_{j+1} - h1 sum_j X_j - h2 Z_1

    Zero couplings are omitted from the term list.
    """
    if n < 2:
        raise InvalidSizeError(f"open chain needs n >= 2, got {n}")
    terms = [(-1.0, _pair(n, j, j + 1, "Z")) for j in range(1, n)]
    if h1 != 0.0:
        terms.extend((-float(h1), _single(n, j, "X")) for j in range(1, n + 1))
    if h2 != 0.0:
        terms.append((-float(h2), _single(n, 1, "Z")))
    return PauliSum(n, tuple(terms))


def build_tfim_periodic(n: int, h: float) -> PauliSum:
    """Periodic-chain Ising model, n ZZ bonds (including wraparound) and n X fields."""
    if n < 3:
        raise InvalidSizeError(f"periodic chain needs n >= 3, got {n}")
    terms = [(-1.0, _pair(n, j, j % n + 1, "Z")) for j in range(1, n + 1)]
    terms.extend((-float(h), _single(n, j, "X")) for j in range(1, n + 1))
    return PauliSum(n, tuple(terms))


def apply_array(h: PauliSum, amps: np.ndarray) -> np.ndarray:
    """H @ amps without materializing a dense matrix."""
    dim = 1 << h.n
    if amps.shape[0] != dim:
        raise ShapeError(f"state of length {amps.shape[0]} for {h.n} qubits")
    idx = _index_array(h.n)
    out_dtype = complex if (np.iscomplexobj(amps) or not h.is_real()) else float
    out = np.zeros(dim, dtype=out_dtype)
    for weight, x_mask, z_mask in h.compiled():
        if z_mask:
            signs = 1 - 2 * (np.bitwise_count(idx & z_mask).astype(np.int64) & 1)
            tmp = signs * amps
        else:
            tmp = amps
        w = weight if out_dtype is complex else weight.real
        if x_mask:
            out += w * tmp[idx ^ x_mask]
        else:
            out += w * tmp
    return out


def apply(h: PauliSum, v: StateVector) -> StateVector:
    if not isinstance(v.basis, SpinBasis) or v.basis.n != h.n:
        raise ShapeError("state basis does not match the Hamiltonian qubit count")
    return StateVector(apply_array(h, v.amps), v.basis)


def dense_matrix(h: PauliSum) -> np.ndarray:
    """Full 2^n x 2^n matrix, assembled term-by-term from the bit masks."""
    dim = 1 << h.n
    idx = _index_array(h.n)
    dtype = float if h.is_real() else complex
    mat = np.zeros((dim, dim), dtype=dtype)
    for weight, x_mask, z_mask in h.compiled():
        if z_mask:
            signs = 1 - 2 * (np.bitwise_count(idx & z_mask).astype(np.int64) & 1)
        else:
            signs = np.ones(dim, dtype=np.int64)
        vals = (weight if dtype is complex else weight.real) * signs
        mat[idx ^ x_mask, idx] += vals
    return mat


def linear_operator(h: PauliSum) -> scipy.sparse.linalg.LinearOperator:
    dim = 1 << h.n
    dtype = float if h.is_real() else complex
    return scipy.sparse.linalg.LinearOperator(
        (dim, dim), matvec=lambda v: apply_array(h, np.asarray(v).ravel()), dtype=dtype
    )


@dataclass(frozen=True)
class SpectrumSummary:
    """Spectral extremes and the ground vector of a spin Hamiltonian."""

    e0: float
    e1: float
    emax: float
    ground_vector: StateVector = field(repr=False)

    @property
    def gap(self) -> float:
        return self.e1 - self.e0

    @property
    def width(self) -> float:
        return self.emax - self.e0

    @property
    def operator_norm(self) -> float:
        """Spectral norm max(|E0|, |Emax|)."""
        return max(abs(self.e0), abs(self.emax))


def spectrum_summary(h: PauliSum, dense_limit: int = 14, iterative_limit: int = 24) -> SpectrumSummary:
    """E0, E1, Emax and the ground vector.

    Dense eigendecomposition up to `dense_limit` qubits, Lanczos extremal
    solves up to `iterative_limit`. The ground-vector residual is checked
    against 1e-8 either way.
    """
    n = h.n
    basis = SpinBasis(n)
    if n <= dense_limit:
        mat = dense_matrix(h)
        vals, vecs = scipy.linalg.eigh(mat)
        e0, e1, emax = float(vals[0]), float(vals[1]), float(vals[-1])
        ground = vecs[:, 0]
    elif n <= iterative_limit:
        op = linear_operator(h)
        low, vecs = scipy.sparse.linalg.eigsh(op, k=2, which="SA")
        high = scipy.sparse.linalg.eigsh(op, k=1, which="LA", return_eigenvectors=False)
        e0, e1, emax = float(low[0]), float(low[1]), float(high[0])
        ground = vecs[:, 0]
    else:
        raise CapacityError(
            f"n={n} exceeds the iterative eigensolver limit of {iterative_limit} qubits"
        )
    residual = float(np.linalg.norm(apply_array(h, ground) - e0 * ground))
    if residual > 1e-8:
        raise ConvergenceError(
            f"ground-vector residual {residual:.2e} above 1e-8", residual=residual
        )
    ground = ground / np.linalg.norm(ground)
    return SpectrumSummary(e0, e1, emax, StateVector(ground.astype(complex), basis))


def ground_pair(h: PauliSum, dense_limit: int = 12) -> tuple:
    """Two lowest eigenpairs (values, vectors), dense or Lanczos as size allows."""
    n = h.n
    if n <= dense_limit:
        vals, vecs = scipy.linalg.eigh(dense_matrix(h))
        return vals[:2], vecs[:, :2]
    op = linear_operator(h)
    vals, vecs = scipy.sparse.linalg.eigsh(op, k=2, which="SA")
    order = np.argsort(vals)
    return vals[order], vecs[:, order]
