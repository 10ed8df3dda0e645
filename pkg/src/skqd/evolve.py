"""Real-time propagation, reference-state construction and Born sampling.

Krylov basis states are v_k = exp(-i k H dt) v_0 for k = 0..d-1. Small
systems use one dense eigendecomposition; larger ones use an adaptive
Hermitian Lanczos propagator per step. A second-order splitting
exp(-i dt/2 H2) exp(-i dt H1) exp(-i dt/2 H2) is available to mimic
Trotterized circuits, with each factor exponentiated by the same Lanczos
propagator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    CapacityError,
    ConfigurationError,
    ConvergenceError,
    DegenerateSpectrumError,
    InvalidSectorError,
)
from .fermion import DeterminantSector, FermionHamiltonian
from .operators import check_basis, dense_of, matvec_fn
from .paulis import SpectrumSummary
from .rng import substream
from .states import StateVector


def choose_dt(summary: SpectrumSummary) -> float:
    """Time step pi / spectral width."""
    if summary.width <= 0.0:
        raise DegenerateSpectrumError("spectral width is zero")
    return float(np.pi / summary.width)


@dataclass(frozen=True)
class EvolutionPlan:
    """How to generate d Krylov states with time step dt.

    method 'auto' picks exact-eigen up to `dense_limit` dimensions and
    lanczos-expmv beyond; 'trotter2' needs a (H1, H2) splitting.
    """

    dt: float
    steps: int
    method: str = "auto"
    tolerance: float = 1e-10
    splitting: tuple = None
    dense_limit: int = 4096

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ConfigurationError("dt must be positive")
        if self.steps < 1:
            raise ConfigurationError("need at least one Krylov state")
        if self.tolerance <= 0.0:
            raise ConfigurationError("tolerance must be positive")
        if self.method not in ("auto", "exact-eigen", "lanczos-expmv", "trotter2"):
            raise ConfigurationError(f"unknown evolution method {self.method!r}")

    def resolve_method(self, dim: int) -> str:
        if self.method == "auto":
            return "exact-eigen" if dim <= self.dense_limit else "lanczos-expmv"
        return self.method


def lanczos_expmv(mv, amps: np.ndarray, scale: complex, tol: float = 1e-10,
                  m_max: int = 120, _depth: int = 0) -> np.ndarray:
    """exp(scale * H) @ amps for Hermitian H given through its matvec.

    Builds a Lanczos basis with full reorthogonalization, exponentiates the
    tridiagonal projection, and grows the subspace until the standard
    last-component error estimate drops below tol. Falls back to two half
    steps if the subspace cap is hit.
    """
    beta0 = np.linalg.norm(amps)
    if beta0 == 0.0:
        return amps.copy()
    dim = amps.shape[0]
    m_max = min(m_max, dim)
    q = (amps / beta0).astype(complex)
    basis = [q]
    alphas, betas = [], []
    estimate = np.inf
    combo = None
    for j in range(m_max):
        w = mv(basis[-1])
        a = float(np.real(np.vdot(basis[-1], w)))
        alphas.append(a)
        w = w - a * basis[-1]
        if j > 0:
            w = w - betas[-1] * basis[-2]
        # full reorthogonalization keeps the small problem faithful
        for qi in basis:
            w = w - np.vdot(qi, w) * qi
        b = float(np.linalg.norm(w))
        lam, vecs = scipy.linalg.eigh_tridiagonal(alphas, betas)
        combo = vecs @ (np.exp(scale * lam) * vecs[0, :]) * beta0
        if b < 1e-14:  # invariant subspace found, result exact
            estimate = 0.0
            break
        # residual-style estimate: next off-diagonal times the last
        # component of the projected solution
        estimate = abs(b * combo[-1])
        if estimate < tol:
            break
        betas.append(b)
        basis.append(w / b)
    else:
        if _depth >= 8:
            raise ConvergenceError(
                f"Lanczos propagator stalled at subspace size {m_max}",
                residual=estimate,
            )
        half = lanczos_expmv(mv, amps, scale / 2.0, tol / 2.0, m_max, _depth + 1)
        return lanczos_expmv(mv, half, scale / 2.0, tol / 2.0, m_max, _depth + 1)
    out = np.zeros(dim, dtype=complex)
    for coeff, qi in zip(combo, basis):
        out += coeff * qi
    return out


def _splitting_matvecs(plan: EvolutionPlan, h, basis):
    if plan.splitting is not None:
        h1, h2 = plan.splitting
    elif isinstance(h, FermionHamiltonian):
        h1 = FermionHamiltonian(h.n_modes, h.h_one, None, h.core_shift)
        h2 = FermionHamiltonian(h.n_modes, np.zeros_like(h.h_one), h.interaction)
    else:
        raise ConfigurationError("trotter2 needs an explicit (H1, H2) splitting")
    return matvec_fn(h1, basis), matvec_fn(h2, basis)


def split_one_two(h: FermionHamiltonian) -> tuple:
    """(one-body part, two-body part) of a fermionic Hamiltonian."""
    h1 = FermionHamiltonian(h.n_modes, h.h_one, None, h.core_shift)
    h2 = FermionHamiltonian(h.n_modes, np.zeros_like(h.h_one), h.interaction)
    return h1, h2


def krylov_states(h, psi0: StateVector, plan: EvolutionPlan) -> list:
    """States exp(-i k H dt) psi0 for k = 0..steps-1; element 0 is psi0."""
    check_basis(h, psi0.basis)
    psi0.require_normalized(1e-9)
    dim = psi0.dim
    method = plan.resolve_method(dim)
    amps0 = psi0.amps.astype(complex)
    if method == "exact-eigen":
        if dim > plan.dense_limit:
            raise CapacityError(
                f"exact-eigen limited to dimension {plan.dense_limit}, got {dim}")
        mat = dense_of(h, psi0.basis)
        vals, vecs = scipy.linalg.eigh(mat)
        coeffs = vecs.conj().T @ amps0
        states = []
        for k in range(plan.steps):
            phased = np.exp(-1j * k * plan.dt * vals) * coeffs
            states.append(StateVector(vecs @ phased, psi0.basis))
        return states
    if method == "lanczos-expmv":
        mv = matvec_fn(h, psi0.basis)
        states = [StateVector(amps0.copy(), psi0.basis)]
        current = amps0
        for _ in range(plan.steps - 1):
            current = lanczos_expmv(mv, current, -1j * plan.dt, plan.tolerance)
            states.append(StateVector(current, psi0.basis))
        return states
    # trotter2: one split step per dt
    mv1, mv2 = _splitting_matvecs(plan, h, psi0.basis)
    states = [StateVector(amps0.copy(), psi0.basis)]
    current = amps0
    for _ in range(plan.steps - 1):
        current = lanczos_expmv(mv2, current, -1j * plan.dt / 2.0, plan.tolerance)
        current = lanczos_expmv(mv1, current, -1j * plan.dt, plan.tolerance)
        current = lanczos_expmv(mv2, current, -1j * plan.dt / 2.0, plan.tolerance)
        states.append(StateVector(current, psi0.basis))
    return states


def fermi_level(sec: DeterminantSector) -> int:
    """Index of the highest occupied bath momentum mode at the sector filling."""
    return sec.n_up - 1


def siam_initial_state(sec: DeterminantSector, k_f: int = None) -> StateVector:
    """Equal-amplitude superposition of the bath Fermi sea and its near-level singles.

    Per spin species: the reference determinant fills the k_f+1 lowest bath
    momentum modes (impurity empty); each of the three highest occupied
    modes is excited into each of the four lowest empty modes (impurity
    plus the three bath modes above the Fermi level), giving 13 equal-weight
    determinants per spin and 169 in the product state.
    """
    if sec.n_up != sec.n_down:
        raise InvalidSectorError("reference construction assumes equal spin counts")
    if k_f is None:
        k_f = fermi_level(sec)
    n = sec.n_modes
    if sec.n_up != k_f + 1:
        raise InvalidSectorError(
            f"sector fills {sec.n_up} modes per spin but the Fermi index {k_f} "
            f"implies {k_f + 1}")
    if k_f < 2:
        raise InvalidSectorError("need at least three occupied bath modes")
    if k_f + 4 > n - 1:
        raise InvalidSectorError("need the impurity plus three empty bath modes "
                                 "above the Fermi level")
    reference = 0
    for mode in range(1, k_f + 2):  # bath momentum modes 0..k_f sit at 1..k_f+1
        reference |= 1 << mode
    sources = [k_f - 1, k_f, k_f + 1]
    targets = [0, k_f + 2, k_f + 3, k_f + 4]
    dets = [reference]
    for q in sources:
        for p in targets:
            dets.append((reference ^ (1 << q)) | (1 << p))
    amp = 1.0 / np.sqrt(len(dets))
    spin_amps = np.zeros(sec.dim_up)
    from .fermion import _spin_tables  # local import avoids a cycle at module load

    _, up_index = _spin_tables(n, sec.n_up)
    for m in dets:
        spin_amps[up_index[m]] = amp
    amps = np.kron(spin_amps, spin_amps).astype(complex)
    return StateVector(amps, sec)


def born_sample(v: StateVector, shots: int, seed) -> dict:
    """Measurement counts from shots independent Born-rule draws.

    Sampling inverts the cumulative distribution on a stream of uniforms, so
    for a fixed seed the first m draws of a longer run coincide with an
    m-shot run: sample sets are nested across shot budgets.
    """
    v.require_normalized(1e-9)
    if shots < 0:
        raise ValueError("shot count must be nonnegative")
    counts = {}
    if shots == 0:
        return counts
    probs = v.probabilities()
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    rng = substream(seed)
    draws = np.searchsorted(cdf, rng.random(shots), side="right")
    idx, cnt = np.unique(draws, return_counts=True)
    for i, c in sorted(zip(idx.tolist(), cnt.tolist()),
                       key=lambda pair: v.basis.bitstring(pair[0])):
        counts[v.basis.bitstring(i)] = int(c)
    return counts
