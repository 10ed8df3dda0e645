"""Projected Krylov matrices, noise injection and the regularized GEVP.

The projected pair is H_jk = <v_j|H|v_k>, S_jk = <v_j|v_k>. For states
generated by exact evolution both matrices are Hermitian Toeplitz, since
the step unitary commutes with H; assembly can then use the first-row
generator <v_0|U^m|v_0>, <v_0|H U^m|v_0>. The generalized problem
H c = E S c is solved by canonical orthogonalization: eigendecompose S,
drop directions below a threshold, whiten, and solve the reduced ordinary
problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import EmptySubspaceError, InvalidParameterError, ShapeError
from .evolve import EvolutionPlan, krylov_states
from .operators import check_basis, matvec_fn
from .rng import substream
from .states import StateVector


@dataclass(frozen=True)
class KrylovMatrices:
    """Projected Hamiltonian and overlap pair, possibly with injected noise."""

    d: int
    h_tilde: np.ndarray = field(repr=False)
    s_tilde: np.ndarray = field(repr=False)
    noise_sigma: float = 0.0
    toeplitz: bool = False

    def __post_init__(self):
        for name, m in (("h_tilde", self.h_tilde), ("s_tilde", self.s_tilde)):
            if m.shape != (self.d, self.d):
                raise ShapeError(f"{name} must be {self.d}x{self.d}")
            if np.max(np.abs(m - m.conj().T)) > 1e-10:
                raise ShapeError(f"{name} is not Hermitian to 1e-10")


@dataclass(frozen=True)
class GevpSolution:
    energy: float
    coeffs: np.ndarray = field(repr=False)
    kept_dim: int
    threshold_used: float


@dataclass(frozen=True)
class NoiseConfig:
    """Gaussian perturbation of the projected matrices.

    sigma = 1/sqrt(shots) models shot noise on matrix-element estimation;
    target 'H' perturbs only the Hamiltonian matrix, 'HS' both.
    """

    sigma: float
    seed: int = 0
    target: str = "HS"

    def __post_init__(self):
        if self.sigma < 0.0:
            raise InvalidParameterError("noise sigma must be nonnegative")
        if self.target not in ("H", "HS"):
            raise InvalidParameterError("noise target must be 'H' or 'HS'")


def assemble(h, states, toeplitz: bool = False) -> KrylovMatrices:
    """Projected (H, S) pair from a list of states sharing one basis.

    With toeplitz=True only the first row is computed and mirrored, valid
    when the states are exact evolutions of states[0].
    """
    if not states:
        raise ShapeError("need at least one state")
    basis = states[0].basis
    for v in states:
        if v.basis is not basis and v.basis != basis:
            raise ShapeError("states do not share a basis")
        check_basis(h, v.basis)
    d = len(states)
    mv = matvec_fn(h, basis)
    if toeplitz:
        first = states[0].amps
        s_row = np.array([np.vdot(first, v.amps) for v in states])
        h_row = np.array([np.vdot(mv(first), v.amps) for v in states])
        s_mat = np.empty((d, d), dtype=complex)
        h_mat = np.empty((d, d), dtype=complex)
        for j in range(d):
            for k in range(d):
                m = k - j
                s_mat[j, k] = s_row[m] if m >= 0 else np.conj(s_row[-m])
                h_mat[j, k] = h_row[m] if m >= 0 else np.conj(h_row[-m])
    else:
        amps = np.column_stack([v.amps for v in states])
        h_amps = np.column_stack([mv(v.amps) for v in states])
        s_mat = amps.conj().T @ amps
        h_mat = amps.conj().T @ h_amps
        s_mat = (s_mat + s_mat.conj().T) / 2.0
        h_mat = (h_mat + h_mat.conj().T) / 2.0
    return KrylovMatrices(d, h_mat, s_mat, 0.0, toeplitz)


def _perturb_hermitian(mat: np.ndarray, sigma: float, rng) -> np.ndarray:
    d = mat.shape[0]
    out = mat.astype(complex).copy()
    real = rng.normal(0.0, sigma, size=(d, d))
    imag = rng.normal(0.0, sigma, size=(d, d))
    upper = np.triu_indices(d, k=1)
    out[upper] += real[upper] + 1j * imag[upper]
    out[np.diag_indices(d)] += real[np.diag_indices(d)]
    lower = np.tril_indices(d, k=-1)
    out[lower] = np.conj(out.T[lower])
    return out


def inject_noise(m: KrylovMatrices, sigma: float, seed: int = 0,
                 target: str = "HS") -> KrylovMatrices:
    """Independent N(0, sigma) on the matrix elements, re-Hermitized.

    Strictly-upper elements get independent real and imaginary draws, the
    diagonal real-only draws; the lower triangle mirrors by conjugation.
    sigma = 0 returns the input unchanged.
    """
    cfg = NoiseConfig(sigma, seed, target)
    if sigma == 0.0:
        return m
    rng_h = substream(cfg.seed, 0)
    h_new = _perturb_hermitian(m.h_tilde, sigma, rng_h)
    if cfg.target == "HS":
        rng_s = substream(cfg.seed, 1)
        s_new = _perturb_hermitian(m.s_tilde, sigma, rng_s)
    else:
        s_new = m.s_tilde
    return replace(m, h_tilde=h_new, s_tilde=s_new, noise_sigma=sigma)


def default_threshold(noise_sigma: float) -> float:
    """1e-12 noiseless; scaled with the perturbation when noise was injected."""
    return max(1e-12, 5.0 * noise_sigma) if noise_sigma > 0.0 else 1e-12


def solve_gevp(m: KrylovMatrices, threshold: float = None) -> GevpSolution:
    """Canonical orthogonalization then an ordinary Hermitian solve.

    Directions of the overlap matrix with eigenvalue <= threshold are
    discarded before whitening; the returned coefficients are expressed in
    the original Krylov basis with unit S-norm on the kept subspace.
    """
    if threshold is None:
        threshold = default_threshold(m.noise_sigma)
    if threshold < 0.0:
        raise InvalidParameterError("threshold must be nonnegative")
    s_vals, s_vecs = scipy.linalg.eigh(m.s_tilde)
    keep = s_vals > threshold
    kept = int(np.count_nonzero(keep))
    if kept == 0:
        raise EmptySubspaceError(
            f"all overlap eigenvalues at or below threshold {threshold:.3e}")
    whitener = s_vecs[:, keep] / np.sqrt(s_vals[keep])
    reduced = whitener.conj().T @ m.h_tilde @ whitener
    reduced = (reduced + reduced.conj().T) / 2.0
    vals, vecs = scipy.linalg.eigh(reduced)
    coeffs = whitener @ vecs[:, 0]
    return GevpSolution(float(vals[0]), coeffs, kept, float(threshold))


def kqd_estimate(h, psi0: StateVector, d: int, dt: float, noise: NoiseConfig = None,
                 threshold: float = None, plan_kwargs: dict = None) -> GevpSolution:
    """Full KQD pipeline: evolve, project, optionally perturb, solve."""
    plan = EvolutionPlan(dt=dt, steps=d, **(plan_kwargs or {}))
    states = krylov_states(h, psi0, plan)
    exact = plan.resolve_method(psi0.dim) in ("exact-eigen", "lanczos-expmv")
    mats = assemble(h, states, toeplitz=exact)
    if noise is not None and noise.sigma > 0.0:
        mats = inject_noise(mats, noise.sigma, noise.seed, noise.target)
    return solve_gevp(mats, threshold)
