"""Sample-based diagonalization: sampled subspaces, projection, solving.

Bitstrings collected from the Krylov states span a subspace; the
Hamiltonian is projected onto it by enumerating its action on each basis
string and keeping in-basis connections, then the lowest eigenpair of the
projected matrix is found. Counts inform diagnostics and optional
truncation but never weight the projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .errors import (
    ConvergenceError,
    InvalidBasisError,
    InvalidParameterError,
    InvalidSectorError,
)
from .evolve import EvolutionPlan, born_sample, krylov_states
from .fermion import DeterminantSector, FermionHamiltonian, determinant_moves
from .paulis import PauliSum
from .rng import substream
from .states import StateVector


# ---------------------------------------------------------------------------
# sample sets


@dataclass(frozen=True)
class SampleSet:
    """Merged measurement counts with per-Krylov-state provenance."""

    counts: dict
    n_bits: int
    provenance: tuple = ()
    seed: int = None

    def __post_init__(self):
        for s, c in self.counts.items():
            if len(s) != self.n_bits:
                raise InvalidBasisError(f"bitstring {s!r} does not have {self.n_bits} bits")
            if c <= 0:
                raise InvalidBasisError("counts must be positive")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def distinct(self) -> int:
        return len(self.counts)

    def support(self) -> list:
        return sorted(self.counts)

    def top_by_count(self, limit: int) -> list:
        """The `limit` most-sampled bitstrings, ties broken lexicographically."""
        ranked = sorted(self.counts, key=lambda s: (-self.counts[s], s))
        return sorted(ranked[:limit])

    def to_lines(self) -> str:
        return "".join(f"{s}\t{self.counts[s]}\n" for s in sorted(self.counts))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_lines())

    @classmethod
    def load(cls, path) -> "SampleSet":
        counts = {}
        n_bits = 0
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                s, c = line.rstrip("\n").split("\t")
                counts[s] = int(c)
                n_bits = len(s)
        return cls(counts, n_bits)

    @classmethod
    def merged(cls, parts, n_bits: int, provenance=(), seed=None) -> "SampleSet":
        counts = {}
        for part in parts:
            for s, c in part.items():
                counts[s] = counts.get(s, 0) + c
        return cls(counts, n_bits, tuple(provenance), seed)


@dataclass(frozen=True)
class SectorRule:
    """Per-spin or total Hamming-weight constraint on bitstrings."""

    n_bits: int
    up_weight: int = None
    down_weight: int = None
    total_weight: int = None

    def __post_init__(self):
        per_spin = self.up_weight is not None or self.down_weight is not None
        if per_spin and (self.up_weight is None or self.down_weight is None):
            raise InvalidParameterError("per-spin rule needs both weights")
        if per_spin and self.n_bits % 2:
            raise InvalidParameterError("per-spin rule needs an even bit count")
        if not per_spin and self.total_weight is None:
            raise InvalidParameterError("rule must constrain something")

    @classmethod
    def from_sector(cls, sec: DeterminantSector) -> "SectorRule":
        return cls(2 * sec.n_modes, sec.n_up, sec.n_down)

    def matches(self, bitstring: str) -> bool:
        if self.up_weight is not None:
            half = self.n_bits // 2
            return (bitstring[:half].count("1") == self.up_weight
                    and bitstring[half:].count("1") == self.down_weight)
        return bitstring.count("1") == self.total_weight


def collect_samples(states, shots: int, seed: int) -> SampleSet:
    """Born samples from every Krylov state, one substream per state index."""
    if shots < 1:
        raise InvalidParameterError("need at least one shot per state")
    parts = []
    provenance = []
    for k, v in enumerate(states):
        parts.append(born_sample(v, shots, np.random.SeedSequence(seed, spawn_key=(k,))))
        provenance.append((k, shots))
    return SampleSet.merged(parts, states[0].basis.n_bits, provenance, seed)


def _enumerate_constrained(rule: SectorRule):
    from .fermion import _mask_to_string, _spin_tables

    if rule.up_weight is not None:
        half = rule.n_bits // 2
        ups, _ = _spin_tables(half, rule.up_weight)
        downs, _ = _spin_tables(half, rule.down_weight)
        return [
            _mask_to_string(mu, half) + _mask_to_string(md, half)
            for mu in ups
            for md in downs
        ]
    n = rule.n_bits
    masks, _ = _spin_tables(n, rule.total_weight)
    return [_mask_to_string(m, n) for m in masks]


def uniform_baseline(n_bits: int, total: int, seed: int,
                     constraint: SectorRule = None) -> SampleSet:
    """Uniform draws over all n-bit strings or over a constrained set."""
    if total < 1:
        raise InvalidParameterError("need at least one draw")
    rng = substream(seed)
    counts = {}
    if constraint is None:
        if n_bits > 62:
            raise InvalidParameterError("unconstrained sampling capped at 62 bits")
        draws = rng.integers(0, 1 << n_bits, size=total)
        idx, cnt = np.unique(draws, return_counts=True)
        for i, c in zip(idx.tolist(), cnt.tolist()):
            counts[format(i, f"0{n_bits}b")] = int(c)
    else:
        if constraint.n_bits != n_bits:
            raise InvalidParameterError("constraint bit count mismatch")
        strings = _enumerate_constrained(constraint)
        if not strings:
            raise InvalidSectorError("constraint admits no bitstrings")
        draws = rng.integers(0, len(strings), size=total)
        idx, cnt = np.unique(draws, return_counts=True)
        for i, c in zip(idx.tolist(), cnt.tolist()):
            counts[strings[i]] = int(c)
    return SampleSet(counts, n_bits, ((-1, total),), seed)


def postselect(samples: SampleSet, rule: SectorRule):
    """Keep conforming bitstrings; returns (filtered set, discarded fraction)."""
    kept = {s: c for s, c in samples.counts.items() if rule.matches(s)}
    total = samples.total
    discarded = 0.0 if total == 0 else 1.0 - sum(kept.values()) / total
    return (SampleSet(kept, samples.n_bits, samples.provenance, samples.seed),
            float(discarded))


def corrupt_samples(samples: SampleSet, flip_prob: float, seed: int) -> SampleSet:
    """Independent per-bit flips on every recorded shot (noise injection hook)."""
    if not 0.0 <= flip_prob <= 1.0:
        raise InvalidParameterError("flip probability must be in [0, 1]")
    if flip_prob == 0.0:
        return samples
    rng = substream(seed)
    counts = {}
    for s in sorted(samples.counts):
        c = samples.counts[s]
        bits = np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")
        flips = rng.random((c, samples.n_bits)) < flip_prob
        flipped = np.bitwise_xor(bits[None, :], flips.astype(np.uint8))
        for row in flipped:
            t = "".join("1" if b else "0" for b in row)
            counts[t] = counts.get(t, 0) + 1
    return SampleSet(counts, samples.n_bits, samples.provenance, samples.seed)


# ---------------------------------------------------------------------------
# projection and solving


def _project_spin(h: PauliSum, basis_strings) -> sp.csr_matrix:
    index = {}
    ints = []
    for pos, s in enumerate(basis_strings):
        b = int(s, 2)
        if b in index:
            raise InvalidBasisError(f"duplicate basis bitstring {s}")
        index[b] = pos
        ints.append(b)
    rows, cols, vals = [], [], []
    compiled = h.compiled()
    for j, b in enumerate(ints):
        for weight, x_mask, z_mask in compiled:
            target = b ^ x_mask
            pos = index.get(target)
            if pos is None:
                continue
            sign = -1.0 if bin(b & z_mask).count("1") & 1 else 1.0
            rows.append(pos)
            cols.append(j)
            vals.append(weight * sign)
    d = len(ints)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(d, d))
    if h.is_real():
        mat = mat.real
    return mat


def _project_fermion(h: FermionHamiltonian, basis_strings) -> sp.csr_matrix:
    first = basis_strings[0]
    n = h.n_modes
    if len(first) != 2 * n:
        raise InvalidBasisError(f"expected {2 * n}-bit strings")
    half = n
    n_up = first[:half].count("1")
    n_down = first[half:].count("1")
    sec = DeterminantSector(n, n_up, n_down)
    index = {}
    pairs = []
    for pos, s in enumerate(basis_strings):
        if s[:half].count("1") != n_up or s[half:].count("1") != n_down:
            raise InvalidBasisError(f"bitstring {s} outside sector ({n_up},{n_down})")
        if s in index:
            raise InvalidBasisError(f"duplicate basis bitstring {s}")
        iu, idn = sec.split(sec.index_of(s))
        index[(iu, idn)] = pos
        pairs.append((iu, idn))
    one_up, one_down, rank_up, rank_down, strength = determinant_moves(h, sec)
    rows, cols, vals = [], [], []
    for j, (iu, idn) in enumerate(pairs):
        acc = {}
        for i2, amp in one_up[iu]:
            key = (i2, idn)
            acc[key] = acc.get(key, 0.0) + amp
        for i2, amp in one_down[idn]:
            key = (iu, i2)
            acc[key] = acc.get(key, 0.0) + amp
        if rank_up is not None:
            for i2, a_up in rank_up[iu]:
                for i3, a_dn in rank_down[idn]:
                    key = (i2, i3)
                    acc[key] = acc.get(key, 0.0) + strength * a_up * a_dn
        if h.core_shift:
            key = (iu, idn)
            acc[key] = acc.get(key, 0.0) + h.core_shift
        for key, amp in acc.items():
            pos = index.get(key)
            if pos is None:
                continue
            rows.append(pos)
            cols.append(j)
            vals.append(amp)
    d = len(pairs)
    return sp.csr_matrix((vals, (rows, cols)), shape=(d, d))


def project_hamiltonian(h, basis_strings) -> sp.csr_matrix:
    """Sparse <b_i|H|b_j> over an ordered, deduplicated bitstring basis."""
    basis_strings = list(basis_strings)
    if not basis_strings:
        raise InvalidBasisError("empty basis")
    if isinstance(h, PauliSum):
        return _project_spin(h, basis_strings)
    if isinstance(h, FermionHamiltonian):
        return _project_fermion(h, basis_strings)
    raise TypeError(f"unsupported Hamiltonian type {type(h).__name__}")


def solve_subspace(h_proj, dense_limit: int = 2000, tol: float = 1e-9):
    """Lowest eigenpair of the projected matrix; dense below `dense_limit`.

    Iterative solves go through implicitly restarted Lanczos; the residual
    of the returned pair is verified against `tol`.
    """
    d = h_proj.shape[0]
    if d == 1:
        val = h_proj[0, 0] if not sp.issparse(h_proj) else h_proj.toarray()[0, 0]
        return float(np.real(val)), np.ones(1)
    if d <= dense_limit:
        dense = h_proj.toarray() if sp.issparse(h_proj) else np.asarray(h_proj)
        vals, vecs = scipy.linalg.eigh(dense)
        energy, coeffs = float(vals[0]), vecs[:, 0]
    else:
        mat = h_proj.tocsc() if sp.issparse(h_proj) else sp.csc_matrix(h_proj)
        try:
            vals, vecs = scipy.sparse.linalg.eigsh(mat, k=1, which="SA", tol=0,
                                                   maxiter=50 * d)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            achieved = np.nan
            if len(exc.eigenvalues):
                achieved = float(np.linalg.norm(
                    mat @ exc.eigenvectors[:, 0]
                    - exc.eigenvalues[0] * exc.eigenvectors[:, 0]))
            raise ConvergenceError("subspace eigensolve did not converge",
                                   residual=achieved) from exc
        energy, coeffs = float(vals[0]), vecs[:, 0]
    coeffs = coeffs / np.linalg.norm(coeffs)
    residual = float(np.linalg.norm(h_proj @ coeffs - energy * coeffs))
    if residual > max(tol, 1e-12 * max(1.0, abs(energy)) * d):
        raise ConvergenceError(
            f"residual {residual:.2e} above tolerance", residual=residual)
    return energy, coeffs


@dataclass(frozen=True)
class SubspaceProblem:
    """Sampled-basis projection with its solved lowest eigenpair."""

    basis: list
    h_proj: object = field(repr=False)
    energy: float
    ground_coeffs: np.ndarray = field(repr=False)
    sector: DeterminantSector = None
    rotation: np.ndarray = None

    @property
    def dim(self) -> int:
        return len(self.basis)

    def state(self) -> StateVector:
        """Ground coefficients embedded back into the tagged full basis."""
        if self.sector is None:
            raise InvalidParameterError("no sector attached to this problem")
        amps = np.zeros(self.sector.dim, dtype=complex)
        for s, c in zip(self.basis, self.ground_coeffs):
            amps[self.sector.index_of(s)] = c
        return StateVector(amps, self.sector)


def skqd_estimate(h, psi0: StateVector, d: int, dt: float, shots: int, seed: int,
                  *, plan_kwargs: dict = None, postselect_rule: SectorRule = None,
                  corruption: float = 0.0, d_max: int = None,
                  dense_limit: int = 2000) -> SubspaceProblem:
    """Sample all Krylov states, project onto the sampled span, diagonalize."""
    plan = EvolutionPlan(dt=dt, steps=d, **(plan_kwargs or {}))
    states = krylov_states(h, psi0, plan)
    samples = collect_samples(states, shots, seed)
    if corruption > 0.0:
        samples = corrupt_samples(samples, corruption, seed + 104729)
    if postselect_rule is not None:
        samples, _ = postselect(samples, postselect_rule)
    basis = samples.support() if d_max is None else samples.top_by_count(d_max)
    h_proj = project_hamiltonian(h, basis)
    energy, coeffs = solve_subspace(h_proj, dense_limit=dense_limit)
    sec = psi0.basis if isinstance(psi0.basis, DeterminantSector) else None
    return SubspaceProblem(basis, h_proj, energy, coeffs, sector=sec)


def best_of_seeds(h, psi0: StateVector, d: int, dt: float, shots: int, seeds,
                  **kwargs) -> SubspaceProblem:
    """Lowest-energy run across seeds (safe selection under the variational floor)."""
    best = None
    for seed in seeds:
        problem = skqd_estimate(h, psi0, d, dt, shots, seed, **kwargs)
        if best is None or problem.energy < best.energy:
            best = problem
    return best


# ---------------------------------------------------------------------------
# sparsity diagnostics


@dataclass(frozen=True)
class SparsityProfile:
    """Descending basis weights of a state with cumulative and per-rank views."""

    sorted_weights: np.ndarray = field(repr=False)
    order: np.ndarray = field(repr=False)
    basis: object = field(repr=False)

    @property
    def alpha(self) -> np.ndarray:
        """alpha[L-1] = total weight captured by the top L bitstrings."""
        return np.cumsum(self.sorted_weights)

    @property
    def beta(self) -> np.ndarray:
        """beta[L-1] = weight of the L-th largest bitstring."""
        return self.sorted_weights

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.sorted_weights))

    def top_bitstrings(self, count: int) -> list:
        return [self.basis.bitstring(int(i)) for i in self.order[:count]]

    def smallest_l(self, alpha_target: float) -> int:
        """Smallest L whose cumulative weight reaches alpha_target."""
        reached = np.nonzero(self.alpha >= alpha_target)[0]
        if len(reached) == 0:
            raise InvalidParameterError(f"state never reaches alpha {alpha_target}")
        return int(reached[0]) + 1


def sparsity_profile(v: StateVector) -> SparsityProfile:
    v.require_normalized(1e-9)
    weights = v.probabilities()
    order = np.argsort(-weights, kind="stable")
    return SparsityProfile(weights[order], order, v.basis)


def coverage_check(samples: SampleSet, v_reference: StateVector, count: int):
    """Whether the top `count` bitstrings of the reference state were all sampled.

    Returns (covered, missing list).
    """
    if count < 1:
        raise InvalidParameterError("need a positive bitstring count")
    profile = sparsity_profile(v_reference)
    if count > profile.support_size:
        raise InvalidParameterError(
            f"count {count} exceeds reference support {profile.support_size}")
    top = profile.top_bitstrings(count)
    missing = [s for s in top if s not in samples.counts]
    return len(missing) == 0, missing
