"""Analytic error bounds for Krylov and sampled-subspace diagonalization.

All evaluators are pure arithmetic. The verifier sweeps at the bottom draw
randomized instances, measure the quantity each bound controls, and report
one record per check so experiments can emit machine-readable evidence that
no inequality is violated.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import CapacityError, InvalidParameterError
from .paulis import PauliSum, build_tfim_open, build_tfim_periodic, dense_matrix, ground_pair
from .rng import substream


@dataclass(frozen=True)
class KqdBoundInputs:
    """Spectral data controlling Krylov convergence.

    width is the full spectral range E_max - E_0, gap the first excitation
    energy, overlap the squared ground-state overlap of the reference state,
    d the Krylov dimension. Even d falls back to the bound for d - 1.
    """

    width: float
    gap: float
    overlap: float
    d: int

    def __post_init__(self):
        if not self.gap > 0.0:
            raise InvalidParameterError("gap must be positive")
        if self.width < self.gap:
            raise InvalidParameterError("width must be at least the gap")
        if not 0.0 < self.overlap <= 1.0:
            raise InvalidParameterError("overlap must lie in (0, 1]")
        if self.d < 1:
            raise InvalidParameterError("Krylov dimension must be positive")


def kqd_energy_bound(inputs: KqdBoundInputs) -> float:
    """Worst-case KQD energy error at time step pi / width.

    8 * width * (1 - overlap)/overlap * (1 + pi*gap/width)^-(d-1), with odd
    effective d.
    """
    d = inputs.d if inputs.d % 2 == 1 else inputs.d - 1
    ratio = (1.0 - inputs.overlap) / inputs.overlap
    base = 1.0 + math.pi * inputs.gap / inputs.width
    return 8.0 * inputs.width * ratio * base ** (-(d - 1))


def state_distance_bound(energy_error: float, gap: float) -> float:
    """Bound on ||psi - phi_0||^2 for a state with the given energy error.

    2 - 2*sqrt(1 - err/gap), saturating at 2 once the error reaches the gap
    (phase fixed so the ground-state overlap is real nonnegative).
    """
    if energy_error < 0.0 or gap <= 0.0:
        raise InvalidParameterError("energy error and gap must be nonnegative/positive")
    if energy_error >= gap:
        return 2.0
    return 2.0 - 2.0 * math.sqrt(1.0 - energy_error / gap)


class ShiftedSparsity(NamedTuple):
    alpha: float
    beta: float
    clamped: bool  # True when a shifted value went negative (reported, not clipped)


def shifted_sparsity(alpha0: float, beta0: float, distance_sq: float) -> ShiftedSparsity:
    """Sparsity parameters inherited by a state within distance_sq of the reference:
    both drop by 2*sqrt(distance_sq)."""
    shift = 2.0 * math.sqrt(max(distance_sq, 0.0))
    alpha, beta = alpha0 - shift, beta0 - shift
    return ShiftedSparsity(alpha, beta, alpha < 0.0 or beta < 0.0)


def coverage_probability(overlap: float, beta: float, d: int) -> float:
    """Per-bitstring floor on max_k |<b|psi_k>|^2: overlap * beta / d^2."""
    return overlap * beta / float(d * d)


class FailureBound(NamedTuple):
    tight: float  # min(1, L (1-p)^M)
    exponential: float  # L exp(-M p)


def sampling_failure_bound(n_strings: int, p: float, shots: int) -> FailureBound:
    """Union bound on missing at least one of n_strings with per-shot floor p."""
    tight = min(1.0, n_strings * (1.0 - p) ** shots)
    return FailureBound(tight, n_strings * math.exp(-shots * p))


def subspace_energy_bound(h_norm: float, alpha0: float) -> float:
    """Energy error of the best state on the top-L strings:
    2*sqrt(2)*||H||*(1 - sqrt(alpha0))^(1/2)."""
    if not 0.0 <= alpha0 <= 1.0 + 1e-12:
        raise InvalidParameterError("alpha0 must lie in [0, 1]")
    return 2.0 * math.sqrt(2.0) * h_norm * math.sqrt(max(0.0, 1.0 - math.sqrt(min(alpha0, 1.0))))


@dataclass(frozen=True)
class SampleBoundReport:
    """Chained guarantee: energy bound plus the shot budget that certifies it."""

    eps: float
    eps_tilde: float
    eps_tilde_saturated: bool
    alpha_shift: float
    beta_shift: float
    shift_clamped: bool
    p: float
    sample_bound: float
    energy_bound: float
    vacuous: bool

    def to_dict(self) -> dict:
        return asdict(self)


def sample_complexity_report(inputs: KqdBoundInputs, alpha0: float, beta0: float,
                             n_strings: int, eta: float,
                             h_norm: float = 1.0) -> SampleBoundReport:
    """Full chain from spectral data to a per-state shot budget.

    The budget d^2 log(L/eta) / (overlap * shifted beta) guarantees all L
    important bitstrings are sampled with probability at least 1 - eta; a
    nonpositive shifted beta makes the guarantee vacuous (infinite budget).
    """
    if n_strings < 1 or not 0.0 < eta:
        raise InvalidParameterError("need n_strings >= 1 and eta > 0")
    eps = kqd_energy_bound(inputs)
    saturated = eps >= inputs.gap
    eps_tilde = state_distance_bound(eps, inputs.gap)
    shift = shifted_sparsity(alpha0, beta0, eps_tilde)
    vacuous = shift.beta <= 0.0
    if vacuous:
        p = 0.0
        sample_bound = math.inf
    else:
        p = coverage_probability(inputs.overlap, shift.beta, inputs.d)
        sample_bound = (inputs.d ** 2 * math.log(n_strings / eta)
                        / (inputs.overlap * shift.beta))
    return SampleBoundReport(
        eps=eps, eps_tilde=eps_tilde, eps_tilde_saturated=saturated,
        alpha_shift=shift.alpha, beta_shift=shift.beta, shift_clamped=shift.clamped,
        p=p, sample_bound=sample_bound,
        energy_bound=subspace_energy_bound(h_norm, alpha0), vacuous=vacuous)


# ---------------------------------------------------------------------------
# Chebyshev low-pass filter


def _chebyshev(degree: int, x: np.ndarray) -> np.ndarray:
    """T_degree(x), stable on and off [-1, 1] via cos/cosh forms."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    inside = np.abs(x) <= 1.0
    out[inside] = np.cos(degree * np.arccos(x[inside]))
    above = x > 1.0
    out[above] = np.cosh(degree * np.arccosh(x[above]))
    below = x < -1.0
    sign = -1.0 if degree % 2 else 1.0
    out[below] = sign * np.cosh(degree * np.arccosh(-x[below]))
    return out


def chebyshev_filter(theta, a: float, degree: int):
    """Normalized low-pass trigonometric filter of the given degree.

    p(theta) = T_k(1 + 2 (cos(theta) - cos(a)) / (cos(a) + 1)) / T_k(same at 0),
    so p(0) = 1 exactly and |p| <= 2 (1+a)^-degree outside (-a, a).
    """
    if not 0.0 < a < math.pi:
        raise InvalidParameterError("passband edge must lie in (0, pi)")
    if degree < 1:
        raise InvalidParameterError("degree must be positive")
    theta_arr = np.asarray(theta, dtype=float)
    cos_a = math.cos(a)
    arg = 1.0 + 2.0 * (np.cos(theta_arr) - cos_a) / (cos_a + 1.0)
    arg0 = 1.0 + 2.0 * (np.cos(0.0) - cos_a) / (cos_a + 1.0)
    vals = _chebyshev(degree, arg) / _chebyshev(degree, np.array(arg0))
    return vals if np.ndim(theta) else float(vals)


def chebyshev_fourier_coefficients(degree: int, a: float, e0: float, dt: float) -> np.ndarray:
    """Coefficients c_k, k = -degree..degree, with
    p((E - e0) dt) = sum_k c_k exp(-i k E dt).

    Exact for the trigonometric filter since it has degree `degree`; the
    coefficients satisfy sum |c_k|^2 <= 1.
    """
    n_grid = 2 * degree + 1
    phis = 2.0 * math.pi * np.arange(n_grid) / n_grid
    vals = chebyshev_filter(phis - e0 * dt, a, degree)
    ks = np.arange(-degree, degree + 1)
    phases = np.exp(1j * np.outer(ks, phis))
    return (phases @ vals) / n_grid


# ---------------------------------------------------------------------------
# periodic-chain polarization and Hamming tail


@dataclass(frozen=True)
class TailQuantities:
    """Hamming-weight statistics of the polarized periodic-chain ground state."""

    n: int
    h: float
    magnetization: float
    weight_probs: np.ndarray = field(repr=False)  # P(w), w = 0..n
    closed_form: float = None  # (1 - h^2)^(1/8) for h <= 1

    def tail(self, k: int) -> float:
        """Weight outside the Hamming-<= k subspace."""
        return float(1.0 - np.sum(self.weight_probs[: k + 1]))

    def tail_bound(self, k: int) -> float:
        """min(n (1 - magnetization) / (2k + 2), 1)."""
        return min(self.n * (1.0 - self.magnetization) / (2.0 * k + 2.0), 1.0)


def _hamming_weights(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return np.bitwise_count(idx).astype(np.int64)


def polarized_ground_state(h_pauli: PauliSum, degeneracy_tol: float = 0.01) -> np.ndarray:
    """Ground vector, symmetry-broken toward positive magnetization.

    In the ordered phase the two lowest states split only by tunneling; the
    physically polarized state is the combination of that quasi-degenerate
    pair maximizing the total Z magnetization (a 2x2 eigenproblem on the
    span), sign-fixed on the all-zeros amplitude.
    """
    vals, vecs = ground_pair(h_pauli, dense_limit=6)
    n = h_pauli.n
    if vals[1] - vals[0] < degeneracy_tol:
        mz = h_pauli.n - 2 * _hamming_weights(n).astype(float)
        m2 = np.empty((2, 2))
        for i in range(2):
            for j in range(2):
                m2[i, j] = float(np.real(np.vdot(vecs[:, i], mz * vecs[:, j])))
        _, combo = np.linalg.eigh(m2)
        psi = vecs @ combo[:, -1]
    else:
        psi = vecs[:, 0]
    if np.real(psi[0]) < 0:
        psi = -psi
    return psi / np.linalg.norm(psi)


def tfim_tail_quantities(n: int, h: float, capacity: int = 24,
                         degeneracy_tol: float = 0.01) -> TailQuantities:
    """Polarization and Hamming-tail data for the periodic chain at field h."""
    if h <= 0.0:
        raise InvalidParameterError(
            "field must be positive; the h = 0 ground space is degenerate")
    if n > capacity:
        raise CapacityError(f"n={n} exceeds the eigensolver capacity of {capacity}")
    ham = build_tfim_periodic(n, h)
    psi = polarized_ground_state(ham, degeneracy_tol)
    weights = _hamming_weights(n)
    probs = np.bincount(weights, weights=np.abs(psi) ** 2, minlength=n + 1)
    magnetization = float(np.sum(probs * (1.0 - 2.0 * np.arange(n + 1) / n)))
    closed = (1.0 - h * h) ** 0.125 if h <= 1.0 else None
    return TailQuantities(n, h, magnetization, probs, closed)


# ---------------------------------------------------------------------------
# verification sweeps


@dataclass(frozen=True)
class CheckRecord:
    """One measured-vs-bound comparison."""

    name: str
    inputs: dict
    measured: float
    bound: float
    passed: bool

    def to_dict(self) -> dict:
        def plain(value):
            if isinstance(value, (np.floating, np.integer)):
                return value.item()
            return value

        return {"name": self.name,
                "inputs": {k: plain(v) for k, v in self.inputs.items()},
                "measured": float(self.measured), "bound": float(self.bound),
                "passed": bool(self.passed)}


_SLACK = 1e-9


def _random_hermitian(rng, dim: int) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2.0


def _low_energy_state(rng, vals, vecs):
    """A state with energy error below the gap, phase-fixed on the ground state."""
    dim = vals.shape[0]
    gap = vals[1] - vals[0]
    for _ in range(60):
        scale = rng.uniform(0.01, 0.7)
        psi = vecs[:, 0] + scale * (rng.standard_normal(dim)
                                    + 1j * rng.standard_normal(dim)) / math.sqrt(dim)
        psi = psi / np.linalg.norm(psi)
        err = float(np.real(np.vdot(psi, vecs @ (vals * (vecs.conj().T @ psi)))) - vals[0])
        if 0.0 < err < gap:
            phase = np.vdot(psi, vecs[:, 0])
            if abs(phase) > 1e-14:
                psi = psi * (phase / abs(phase))
            return psi, err
    raise RuntimeError("could not draw a low-energy state")


def check_state_closeness(instances: int, seed: int, dims=(4, 8, 16, 32)) -> list:
    """Low energy error implies two-norm closeness to the ground state."""
    records = []
    for i in range(instances):
        rng = substream(seed, 0, i)
        dim = int(rng.choice(dims))
        while True:
            vals, vecs = np.linalg.eigh(_random_hermitian(rng, dim))
            if vals[1] - vals[0] > 1e-6:
                break
        psi, err = _low_energy_state(rng, vals, vecs)
        gap = float(vals[1] - vals[0])
        measured = float(np.linalg.norm(psi - vecs[:, 0]) ** 2)
        bound = state_distance_bound(err, gap)
        records.append(CheckRecord(
            "state-closeness", {"dim": dim, "energy_error": err, "gap": gap},
            measured, bound, measured <= bound + _SLACK))
    return records


def check_sparsity_transfer(instances: int, seed: int, n_qubits: int = 6) -> list:
    """Two-norm closeness transfers sparsity with a 2*sqrt(eps) penalty."""
    dim = 1 << n_qubits
    l_grid = [1, 2, 4, 8, 16, 32, dim]
    records = []
    for i in range(instances):
        rng = substream(seed, 1, i)
        phi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        phi /= np.linalg.norm(phi)
        psi = phi + rng.uniform(0.0, 0.5) * (rng.standard_normal(dim)
                                             + 1j * rng.standard_normal(dim)) / math.sqrt(dim)
        psi /= np.linalg.norm(psi)
        dist_sq = float(np.linalg.norm(psi - phi) ** 2)
        w_phi = np.sort(np.abs(phi) ** 2)[::-1]
        w_psi = np.sort(np.abs(psi) ** 2)[::-1]
        a_phi, a_psi = np.cumsum(w_phi), np.cumsum(w_psi)
        worst = np.inf
        for L in l_grid:
            shift = shifted_sparsity(float(a_phi[L - 1]), float(w_phi[L - 1]), dist_sq)
            worst = min(worst,
                        float(a_psi[L - 1]) - shift.alpha,
                        float(w_psi[L - 1]) - shift.beta)
        records.append(CheckRecord(
            "sparsity-transfer", {"dim": dim, "distance_sq": dist_sq},
            float(worst), 0.0, worst >= -_SLACK))
    return records


def certificate_floor_record(vals, vecs, psi0, d: int, top_count: int = 4) -> CheckRecord:
    """Per-bitstring overlap floor via the explicit filter-state certificate.

    The Chebyshev Fourier coefficients combine the actual Krylov states into
    a normalized state whose expansion coefficients obey
    |d_k| <= 1/|gamma_0|; every top bitstring of the ground state must then
    satisfy max_k |<b|psi_k>|^2 >= overlap * beta / d^2 with beta measured
    from the certificate state.
    """
    dim = vals.shape[0]
    gamma0 = abs(np.vdot(vecs[:, 0], psi0))
    width = float(vals[-1] - vals[0])
    dt = math.pi / width
    half = (d - 1) // 2
    a = float((vals[1] - vals[0]) * dt)
    coeffs = chebyshev_fourier_coefficients(half, a, float(vals[0]), dt)
    # actual Krylov states via the eigenbasis
    comp = vecs.conj().T @ psi0
    states = [vecs @ (np.exp(-1j * m * dt * vals) * comp) for m in range(d)]
    cert = np.zeros(dim, dtype=complex)
    for m in range(d):
        cert += coeffs[m] * states[m]  # coeffs index m maps k = m - half
    nrm = float(np.linalg.norm(cert))
    ok_norm = nrm >= gamma0 - 1e-9 and float(np.sum(np.abs(coeffs) ** 2)) <= 1.0 + 1e-9
    ok_dk = np.all(np.abs(coeffs) / nrm <= 1.0 / gamma0 + 1e-9)
    cert /= nrm
    top = np.argsort(-np.abs(vecs[:, 0]) ** 2, kind="stable")[:top_count]
    beta_meas = float(np.min(np.abs(cert[top]) ** 2))
    p = coverage_probability(gamma0 ** 2, beta_meas, d)
    measured = float(min(max(abs(st[j]) ** 2 for st in states) for j in top))
    return CheckRecord(
        "coverage-certificate",
        {"dim": dim, "d": d, "overlap": gamma0 ** 2, "beta": beta_meas},
        measured, p, bool(measured >= p - _SLACK and ok_norm and ok_dk))


def check_coverage_certificate(instances: int, seed: int, dims=(8, 16, 32),
                               d_choices=(3, 5, 7), top_count: int = 4) -> list:
    """Randomized sweep of the per-bitstring overlap floor."""
    records = []
    for i in range(instances):
        rng = substream(seed, 2, i)
        dim = int(rng.choice(dims))
        while True:
            vals, vecs = np.linalg.eigh(_random_hermitian(rng, dim))
            if vals[1] - vals[0] > 1e-4 and vals[-1] - vals[1] > 1e-6:
                break
        psi0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        psi0 = psi0 / np.linalg.norm(psi0) + 0.5 * vecs[:, 0]
        psi0 /= np.linalg.norm(psi0)
        d = int(rng.choice(d_choices))
        records.append(certificate_floor_record(vals, vecs, psi0, d, top_count))
    return records


def check_failure_probability(grid=((4, 0.1, 30), (8, 0.3, 10), (2, 0.5, 5), (16, 0.05, 50)),
                              trials: int = 100000, seed: int = 11) -> list:
    """Empirical miss frequency against the union bound, one record per point."""
    records = []
    for g, (n_strings, p, shots) in enumerate(grid):
        rng = substream(seed, 3, g)
        hits = rng.binomial(shots, p, size=(trials, n_strings))
        emp = float(np.mean(np.any(hits == 0, axis=1)))
        bound = sampling_failure_bound(n_strings, p, shots).tight
        records.append(CheckRecord(
            "sampling-failure", {"n_strings": n_strings, "p": p, "shots": shots,
                                 "trials": trials},
            emp, bound, emp <= bound))
    return records


def check_truncation_bound(n_values=(2, 3, 4, 6, 8),
                           params=((0.1, 0.1), (0.5, 0.2), (1.0, 0.1), (0.3, 0.05))) -> list:
    """Renormalized top-L truncations of chain ground states obey the
    2*sqrt(2)*||H||*(1-sqrt(alpha))^(1/2) energy bound."""
    records = []
    for n in n_values:
        for h1, h2 in params:
            ham = build_tfim_open(n, h1, h2)
            mat = dense_matrix(ham)
            vals, vecs = scipy.linalg.eigh(mat)
            h_norm = max(abs(vals[0]), abs(vals[-1]))
            gs = vecs[:, 0]
            order = np.argsort(-np.abs(gs) ** 2, kind="stable")
            alphas = np.cumsum(np.abs(gs[order]) ** 2)
            L = 1
            while L <= gs.shape[0]:
                kept = order[:L]
                trunc = np.zeros_like(gs)
                trunc[kept] = gs[kept]
                trunc /= np.linalg.norm(trunc)
                err = float(trunc @ (mat @ trunc) - vals[0])
                bound = subspace_energy_bound(h_norm, float(min(alphas[L - 1], 1.0)))
                records.append(CheckRecord(
                    "truncation-energy", {"n": n, "h1": h1, "h2": h2, "L": L},
                    err, bound, err <= bound + _SLACK))
                L *= 2
    return records


def check_chebyshev_grid(a_values=(0.1, 0.5, 1.0), max_degree: int = 50,
                         n_points: int = 1000) -> list:
    """Filter normalization and out-of-band bound on dense angle grids."""
    records = []
    for a in a_values:
        for degree in range(1, max_degree + 1):
            thetas = np.linspace(a, math.pi, n_points)
            vals = chebyshev_filter(thetas, a, degree)
            at_zero = chebyshev_filter(0.0, a, degree)
            bound = 2.0 * (1.0 + a) ** (-degree)
            measured = float(np.max(np.abs(vals)))
            ok = (measured <= bound + 1e-12 and at_zero == 1.0
                  and bool(np.all(np.isfinite(vals))))
            records.append(CheckRecord(
                "chebyshev-filter", {"a": a, "degree": degree},
                measured, bound, ok))
    return records


def check_tail_inequality(n_values=(8, 9, 10, 11, 12, 13, 14),
                          h_values=(0.1, 0.3, 0.5)) -> list:
    """Hamming tail against the polarization bound for every k < n/2."""
    records = []
    for n in n_values:
        for h in h_values:
            q = tfim_tail_quantities(n, h)
            for k in range(0, (n + 1) // 2):
                tail = q.tail(k)
                bound = q.tail_bound(k)
                records.append(CheckRecord(
                    "hamming-tail", {"n": n, "h": h, "k": k},
                    tail, bound, tail <= bound + _SLACK))
    return records
