"""Experiment recipes behind the command-line runner.

Each experiment takes a frozen config dataclass and returns rows (dicts with
a fixed column order) that the CLI serializes to CSV. Randomness is keyed by
(base seed, sweep coordinates) through a splittable generator, so results
are independent of worker count and execution order.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np
import scipy.sparse.linalg as sla

from . import bounds
from .errors import ConfigurationError
from .evolve import EvolutionPlan, choose_dt, fermi_level, krylov_states, siam_initial_state
from .fermion import (
    build_siam_position,
    half_filling_sector,
    one_rdm,
    sector_matrix,
    staggered_density_correlation,
    staggered_spin_correlation,
    to_k_adjacent_natural_orbitals,
    to_momentum_basis,
)
from .krylov import assemble, default_threshold, inject_noise, solve_gevp
from .paulis import build_tfim_open, spectrum_summary
from .sqd import (
    SectorRule,
    SubspaceProblem,
    collect_samples,
    postselect,
    project_hamiltonian,
    solve_subspace,
    uniform_baseline,
)
from .states import SpinBasis, StateVector, basis_state


def derive_seed(base: int, *coords) -> int:
    """Deterministic child seed for one sweep point."""
    ss = np.random.SeedSequence((int(base),) + tuple(int(c) for c in coords))
    return int(ss.generate_state(1)[0])


def parallel_map(fn, items, threads: int = 1):
    """Order-preserving map, optionally on a thread pool."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _config_from_dict(cls, data: dict):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigurationError(
            f"unknown config keys for {cls.KIND}: {sorted(unknown)}")
    try:
        cfg = cls(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in data.items()})
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# bench-tfim: sampled-subspace vs noisy-matrix Krylov across chain sizes


@dataclass(frozen=True)
class BenchTfimConfig:
    KIND = "bench-tfim"
    n: tuple = (6, 8, 10, 12)
    h1: float = 0.1
    h2: float = 0.1
    d: int = 15
    dt: object = "auto"
    m_list: tuple = (10, 100, 1000)
    n_seeds: int = 100
    base_seed: int = 0
    sigma: float = 1.0 / math.sqrt(5000.0)
    noise_targets: tuple = ("H", "HS")
    threshold: object = "auto"
    output: Optional[str] = None

    def validate(self):
        if self.d < 1 or self.n_seeds < 1:
            raise ConfigurationError("d and n_seeds must be positive")
        if any(n < 2 for n in self.n):
            raise ConfigurationError("chain sizes must be at least 2")
        if self.sigma < 0:
            raise ConfigurationError("sigma must be nonnegative")
        if any(t not in ("H", "HS") for t in self.noise_targets):
            raise ConfigurationError("noise targets must be 'H' or 'HS'")
        if self.dt != "auto" and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ConfigurationError("dt must be 'auto' or a positive number")


BENCH_COLUMNS = ["kind", "n", "method", "M", "sigma", "seed", "d", "dt", "D",
                 "kept_dim", "energy", "energy_ref", "abs_error", "rel_error",
                 "time_s"]


def _bench_row(cfg, n, method, dt, e_ref, energy, elapsed, *, m="", sigma="",
               seed="", dim="", kept=""):
    abs_err = abs(energy - e_ref)
    return {
        "kind": cfg.KIND, "n": n, "method": method, "M": m, "sigma": sigma,
        "seed": seed, "d": cfg.d, "dt": dt, "D": dim, "kept_dim": kept,
        "energy": energy, "energy_ref": e_ref, "abs_error": abs_err,
        "rel_error": abs_err / abs(e_ref) if e_ref != 0 else "",
        "time_s": elapsed,
    }


def run_bench_tfim(cfg: BenchTfimConfig, threads: int = 1):
    """Noisy-KQD baselines and best-of-seed sampled subspaces on open chains."""

    def one_size(n):
        rows = []
        ham = build_tfim_open(n, cfg.h1, cfg.h2)
        summary = spectrum_summary(ham)
        dt = choose_dt(summary) if cfg.dt == "auto" else float(cfg.dt)
        psi0 = basis_state(SpinBasis(n), 0)
        states = krylov_states(ham, psi0, EvolutionPlan(dt=dt, steps=cfg.d))
        mats = assemble(ham, states, toeplitz=True)

        t0 = time.perf_counter()
        clean = solve_gevp(mats, None if cfg.threshold == "auto" else cfg.threshold)
        rows.append(_bench_row(cfg, n, "kqd", dt, summary.e0, clean.energy,
                               time.perf_counter() - t0, sigma=0.0,
                               kept=clean.kept_dim))
        for target in cfg.noise_targets:
            for trial in range(cfg.n_seeds):
                seed = derive_seed(cfg.base_seed, n, trial, 1 if target == "HS" else 0)
                t0 = time.perf_counter()
                noisy = inject_noise(mats, cfg.sigma, seed, target)
                threshold = (default_threshold(cfg.sigma)
                             if cfg.threshold == "auto" else cfg.threshold)
                sol = solve_gevp(noisy, threshold)
                rows.append(_bench_row(
                    cfg, n, f"kqd-noisy-{target}", dt, summary.e0, sol.energy,
                    time.perf_counter() - t0, sigma=cfg.sigma, seed=seed,
                    kept=sol.kept_dim))
        for trial in range(cfg.n_seeds):
            seed = derive_seed(cfg.base_seed, n, trial)
            for m in cfg.m_list:
                t0 = time.perf_counter()
                samples = collect_samples(states, m, seed)
                basis_strings = samples.support()
                energy, _ = solve_subspace(project_hamiltonian(ham, basis_strings),
                                           dense_limit=600)
                rows.append(_bench_row(
                    cfg, n, "skqd", dt, summary.e0, energy,
                    time.perf_counter() - t0, m=m, seed=seed,
                    dim=len(basis_strings)))
        return rows

    chunks = parallel_map(one_size, cfg.n, threads)
    return [row for chunk in chunks for row in chunk]


# ---------------------------------------------------------------------------
# kqd: convergence of the matrix pipeline in the Krylov dimension


@dataclass(frozen=True)
class KqdConfig:
    KIND = "kqd"
    n: int = 8
    h1: float = 0.1
    h2: float = 0.1
    d_list: tuple = (3, 5, 7, 9, 11, 13, 15)
    dt: object = "auto"
    sigma: float = 0.0
    noise_target: str = "HS"
    n_seeds: int = 1
    base_seed: int = 0
    threshold: object = "auto"
    output: Optional[str] = None

    def validate(self):
        if self.n < 2:
            raise ConfigurationError("chain size must be at least 2")
        if self.sigma < 0:
            raise ConfigurationError("sigma must be nonnegative")
        if self.noise_target not in ("H", "HS"):
            raise ConfigurationError("noise target must be 'H' or 'HS'")


KQD_COLUMNS = ["kind", "n", "method", "sigma", "target", "seed", "d", "dt",
               "kept_dim", "energy", "energy_ref", "bound", "abs_error",
               "rel_error", "time_s"]


def run_kqd(cfg: KqdConfig, threads: int = 1):
    ham = build_tfim_open(cfg.n, cfg.h1, cfg.h2)
    summary = spectrum_summary(ham)
    dt = choose_dt(summary) if cfg.dt == "auto" else float(cfg.dt)
    psi0 = basis_state(SpinBasis(cfg.n), 0)
    overlap = float(np.abs(summary.ground_vector.amps[0]) ** 2)
    states = krylov_states(ham, psi0, EvolutionPlan(dt=dt, steps=max(cfg.d_list)))
    rows = []
    for d in cfg.d_list:
        mats = assemble(ham, states[:d], toeplitz=True)
        bound = bounds.kqd_energy_bound(
            bounds.KqdBoundInputs(summary.width, summary.gap, overlap, d))
        seeds = [0] if cfg.sigma == 0 else range(cfg.n_seeds)
        for trial in seeds:
            t0 = time.perf_counter()
            current = mats
            seed = ""
            if cfg.sigma > 0:
                seed = derive_seed(cfg.base_seed, d, trial)
                current = inject_noise(mats, cfg.sigma, seed, cfg.noise_target)
            threshold = (default_threshold(cfg.sigma)
                         if cfg.threshold == "auto" else cfg.threshold)
            sol = solve_gevp(current, threshold)
            abs_err = abs(sol.energy - summary.e0)
            rows.append({
                "kind": cfg.KIND, "n": cfg.n,
                "method": "kqd" if cfg.sigma == 0 else f"kqd-noisy-{cfg.noise_target}",
                "sigma": cfg.sigma, "target": cfg.noise_target if cfg.sigma else "",
                "seed": seed, "d": d, "dt": dt, "kept_dim": sol.kept_dim,
                "energy": sol.energy, "energy_ref": summary.e0, "bound": bound,
                "abs_error": abs_err, "rel_error": abs_err / abs(summary.e0),
                "time_s": time.perf_counter() - t0,
            })
    return rows


# ---------------------------------------------------------------------------
# skqd: shot-budget sweep for the sampled subspace on one chain


@dataclass(frozen=True)
class SkqdConfig:
    KIND = "skqd"
    n: int = 8
    h1: float = 0.1
    h2: float = 0.1
    d: int = 15
    dt: object = "auto"
    m_list: tuple = (10, 100, 1000)
    n_seeds: int = 20
    base_seed: int = 0
    d_max: int = 0  # 0 = no cap
    output: Optional[str] = None

    def validate(self):
        if self.n < 2 or self.d < 1:
            raise ConfigurationError("need n >= 2 and d >= 1")
        if any(m < 1 for m in self.m_list):
            raise ConfigurationError("shot counts must be positive")


SKQD_COLUMNS = ["kind", "n", "method", "M", "seed", "d", "dt", "D", "energy",
                "energy_ref", "abs_error", "rel_error", "time_s"]


def run_skqd(cfg: SkqdConfig, threads: int = 1):
    ham = build_tfim_open(cfg.n, cfg.h1, cfg.h2)
    summary = spectrum_summary(ham)
    dt = choose_dt(summary) if cfg.dt == "auto" else float(cfg.dt)
    psi0 = basis_state(SpinBasis(cfg.n), 0)
    states = krylov_states(ham, psi0, EvolutionPlan(dt=dt, steps=cfg.d))

    def one_trial(trial):
        rows = []
        seed = derive_seed(cfg.base_seed, trial)
        for m in cfg.m_list:
            t0 = time.perf_counter()
            samples = collect_samples(states, m, seed)
            basis_strings = (samples.support() if cfg.d_max == 0
                             else samples.top_by_count(cfg.d_max))
            energy, _ = solve_subspace(project_hamiltonian(ham, basis_strings),
                                       dense_limit=600)
            abs_err = abs(energy - summary.e0)
            rows.append({
                "kind": cfg.KIND, "n": cfg.n, "method": "skqd", "M": m,
                "seed": seed, "d": cfg.d, "dt": dt, "D": len(basis_strings),
                "energy": energy, "energy_ref": summary.e0,
                "abs_error": abs_err, "rel_error": abs_err / abs(summary.e0),
                "time_s": time.perf_counter() - t0,
            })
        return rows

    chunks = parallel_map(one_trial, range(cfg.n_seeds), threads)
    return [row for chunk in chunks for row in chunk]


# ---------------------------------------------------------------------------
# siam: two-stage impurity-model run with ED reference and correlations


@dataclass(frozen=True)
class SiamConfig:
    KIND = "siam"
    L: int = 7
    U: tuple = (1.0, 3.0, 7.0, 10.0)
    d: int = 25
    dt: float = 0.1
    m_list: tuple = (100, 1000, 10000, 100000)
    stage1_shots: int = 10000
    d_caps: tuple = (128, 256, 512, 1024, 2048, 0)  # 0 = full sampled basis
    compare_m: int = 1000
    base_seed: int = 0
    evolution: str = "auto"
    emit_correlations: bool = True
    output: Optional[str] = None

    def validate(self):
        if self.L < 7 or self.L % 2 == 0:
            raise ConfigurationError(
                "reference-state construction needs an odd L of at least 7")
        if self.dt <= 0 or self.d < 1:
            raise ConfigurationError("need positive dt and d")
        if self.evolution not in ("auto", "exact-eigen", "lanczos-expmv", "trotter2"):
            raise ConfigurationError(f"unknown evolution method {self.evolution!r}")
        if self.compare_m not in self.m_list:
            raise ConfigurationError("compare_m must be one of m_list")


SIAM_COLUMNS = ["kind", "L", "U", "basis", "method", "M", "D", "seed", "d",
                "dt", "energy", "energy_ref", "abs_error", "rel_error", "time_s"]
CORRELATION_COLUMNS = ["U", "j", "spin", "density", "spin_ref", "density_ref"]


def _siam_row(cfg, u, basis_name, method, m, dim, seed, e_ref, energy, elapsed):
    abs_err = abs(energy - e_ref)
    return {
        "kind": cfg.KIND, "L": cfg.L, "U": u, "basis": basis_name,
        "method": method, "M": m, "D": dim, "seed": seed, "d": cfg.d,
        "dt": cfg.dt, "energy": energy, "energy_ref": e_ref,
        "abs_error": abs_err, "rel_error": abs_err / abs(e_ref),
        "time_s": elapsed,
    }


def _sub_solve(h_proj_full, positions, dense_limit=2000):
    sub = h_proj_full[positions, :][:, positions]
    return solve_subspace(sub, dense_limit=dense_limit)


def run_siam(cfg: SiamConfig, threads: int = 1):
    """Momentum-basis stage, natural-orbital stage, uniform baseline, correlations.

    The first stage samples in the momentum basis only to estimate the
    one-body density matrix; the production sweep runs in the k-adjacent
    natural orbitals. Uniform baseline rows share the total shot budget and
    subspace dimensions of the compare_m sweep point.
    """

    def one_u(u):
        rows, corr = [], []
        h_pos = build_siam_position(cfg.L, float(u))
        sec = half_filling_sector(h_pos)
        rule = SectorRule.from_sector(sec)
        vals, vecs = sla.eigsh(sector_matrix(h_pos, sec), k=1, which="SA")
        e_ref = float(vals[0])
        gs_pos = StateVector(vecs[:, 0].astype(complex), sec)
        h_mom, rot1 = to_momentum_basis(h_pos)
        psi0 = siam_initial_state(sec)
        plan = EvolutionPlan(dt=cfg.dt, steps=cfg.d, method=cfg.evolution)
        seed = derive_seed(cfg.base_seed, int(round(10 * float(u))))

        # stage 1: momentum basis, sampled 1-RDM
        t0 = time.perf_counter()
        states1 = krylov_states(h_mom, psi0, plan)
        samples1, _ = postselect(collect_samples(states1, cfg.stage1_shots, seed), rule)
        basis1 = samples1.support()
        proj1 = project_hamiltonian(h_mom, basis1)
        e1, c1 = solve_subspace(proj1)
        rows.append(_siam_row(cfg, u, "momentum", "skqd", cfg.stage1_shots,
                              len(basis1), seed, e_ref, e1,
                              time.perf_counter() - t0))
        problem1 = SubspaceProblem(basis1, proj1, e1, c1, sector=sec)
        gamma = one_rdm(sec, problem1.state())
        h_nat, rot2 = to_k_adjacent_natural_orbitals(h_mom, gamma, fermi_level(sec))
        chain = (rot1, rot2)

        # stage 2: k-adjacent natural orbitals, nested shot sweep
        states2 = krylov_states(h_nat, siam_initial_state(sec), plan)
        top_m = max(cfg.m_list)
        union_samples, _ = postselect(collect_samples(states2, top_m, seed), rule)
        union_basis = union_samples.support()
        union_pos = {s: i for i, s in enumerate(union_basis)}
        proj_union = project_hamiltonian(h_nat, union_basis).tocsr()
        best_problem = None
        for m in sorted(cfg.m_list):
            samples, _ = postselect(collect_samples(states2, m, seed), rule)
            for cap in cfg.d_caps:
                t0 = time.perf_counter()
                basis_strings = (samples.support() if cap == 0
                                 else samples.top_by_count(cap))
                positions = np.array([union_pos[s] for s in basis_strings])
                energy, coeffs = _sub_solve(proj_union, positions)
                rows.append(_siam_row(cfg, u, "natural", "skqd", m,
                                      len(basis_strings), seed, e_ref, energy,
                                      time.perf_counter() - t0))
                if m == top_m and cap == 0:
                    best_problem = SubspaceProblem(
                        basis_strings, proj_union, energy, coeffs, sector=sec,
                        rotation=rot1.xi @ rot2.xi)

        # uniform baseline, budget-matched to the compare_m sweep point
        budget = cfg.d * cfg.compare_m
        uni = uniform_baseline(sec.n_bits, budget, seed, constraint=rule)
        uni_basis = uni.support()
        uni_pos = {s: i for i, s in enumerate(uni_basis)}
        proj_uni = project_hamiltonian(h_nat, uni_basis).tocsr()
        for cap in cfg.d_caps:
            t0 = time.perf_counter()
            basis_strings = uni_basis if cap == 0 else uni.top_by_count(cap)
            positions = np.array([uni_pos[s] for s in basis_strings])
            energy, _ = _sub_solve(proj_uni, positions)
            rows.append(_siam_row(cfg, u, "natural", "uniform", cfg.compare_m,
                                  len(basis_strings), seed, e_ref, energy,
                                  time.perf_counter() - t0))

        if cfg.emit_correlations and best_problem is not None:
            state = best_problem.state()
            for j in range(cfg.L):
                corr.append({
                    "U": u, "j": j,
                    "spin": staggered_spin_correlation(sec, state, j, chain),
                    "density": staggered_density_correlation(sec, state, j, chain),
                    "spin_ref": staggered_spin_correlation(sec, gs_pos, j),
                    "density_ref": staggered_density_correlation(sec, gs_pos, j),
                })
        return rows, corr

    results = parallel_map(one_u, cfg.U, threads)
    rows = [row for chunk, _ in results for row in chunk]
    corr = [row for _, chunk in results for row in chunk]
    return rows, corr


# ---------------------------------------------------------------------------
# verify-bounds and sparsity scans


@dataclass(frozen=True)
class VerifyBoundsConfig:
    KIND = "verify-bounds"
    grid: str = "small"
    base_seed: int = 2024
    output: Optional[str] = None

    def validate(self):
        if self.grid not in ("small", "full"):
            raise ConfigurationError("grid must be 'small' or 'full'")


def run_verify_bounds(cfg: VerifyBoundsConfig, threads: int = 1) -> dict:
    full = cfg.grid == "full"
    instances = 1000 if full else 150
    trials = 100000 if full else 20000
    tail_n = (8, 9, 10, 11, 12, 13, 14) if full else (8, 9, 10)
    max_degree = 50 if full else 25
    tasks = [
        lambda: bounds.check_state_closeness(instances, cfg.base_seed),
        lambda: bounds.check_sparsity_transfer(instances, cfg.base_seed),
        lambda: bounds.check_coverage_certificate(instances, cfg.base_seed),
        lambda: bounds.check_failure_probability(trials=trials, seed=cfg.base_seed),
        lambda: bounds.check_truncation_bound(),
        lambda: bounds.check_chebyshev_grid(max_degree=max_degree),
        lambda: bounds.check_tail_inequality(n_values=tail_n),
    ]
    results = parallel_map(lambda fn: fn(), tasks, threads)
    checks = [record.to_dict() for chunk in results for record in chunk]
    violations = sum(not c["passed"] for c in checks)
    return {"grid": cfg.grid, "total": len(checks), "violations": violations,
            "checks": checks}


@dataclass(frozen=True)
class SparsityConfig:
    KIND = "sparsity-e"
    n: tuple = (8, 9, 10, 11, 12, 13, 14)
    h: tuple = (0.1, 0.3, 0.5)
    output: Optional[str] = None

    def validate(self):
        if any(x <= 0 for x in self.h):
            raise ConfigurationError("fields must be positive")


SPARSITY_COLUMNS = ["kind", "n", "h", "k", "tail", "bound", "magnetization",
                    "closed_form", "deviation", "time_s"]


def run_sparsity(cfg: SparsityConfig, threads: int = 1):
    def one_point(point):
        n, h = point
        t0 = time.perf_counter()
        q = bounds.tfim_tail_quantities(n, h)
        elapsed = time.perf_counter() - t0
        rows = []
        for k in range((n + 1) // 2):
            rows.append({
                "kind": cfg.KIND, "n": n, "h": h, "k": k,
                "tail": q.tail(k), "bound": q.tail_bound(k),
                "magnetization": q.magnetization,
                "closed_form": q.closed_form if q.closed_form is not None else "",
                "deviation": (abs(q.magnetization - q.closed_form)
                              if q.closed_form is not None else ""),
                "time_s": elapsed,
            })
        return rows

    points = [(n, h) for n in cfg.n for h in cfg.h]
    chunks = parallel_map(one_point, points, threads)
    return [row for chunk in chunks for row in chunk]


CONFIG_TYPES = {
    BenchTfimConfig.KIND: BenchTfimConfig,
    KqdConfig.KIND: KqdConfig,
    SkqdConfig.KIND: SkqdConfig,
    SiamConfig.KIND: SiamConfig,
    VerifyBoundsConfig.KIND: VerifyBoundsConfig,
    SparsityConfig.KIND: SparsityConfig,
}

COLUMNS = {
    "bench-tfim": BENCH_COLUMNS,
    "kqd": KQD_COLUMNS,
    "skqd": SKQD_COLUMNS,
    "siam": SIAM_COLUMNS,
    "sparsity-e": SPARSITY_COLUMNS,
}


def load_config(data: dict):
    if "kind" not in data:
        raise ConfigurationError("config is missing the 'kind' key")
    kind = data["kind"]
    if kind not in CONFIG_TYPES:
        raise ConfigurationError(
            f"unknown experiment kind {kind!r}; expected one of {sorted(CONFIG_TYPES)}")
    body = {k: v for k, v in data.items() if k != "kind"}
    return _config_from_dict(CONFIG_TYPES[kind], body)
