"""Sample-based Krylov quantum diagonalization, simulated classically.

Spin-chain and impurity-model Hamiltonians, time-evolved Krylov states,
Born sampling, projected-subspace eigensolvers, and numerical verifiers for
the analytic error bounds governing the method.
"""

from .bounds import (
    CheckRecord,
    FailureBound,
    KqdBoundInputs,
    SampleBoundReport,
    ShiftedSparsity,
    TailQuantities,
    chebyshev_filter,
    chebyshev_fourier_coefficients,
    coverage_probability,
    kqd_energy_bound,
    sample_complexity_report,
    sampling_failure_bound,
    shifted_sparsity,
    state_distance_bound,
    subspace_energy_bound,
    tfim_tail_quantities,
)
from .errors import (
    CapacityError,
    ConfigurationError,
    ConvergenceError,
    DegenerateSpectrumError,
    EmptySubspaceError,
    InvalidBasisError,
    InvalidParameterError,
    InvalidSectorError,
    InvalidSizeError,
    NormalizationError,
    ShapeError,
    SkqdError,
)
from .evolve import (
    EvolutionPlan,
    born_sample,
    choose_dt,
    fermi_level,
    krylov_states,
    lanczos_expmv,
    siam_initial_state,
    split_one_two,
)
from .fermion import (
    BasisRotation,
    DeterminantSector,
    FermionHamiltonian,
    OneRdm,
    RankOneInteraction,
    accumulate_rotations,
    build_siam_position,
    half_filling_sector,
    one_rdm,
    sector,
    sector_apply,
    sector_matrix,
    staggered_density_correlation,
    staggered_spin_correlation,
    to_k_adjacent_natural_orbitals,
    to_momentum_basis,
)
from .krylov import (
    GevpSolution,
    KrylovMatrices,
    NoiseConfig,
    assemble,
    inject_noise,
    kqd_estimate,
    solve_gevp,
)
from .paulis import (
    PauliString,
    PauliSum,
    SpectrumSummary,
    apply,
    build_tfim_open,
    build_tfim_periodic,
    dense_matrix,
    spectrum_summary,
)
from .sqd import (
    SampleSet,
    SectorRule,
    SparsityProfile,
    SubspaceProblem,
    best_of_seeds,
    collect_samples,
    corrupt_samples,
    coverage_check,
    postselect,
    project_hamiltonian,
    skqd_estimate,
    solve_subspace,
    sparsity_profile,
    uniform_baseline,
)
from .states import SpinBasis, StateVector, basis_state, inner

__version__ = "0.1.0"
