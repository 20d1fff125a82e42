"""Metaplectic operators, their integral representation and Hardy-type uncertainty checks."""
from .errors import (
    AliasRisk,
    ConditioningGuard,
    ConditionsViolated,
    DegenerateGeometry,
    DegenerateTime,
    DimensionCollapse,
    DimensionMismatch,
    FreeBlock,
    GridMismatch,
    IllConditionedSplit,
    InsufficientSupport,
    MPKError,
    NonIsotropic,
    NonSPD,
    NotSymplectic,
)
from .flow import (
    QuadraticHamiltonian,
    anisotropic_oscillator_2d,
    dynamical_hardy_check,
    flow,
    hamiltonian_from_json,
    harmonic_oscillator,
    knutsen_comparison,
    propagate,
    write_trajectory,
)
from .grid import GridFunction, read_grid, write_grid, write_grid_csv
from .hardy import (
    DecayCertificate,
    HardyVerdict,
    Status,
    check_conditions,
    classify,
    critical_partner,
    decay_roundtrip,
    extremal_function,
    extremal_roundtrip,
    fit_gaussian_decay,
    hardy_eigenvalues,
    sharpness_witness,
)
from .metaplectic import (
    apply_metaplectic,
    chirp_multiply,
    fourier_transform,
    inverse_fourier_transform,
    multiplier,
    partial_fourier,
    rescale,
)
from .symplectic import (
    SymplecticMatrix,
    chirp_matrix,
    decompose_input,
    decompose_output,
    dilation,
    frft_matrix,
    make_generator,
    multiplier_matrix,
    mu_S,
    pseudo_inverse,
    read_matrix,
    sigma_product,
    simplex_volume,
    standard_J,
    subspace_bases,
    tensor,
    verify_block_relations,
    write_matrix,
)
from .wigner import check_covariance, wigner, wigner_at

__version__ = "0.1.0"
