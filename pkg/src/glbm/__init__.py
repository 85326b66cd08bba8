"""glbm: a Monte Carlo laboratory for invariant Brownian motions on GL(N, C).

Simulates the multiplicative elliptic-driver flow, analyzes the eigenvalue
and singular-value statistics of its endpoints, computes the limiting
support domains of the eigenvalue distributions, and ships a CLI that
reproduces the reference figures and runs the quantitative verification
suite.
"""

from .errors import (
    GlbmError,
    InvalidParameterError,
    InvalidUsageError,
    NumericalOverflowError,
    SolverFailureError,
    UndefinedTransformError,
    WindowTooSmallError,
)
from .params import EllipticParams, SimConfig, TimeGrid, params_from_rho_zeta, reduce_time_param
from .sampling import RngStream, haar_unitary, sample_elliptic_increment, sample_gue, sample_ginibre
from .glflow import (
    CoupledIncrements,
    InitialCondition,
    PathState,
    RealizedInitial,
    affine_deviation,
    atomic_normal_init,
    explicit_init,
    identity_init,
    inverse_defect,
    make_initial,
    non_normal_block_init,
    refine_gap,
    refine_gap_sq_exact,
    roots_of_unity_init,
    sample_coupled,
    second_moment_dyadic,
    second_moment_exact,
    simulate_endpoint,
    simulate_inverse,
    step,
    ts_norm,
)
from .spectral import (
    SingularSpectrum,
    Spectrum,
    cauchy_transform,
    eigenvalues,
    log_potential,
    log_tail_mass,
    singular_values,
    sv_counting,
    wegner_transform,
)
from .brownmap import (
    CircleMeasure,
    Cloud,
    InitialSpectralData,
    circle_measure_from_init,
    j_transform,
    psi_map,
    spectral_data_from_init,
    t_general,
    t_unitary,
)
from .regions import (
    Region,
    containment_fraction,
    pushforward_region,
    sigma_region,
    support_region,
    write_boundary_csv,
    write_membership_grid,
)
from .ncpoly import (
    NCMonomial,
    NCPoly,
    SDCheckResult,
    TensorPoly,
    cyclic_derivative,
    eval_poly,
    eval_tensor_tstrace,
    nc_derivative,
    sd_check,
    x,
)

__version__ = "0.1.0"
