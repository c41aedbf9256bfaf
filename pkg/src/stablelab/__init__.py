"""stablelab: a numerical laboratory for symmetric stable nonlocal operators
with atomic spectral measures — closed-form boundary kernels, weighted Sobolev
norms, Dirichlet solvers with the exterior-zero condition, and killed-path
Monte Carlo, wired into checkable verification campaigns."""

__version__ = "0.1.0"

from .geometry import (
    Disk,
    DyadicPartition,
    GridFunction,
    HalfLine,
    Interval,
    Square,
    build_partition,
    convexity_gap_check,
    regularized_distance,
    tail_integral_check,
)
from .kernels import (
    K_alpha_beta,
    KernelSign,
    N_alpha_beta,
    ball_profile_constant,
    fl_scale,
    kernel_sign,
    pv_kernel_oracle,
    symbol_constant,
)
from .levy import (
    LevyFamily,
    SpectralMeasure,
    axis_measure,
    check_envelope,
    fractional_laplacian_measure,
    measure_from_json,
    measure_to_json,
    nondegeneracy_lambda,
    symmetrize,
    uniform_measure,
    unit_pair_measure,
)
from .norms import (
    OutsideWindowError,
    WeightedNormSpec,
    admissible_theta_window,
    dyadic_norm,
    estimate_ratio,
    parabolic_estimate_ratio,
    weighted_Lp,
    weighted_sobolev_int,
)
from .operators import (
    ConvergenceError,
    QuadratureControls,
    StableOperator,
    apply,
    assemble_matrix_1d,
    assemble_matrix_2d_axes,
    indicator_decay_check,
)
from .solve import (
    EllipticProblem,
    ParabolicProblem,
    SolveError,
    barrier_check,
    boundary_exponent_fit,
    bump,
    hardy_c_window,
    hardy_check,
    solve_elliptic,
    solve_parabolic,
)
from .stable_mc import (
    PathConfig,
    UnsupportedMeasureError,
    elliptic_representation,
    empirical_cf_check,
    killed_semigroup,
    sample_increment,
)
