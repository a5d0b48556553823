"""Desk-scale laboratory for sparse Poisson inverse problems.

Constructs flux-preserving sensing matrices, orthonormal sparsifying bases,
and admissible nonnegative unit-mass signals; simulates photon-limited
observations; reconstructs with l1-penalized likelihood, exhaustive
quantized-l0 search, or direct downsampling; and evaluates minimax risk
rate formulas against empirical mean-squared error.
"""

from .bases import Basis, BasisKind, localization_brute, localization_closed, make_basis
from .bounds import (
    BoundConfig,
    basis_rate_bounds,
    downsampling_upper,
    low_intensity_floor,
    minimax_lower,
    minimax_upper,
)
from .errors import BudgetExceededError, SolverDivergenceError
from .estimators import (
    L0Result,
    QuantizationGrid,
    SolverOptions,
    SpiralResult,
    design_operator,
    downsampling_estimate,
    l0_exhaustive,
    poisson_l1_gradient,
    poisson_l1_objective,
    project_simplex,
    quantization_grid,
    quantize,
    sparsity_penalty,
    spiral_estimate,
)
from .harness import (
    ExperimentConfig,
    SweepRecord,
    TrialError,
    TrialResult,
    compare_ds_cs,
    emit,
    parse_csv,
    run_trial,
    sweep,
)
from .poisson import kl, nll, nll_gradient, sample
from .sensing import (
    PhysicalReport,
    RipEstimate,
    SensingMatrix,
    bernoulli_sensing,
    downsampling_matrix,
    estimate_rip,
    validate_physical,
)
from .signals import (
    MembershipReport,
    PackingSpec,
    Signal,
    delta_like_dwt_signal,
    packing_signal,
    packing_spec,
    split_packing_signal,
    triangular_signal,
    validate_class_membership,
)

__version__ = "0.1.0"
