"""Optimal-k difference sequences for residual variance estimation."""

from .asymptotics import (
    AsymptoticReport,
    Sinusoid,
    Tabulated,
    c_coefficient,
    figure2_curves,
    j_functional,
    theorem3_report,
)
from .estimator import (
    DifferenceVarianceEstimator,
    ErrorModel,
    ExactMoments,
    KernelSummary,
    RegressionSample,
    estimate_variance,
    exact_moments,
    exact_mse,
    kernel_summary,
)
from .exceptions import (
    BoundsError,
    CapacityError,
    ConvergenceError,
    InsufficientDataError,
    InvalidGramError,
    OptimalKError,
    SelectionError,
)
from .montecarlo import (
    SimulationConfig,
    SimulationSummary,
    best_candidate_heatmap,
    preset,
    rmse_vs_n_curves,
    run_cell,
)
from .seqgen import (
    BiasMomentMatrix,
    DifferenceSequence,
    GramCoefficients,
    Provenance,
    delta_k,
    delta_of,
    generate,
    gram_from_theorem2,
    ordinary_sequence,
    power_sums,
    rice_sequence,
    rule_of_thumb,
    sequence_from_gram,
)

__version__ = "0.1.0"
