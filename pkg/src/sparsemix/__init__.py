"""Detection and feature selection in sparse two-component Gaussian mixtures.

A library plus CLI harness: detection statistics for known, diagonal, and
unknown covariance settings, Monte Carlo null calibration, support estimators,
and a seeded simulation engine for power-curve experiments.
"""

__version__ = "0.1.0"

from .calibration import (
    CalEntry,
    CalibrationTable,
    TestDecision,
    bonferroni_level,
    calibrate,
    decide,
)
from .core import (
    Dataset,
    MixtureParams,
    SnrReport,
    StatValue,
    sample_moments,
    snr_report,
    standardize,
)
from .datagen import (
    Scenario,
    paper_delta_mu,
    psi1,
    psi2,
    rank_one_deflated_sigma,
    sample_mixture,
)
from .errors import (
    DegenerateProjectionError,
    EnumerationCapError,
    InvalidInputError,
    MissingCalibrationError,
    SingularCovarianceError,
    SparsemixError,
)
from .harness import (
    ExperimentConfig,
    PowerTable,
    SelectionTable,
    emit_csv,
    emit_svg,
    preset_config,
    run_power_curve,
    run_selection_curve,
)
from .moments import MomentKind, coord_stats, moment_ratio, sparse_moment_stat
from .selection import (
    SupportEstimate,
    select_asym_moment,
    select_canonical,
    select_coord_bonferroni,
    select_spectral,
    select_sym_moment,
    selection_error,
)
from .sparse_search import (
    SearchConfig,
    enumerate_supports,
    maximize_generalized,
    maximize_quadratic,
    maximize_smooth,
)
from .spectral import (
    canonical_variance_stats,
    canonical_variance_threshold,
    diag_ratio_stat,
    mdp_stat,
    mdp_value,
    soft_threshold_matrix,
    sparse_eig_null_bound,
    sparse_eig_stat,
    sparse_eig_stat_plain,
    top_eig_stat,
    top_eig_threshold,
)
