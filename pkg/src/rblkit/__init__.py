"""rblkit: rigid-body localization from noisy, incomplete inter-body ranges.

A primary body carrying landmark sensors estimates the translation and
rotation of a target body from cross-body range measurements alone, without
knowing the target's shape.  The package also ships the Monte-Carlo harness
and CLI used to benchmark the estimators.
"""

from .bodies import (
    Conformation,
    EulerAngles,
    Pose,
    RotationMatrix,
    SensorMatrix,
    apply_pose,
    euler_from_rotation,
    geometric_center,
    recenter,
    rotation_from_euler,
    schonberg_dcm,
    stack_scenario,
)
from .completion import (
    CompletionOptions,
    assemble_full_edm,
    complete_cross_block,
    hollow,
    nystrom_d2,
    rank_r_complete,
)
from .embedding import (
    EmbeddingEstimate,
    align_target,
    build_stacked_estimate,
    classical_mds,
    procrustes_align,
)
from .errors import (
    AmbiguousAlignmentError,
    ConfigError,
    DegenerateConfigurationError,
    DegenerateEmbeddingError,
    DomainMismatchError,
    InsufficientLinksError,
    InvalidArgumentError,
    RankDeficiencyError,
    RblError,
    UnderDeterminedError,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    ResultTable,
    Scenario,
    TrialResult,
    paper_table1,
    pose_vector,
    rmse_pose,
    rmse_translation,
    run_sweep,
    run_trial,
    table1_conformations,
)
from .measurement import (
    ConnectivityMask,
    CrossDistanceMatrix,
    ErasureMatrix,
    FullEdm,
    NoiseModel,
    add_range_noise,
    apply_mask,
    completeness_fraction,
    connectivity_mask,
    cross_edm,
    erasure_matrix,
    full_edm,
    intra_edm,
    square_measurements,
)
from .pipeline import PipelineProducts, build_embedding
from .rotation import (
    RotationEstimate,
    double_center_cross,
    estimate_rotation_ego,
    estimate_rotation_naive,
    estimate_rotation_opp,
    nearest_rotation,
    project_left,
)
from .translation import (
    RobustCoefficients,
    SolverOptions,
    TranslationEstimate,
    corrected_distance_estimator,
    default_epsilon,
    estimate_translation_mds,
    estimate_translation_mds_genie,
    estimate_translation_robust,
    estimate_translation_robust_genie,
    robust_coefficients,
)

__version__ = "0.1.0"
