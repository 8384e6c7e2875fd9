"""Set-valued Bayes classification with partial reject options.

The package computes reward-optimal set-valued classifiers from posterior
probabilities over categories, fits conjugate Gaussian category models to
produce those posteriors, and tunes the reward costs by leave-one-out
cross-validation.  Categories are numbered 1..N throughout, optionally
grouped into contiguous blocks.
"""

from .classifiers import (
    BRUTE_FORCE_LIMIT,
    BruteForceResult,
    CompositeResult,
    MMPResult,
    brute_force_optimal,
    composite_classifier,
    conformal_classifier,
    indifference_zone_classifier,
    map_classifier,
    mmp_convex,
    mmp_general,
    optimal_set,
    proportion_classifier,
    rho_classifier,
    ripley_classifier,
)
from .core import (
    CategorySpace,
    ClassifiedSet,
    PosteriorVector,
    posterior_from_likelihoods,
)
from .dataset import LoadedDataset, load_dataset, write_dataset
from .errors import (
    AllZeroMass,
    BlockOutOfRange,
    CategoryTooSmall,
    DimensionMismatch,
    EmptyCategory,
    InvalidDistribution,
    MissingRealPrior,
    NoFeasibleB,
    NotConvex,
    OutOfRange,
    SchemaError,
    SetBayesError,
    SingularScatter,
    SpecSpaceMismatch,
    TooManyCategories,
    UnsupportedReward,
)
from .gaussian import (
    GaussianCategoryModel,
    NormalInverseWishart,
    TrainingData,
    calibrate_conformal_cost,
    calibration_curve,
    conformal_coverage,
    conjugate_update,
    default_hyperprior,
    fit,
    log_posterior_matrix,
    model_from_json,
    model_to_json,
    posterior_matrix,
    posterior_over_categories,
    predictive_density,
    sample_mixture,
)
from .rewards import (
    BinaryReward,
    CompositeProportion,
    IndifferenceZone,
    InvariantPenalty,
    MapZeroOne,
    PenaltySequence,
    ProportionBased,
    RipleyReject,
    binary_reward,
    reward,
    reward_spec_from_json,
    reward_spec_to_json,
    value_function,
)
from .tuning import (
    CVConfig,
    CVReport,
    HeldOutPosteriors,
    MinimizeSelection,
    ThresholdSelection,
    WeightScheme,
    evaluate_curves,
    grid_scan_costs,
    loocv_posteriors,
    loocv_reward_rate,
    make_weights,
    select_b_minimize,
    select_b_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "AllZeroMass",
    "BRUTE_FORCE_LIMIT",
    "BinaryReward",
    "BlockOutOfRange",
    "BruteForceResult",
    "CVConfig",
    "CVReport",
    "CategorySpace",
    "CategoryTooSmall",
    "ClassifiedSet",
    "CompositeProportion",
    "CompositeResult",
    "DimensionMismatch",
    "EmptyCategory",
    "GaussianCategoryModel",
    "HeldOutPosteriors",
    "IndifferenceZone",
    "InvalidDistribution",
    "InvariantPenalty",
    "LoadedDataset",
    "MMPResult",
    "MapZeroOne",
    "MinimizeSelection",
    "MissingRealPrior",
    "NoFeasibleB",
    "NormalInverseWishart",
    "NotConvex",
    "OutOfRange",
    "PenaltySequence",
    "PosteriorVector",
    "ProportionBased",
    "RipleyReject",
    "SchemaError",
    "SetBayesError",
    "SingularScatter",
    "SpecSpaceMismatch",
    "ThresholdSelection",
    "TooManyCategories",
    "TrainingData",
    "UnsupportedReward",
    "WeightScheme",
    "binary_reward",
    "brute_force_optimal",
    "calibrate_conformal_cost",
    "calibration_curve",
    "composite_classifier",
    "conformal_classifier",
    "conformal_coverage",
    "conjugate_update",
    "default_hyperprior",
    "evaluate_curves",
    "fit",
    "grid_scan_costs",
    "indifference_zone_classifier",
    "load_dataset",
    "log_posterior_matrix",
    "loocv_posteriors",
    "loocv_reward_rate",
    "make_weights",
    "map_classifier",
    "mmp_convex",
    "mmp_general",
    "model_from_json",
    "model_to_json",
    "optimal_set",
    "posterior_from_likelihoods",
    "posterior_matrix",
    "posterior_over_categories",
    "predictive_density",
    "proportion_classifier",
    "reward",
    "reward_spec_from_json",
    "reward_spec_to_json",
    "rho_classifier",
    "ripley_classifier",
    "sample_mixture",
    "select_b_minimize",
    "select_b_threshold",
    "value_function",
    "write_dataset",
]
