"""modval: per-sample modality contribution valuation and targeted re-sampling.

The core pipeline: ingest per-coalition prediction records, attribute each
sample's prediction benefit across modalities, flag low-contributing
modalities, and emit re-sample schedules or modulation coefficients that
recover them. A desk-scale simulator demonstrates the loop end to end on
synthetic data.
"""

from . import errors
from .maps import MODALITY_PROBABILITY_MAPS, SAMPLE_FREQUENCY_MAPS, MonotoneMap
from .records import (
    ContributionVector,
    ModalityIndex,
    SubsetPredictionRecord,
    build_modalities,
    full_mask,
    indices_from_mask,
    mask_from_indices,
    mask_size,
)
from .modulation import (
    ContributionGap,
    GBlendingWeights,
    GreedyWindow,
    OgmGeCoefficients,
    g_blending_weights,
    greedy_window,
    ogm_ge_coeff,
)
from .scheduling import (
    ModalityLevelPlanner,
    ModalityResamplePlan,
    SampleLevelPlanner,
    SampleResamplePlan,
    apply_masking,
    estimate_average_contributions,
    modality_level_plan,
    sample_level_plan,
)
from .theory import (
    BenefitTable,
    check_removal_gap_bound,
    permutation_shapley,
    simulate_enhancement_gain,
    sweep_all_tables,
)
from .valuation import (
    ModalityValuator,
    benefit,
    check_nonneg_marginals,
    exact_shapley,
    marginal_contribution,
    monte_carlo_shapley,
    record_oracle,
    shapley_from_benefits,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "MonotoneMap",
    "SAMPLE_FREQUENCY_MAPS",
    "MODALITY_PROBABILITY_MAPS",
    "ContributionVector",
    "ModalityIndex",
    "SubsetPredictionRecord",
    "build_modalities",
    "full_mask",
    "indices_from_mask",
    "mask_from_indices",
    "mask_size",
    "ContributionGap",
    "GBlendingWeights",
    "GreedyWindow",
    "OgmGeCoefficients",
    "g_blending_weights",
    "greedy_window",
    "ogm_ge_coeff",
    "ModalityLevelPlanner",
    "ModalityResamplePlan",
    "SampleLevelPlanner",
    "SampleResamplePlan",
    "apply_masking",
    "estimate_average_contributions",
    "modality_level_plan",
    "sample_level_plan",
    "BenefitTable",
    "check_removal_gap_bound",
    "permutation_shapley",
    "simulate_enhancement_gain",
    "sweep_all_tables",
    "ModalityValuator",
    "benefit",
    "check_nonneg_marginals",
    "exact_shapley",
    "marginal_contribution",
    "monte_carlo_shapley",
    "record_oracle",
    "shapley_from_benefits",
    "__version__",
]
