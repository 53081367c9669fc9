"""Model-free causal feature selection for contextual multi-armed bandits."""

from .bandits import CohortTS, ConstantPolicy, LinUCB, ReplayResult, quadratic_expand, replay_evaluate
from .binning import BinAssignment, BinConfig, CountsTable, bin_categorical, bin_continuous, build_counts
from .data import (
    BanditLog,
    DataValidationError,
    FeatureDescriptor,
    FeatureKind,
    LoggedEvent,
    Schema,
    ingest_csv,
    summarize,
    write_csv,
)
from .scoring import (
    CombineConfig,
    FeatureReport,
    combined_score,
    generalized_divergence,
    hdd_score,
    hie_score,
    min_max_normalize,
    pairwise_kl,
    score_all_features,
    winning_arm,
)
from .synth import GeneratorConfig, GroundTruth, generate, true_best_arm

__version__ = "0.1.0"
