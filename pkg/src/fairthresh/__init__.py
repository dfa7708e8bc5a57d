"""Model-agnostic post-processing of classifier scores: find per-subgroup
decision thresholds that shrink utility gaps between subgroups without
lowering any subgroup's utility or the pooled utility."""

from .discrimination import DiscriminationScore, DominanceResult, discrimination_score, find_dominating
from .errors import (
    ConfigError,
    DatasetError,
    EmptyInputError,
    FairthreshError,
    PartitionError,
    UndefinedUtilityError,
)
from .metrics import (
    ConfusionCounts,
    Dataset,
    ScoreIndex,
    ScoredInstance,
    UtilityKind,
    classify,
    confusion_counts,
    index_subgroups,
    subgroup_utility,
    utility,
)
from .optimizer import (
    Aggregate,
    GridSpec,
    Mode,
    OptimizationReport,
    OptimizerConfig,
    ThresholdAssignment,
    apply_thresholds,
    baseline_report,
    candidate_thresholds,
    optimize,
    optimize_subgroup,
    validate,
)
from .partition import (
    ClusterModel,
    ElbowResult,
    SubgroupPartition,
    assign_clusters,
    cluster_partition,
    elbow_select_k,
    kmeans_fit,
    partition_by_attribute,
    standardize,
)
from .reporting import read_report, render_table, serialize_report, write_report

__version__ = "0.1.0"
