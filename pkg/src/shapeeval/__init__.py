"""Evaluation toolkit for classification-based shape retrieval benchmarks."""

from shapeeval.errors import EvaluationError, InputError
from shapeeval.dataset import (
    Classification,
    ClassStats,
    Diagnostic,
    class_stats,
    load_classification,
    validate_classification,
)
from shapeeval.runs import (
    DissimilarityMatrix,
    GainVector,
    RankedList,
    Run,
    RunMeta,
    gain_vector,
    load_matrix,
    load_run,
    ranked_lists_from_matrix,
)
from shapeeval.metrics import (
    DcgCurve,
    FMeasureParams,
    PrCurve,
    TierScores,
    average_precision,
    dcg_curve,
    dcg_summary,
    e_measure,
    f_measure,
    pr_curve,
    precision_recall_at,
    r_precision,
    tier_scores,
)
from shapeeval.analysis import (
    ComparisonReport,
    ReliabilityEstimate,
    RunSummary,
    compare_runs,
    evaluate_run,
    reliability_swap_rate,
)

__version__ = "0.1.0"

__all__ = [
    "Classification",
    "ClassStats",
    "ComparisonReport",
    "DcgCurve",
    "Diagnostic",
    "DissimilarityMatrix",
    "EvaluationError",
    "FMeasureParams",
    "GainVector",
    "InputError",
    "PrCurve",
    "RankedList",
    "ReliabilityEstimate",
    "Run",
    "RunMeta",
    "RunSummary",
    "TierScores",
    "average_precision",
    "class_stats",
    "compare_runs",
    "dcg_curve",
    "dcg_summary",
    "e_measure",
    "evaluate_run",
    "f_measure",
    "gain_vector",
    "load_classification",
    "load_matrix",
    "load_run",
    "pr_curve",
    "precision_recall_at",
    "r_precision",
    "ranked_lists_from_matrix",
    "reliability_swap_rate",
    "tier_scores",
    "validate_classification",
]
