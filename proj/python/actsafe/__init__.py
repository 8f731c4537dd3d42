"""Medical temporal constraints: extraction, behavior prediction and violation checks."""

from ._core import (
    ActsafeError,
    Vocabulary,
    basis_vectorize,
    canonicalize,
    check,
    describe,
    extract,
    ledger_metrics,
    predict,
    regularity_scores,
    run_pipeline,
    schedule_similarity,
    schedule_vector,
    similarity_heatmap,
    simulate,
    sparsity,
    train,
)

__all__ = [
    "ActsafeError",
    "Vocabulary",
    "basis_vectorize",
    "canonicalize",
    "check",
    "describe",
    "extract",
    "ledger_metrics",
    "predict",
    "regularity_scores",
    "run_pipeline",
    "schedule_similarity",
    "schedule_vector",
    "similarity_heatmap",
    "simulate",
    "sparsity",
    "train",
]
