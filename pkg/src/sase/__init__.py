"""Deterministic per-class subset selection over embedding dumps.

Selection maximizes the expected-augmentation-similarity objective
F(S) = sum_{i in V_k \\ S} sum_{j in S} s_ij per latent class under a
proportional cardinality budget, via lazy greedy plus deterministic
double-greedy refinement.
"""

from .diagnostics import (
    alignment_error,
    alignment_loss,
    center_error,
    class_center_divergence,
    diagnose_document,
    random_subset_baseline,
)
from .io import (
    assignments_checksum,
    canonical_json,
    fnv1a64,
    payload_checksum,
    read_embeddings,
    read_labels,
    read_report,
    report_document,
    write_embeddings,
    write_labels,
    write_report,
)
from .partition import kmeans_partition, partition_from_labels
from .similarity import expected_augmentation_distance, expected_augmentation_similarity
from .submodular import (
    allocate_budgets,
    double_greedy_refine,
    double_greedy_steps,
    greedy_select,
    marginal_gain,
    objective,
    select_all,
)
from .types import (
    ClassDiagnostics,
    ClassResult,
    EmbeddingSet,
    FormatError,
    LatentPartition,
    RandomBaseline,
    SelectionConfig,
    SelectionResult,
    SimilarityMatrix,
    ValidationError,
    ValidationReport,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "EmbeddingSet",
    "LatentPartition",
    "SimilarityMatrix",
    "SelectionConfig",
    "SelectionResult",
    "ClassResult",
    "ClassDiagnostics",
    "RandomBaseline",
    "ValidationReport",
    "ValidationError",
    "FormatError",
    "validate",
    "expected_augmentation_distance",
    "expected_augmentation_similarity",
    "partition_from_labels",
    "kmeans_partition",
    "objective",
    "marginal_gain",
    "greedy_select",
    "double_greedy_steps",
    "double_greedy_refine",
    "allocate_budgets",
    "select_all",
    "center_error",
    "alignment_error",
    "alignment_loss",
    "class_center_divergence",
    "random_subset_baseline",
    "diagnose_document",
    "read_embeddings",
    "write_embeddings",
    "read_labels",
    "write_labels",
    "read_report",
    "write_report",
    "report_document",
    "canonical_json",
    "fnv1a64",
    "payload_checksum",
    "assignments_checksum",
]
