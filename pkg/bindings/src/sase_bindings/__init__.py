"""In-memory pipeline entry points for hosts that keep embeddings in arrays.

Thin wrappers over the engine: arrays go in, report-shaped mappings come out.
For identical data, config, and seed the results are bit-identical to the
command line's JSON. Only the pipeline surface is exposed (select, partition,
diagnose, save/load); engine types stay behind it. Arrays already laid out as
contiguous float32 are handed to the engine without copying.

Heavy work happens inside numpy kernels, which drop the interpreter lock, and
the engine threads per-class work on its own. One call at a time per process
is the supported usage; the wrappers keep no state between calls.
"""

from __future__ import annotations

import numpy as np

import sase
from sase import (
    EmbeddingSet,
    FormatError,
    SelectionConfig,
    ValidationError,
    diagnose_document,
    kmeans_partition,
    partition_from_labels,
    read_embeddings,
    report_document,
    select_all,
    write_embeddings,
)
from sase.partition import DEFAULT_KMEANS_ITERS, DEFAULT_KMEANS_TOL

__all__ = [
    "select",
    "partition",
    "diagnose",
    "save_embeddings",
    "load_embeddings",
    "__version__",
]

# pinned to the engine: the wrapper has no independent behavior to version
__version__ = sase.__version__


def select(
    embeddings,
    labels=None,
    kmeans: int | None = None,
    *,
    budget_fraction: float | None = None,
    budget_total: int | None = None,
    tau: float = 0.0,
    refine: bool = True,
    normalize: bool = True,
    seed: int = 0,
    threads: int | None = None,
    baseline_count: int = 20,
) -> dict:
    """Run the full selection pipeline on an in-memory array.

    embeddings is (n, d) or (n, m, d), float32 or convertible; 2-D input
    means one view per example. Exactly one of labels (an integer per
    example) and kmeans (a cluster count) names the partition source, and
    exactly one of budget_fraction / budget_total sets the budget. Returns
    the report as a plain mapping with the same structure and values as the
    select command's JSON file.
    """
    if labels is None and kmeans is None:
        raise ValidationError("partition source required: pass labels or kmeans")
    if labels is not None and kmeans is not None:
        raise ValidationError("pass only one of labels / kmeans")
    dataset = EmbeddingSet.from_array(embeddings)
    config = SelectionConfig(
        budget_fraction=budget_fraction,
        budget_total=budget_total,
        tau=tau,
        refine=refine,
        normalize=normalize,
        seed=seed,
        kmeans_K=kmeans,
        baseline_count=baseline_count,
        threads=threads,
    )
    if labels is not None:
        classes = partition_from_labels(labels, expected_n=dataset.n)
        source = "labels"
    else:
        base = dataset.normalize() if config.normalize else dataset
        classes = kmeans_partition(base, kmeans, seed=config.seed)
        source = "kmeans"
    return report_document(select_all(dataset, classes, config, partition_source=source))


def partition(
    embeddings,
    kmeans: int,
    *,
    seed: int = 0,
    iters: int = DEFAULT_KMEANS_ITERS,
    tol: float = DEFAULT_KMEANS_TOL,
    normalize: bool = True,
) -> np.ndarray:
    """Cluster an array into kmeans latent classes; one class id per example."""
    dataset = EmbeddingSet.from_array(embeddings)
    base = dataset.normalize() if normalize else dataset
    result = kmeans_partition(base, kmeans, seed=seed, iters=iters, tol=tol)
    return np.array(result.assignments)


def diagnose(
    embeddings,
    report: dict,
    labels=None,
    *,
    baseline_count: int | None = None,
) -> dict:
    """Recompute a report's diagnostics from the original array.

    report is the mapping select returned (or the parsed JSON the select
    command wrote). Label-sourced reports need the same labels again; the
    embeddings and partition are checksum-verified against the report.
    """
    if not isinstance(report, dict) or report.get("schema_version") != 1:
        raise FormatError("unsupported report schema")
    dataset = EmbeddingSet.from_array(embeddings)
    return diagnose_document(dataset, report, labels=labels, baseline_count=baseline_count)


def save_embeddings(array, path) -> None:
    """Write an array to a SASE file; 2-D input is stored as single-view."""
    write_embeddings(EmbeddingSet.from_array(array), path)


def load_embeddings(path) -> np.ndarray:
    """Read a SASE file back as float32.

    Single-view data comes back 2-D (n, d), multi-view as (n, m, d). The
    array is read-only; copy before mutating.
    """
    dataset = read_embeddings(path)
    if dataset.m == 1:
        return dataset.values.reshape(dataset.n, dataset.d)
    return dataset.values
