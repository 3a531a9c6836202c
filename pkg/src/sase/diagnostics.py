"""Subset-quality diagnostics: center preservation, alignment coverage and loss,
class-center divergence, and seeded random baselines.

All quantities are unnormalized summations over the supplied embeddings; the
theory-side constants multiplying them are unobservable and intentionally
left out, so only relative comparisons (selected vs random) are meaningful.
"""

from __future__ import annotations

import logging

import numpy as np

from .io import assignments_checksum, payload_checksum
from .partition import kmeans_partition, partition_from_labels
from .similarity import expected_augmentation_distance
from .types import (
    EmbeddingSet,
    LatentPartition,
    RandomBaseline,
    ValidationError,
)

__all__ = [
    "center_error",
    "alignment_error",
    "alignment_loss",
    "class_center_divergence",
    "random_subset_baseline",
    "diagnose_document",
]

log = logging.getLogger(__name__)


def _subset_locals(members: np.ndarray, subset) -> np.ndarray:
    members = np.asarray(members, dtype=np.int64)
    sub = np.unique(np.asarray(list(subset), dtype=np.int64))
    if sub.size == 0:
        raise ValidationError("subset must be nonempty")
    locs = np.searchsorted(members, sub)
    if locs.max(initial=-1) >= members.size or not np.array_equal(members[locs], sub):
        raise ValidationError("subset contains indices outside the class")
    return locs


def center_error(members, subset, distances: np.ndarray) -> float:
    """Mean of d over the full members x subset grid (diagonal included)."""
    locs = _subset_locals(members, subset)
    return float(distances[:, locs].mean())


def alignment_error(members, subset, distances: np.ndarray) -> float:
    """Sum over excluded members of the distance to the nearest subset element."""
    locs = _subset_locals(members, subset)
    outside = np.ones(distances.shape[0], dtype=bool)
    outside[locs] = False
    out_idx = np.flatnonzero(outside)
    if out_idx.size == 0:
        return 0.0
    return float(distances[np.ix_(out_idx, locs)].min(axis=1).sum())


def alignment_loss(embeddings: EmbeddingSet, indices) -> float:
    """Mean over examples of the mean squared L2 distance between distinct view pairs."""
    if embeddings.m < 2:
        raise ValidationError("alignment loss is undefined for single-view embeddings (m = 1)")
    idx = np.asarray(list(indices), dtype=np.int64)
    if idx.size == 0:
        raise ValidationError("alignment loss needs a nonempty index set")
    views = embeddings.values[idx].astype(np.float64)
    diffs = views[:, :, None, :] - views[:, None, :, :]
    sq = (diffs**2).sum(axis=3)
    m = embeddings.m
    # the diagonal contributes zero; ordered distinct pairs number m * (m - 1)
    per_example = sq.sum(axis=(1, 2)) / (m * (m - 1))
    return float(per_example.mean())


def _center(values: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return values[idx].mean(axis=(0, 1), dtype=np.float64)


def _gram(centers: np.ndarray) -> np.ndarray:
    out = centers @ centers.T
    for i in range(1, out.shape[0]):
        out[i, :i] = out[:i, i]
    return out


def class_center_divergence(embeddings: EmbeddingSet, partition: LatentPartition) -> np.ndarray:
    """K x K matrix of inner products between per-class mean embeddings."""
    centers = np.stack(
        [_center(embeddings.values, members) for members in partition.class_members]
    )
    return _gram(centers)


def _baseline_rng(seed: int, class_id: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng([seed, class_id, replicate])


def random_subset_baseline(
    embeddings: EmbeddingSet,
    members: np.ndarray,
    distances: np.ndarray,
    *,
    subset_size: int,
    count: int,
    seed: int,
    class_id: int,
) -> RandomBaseline:
    """Diagnostics averaged over seeded uniform-random subsets of the class."""
    if not 1 <= subset_size <= members.size:
        raise ValidationError(f"baseline subset size {subset_size} out of range [1, {members.size}]")
    if count < 1:
        raise ValidationError(f"baseline count must be >= 1, got {count}")
    center_sum = 0.0
    alignment_sum = 0.0
    loss_sum = 0.0
    for rep in range(count):
        rng = _baseline_rng(seed, class_id, rep)
        locs = np.sort(rng.choice(members.size, size=subset_size, replace=False))
        subset = members[locs]
        center_sum += center_error(members, subset, distances)
        alignment_sum += alignment_error(members, subset, distances)
        if embeddings.m >= 2:
            loss_sum += alignment_loss(embeddings, subset)
    return RandomBaseline(
        count=count,
        center_error_mean=center_sum / count,
        alignment_error_mean=alignment_sum / count,
        alignment_loss_subset_mean=(loss_sum / count) if embeddings.m >= 2 else None,
    )


def _rebuild_partition(embeddings: EmbeddingSet, echo: dict, labels) -> LatentPartition:
    if labels is not None:
        return partition_from_labels(labels, expected_n=embeddings.n)
    if echo.get("partition_source") == "kmeans":
        base = embeddings.normalize() if echo["normalize"] else embeddings
        return kmeans_partition(
            base,
            echo["kmeans_K"],
            seed=echo["seed"],
            iters=echo["kmeans_iters"],
            tol=echo["kmeans_tol"],
        )
    raise ValidationError(
        "partition source required: the report was built from labels, pass the same label file"
    )


def diagnose_document(
    embeddings: EmbeddingSet,
    report: dict,
    labels=None,
    baseline_count: int | None = None,
) -> dict:
    """Recompute diagnostics for a report's subsets plus random baselines.

    Verifies that the embeddings and partition match the ones the report was
    built from (payload and assignment checksums), then reproduces every
    per-class diagnostic from scratch and adds class-center divergence for
    the full classes, the selected subsets, and the random baselines.
    """
    echo = report["config"]
    checksum = payload_checksum(embeddings)
    if checksum != report["input_checksum"]:
        raise ValidationError(
            f"embeddings checksum mismatch: report has {report['input_checksum']}, "
            f"file has {checksum}"
        )
    partition = _rebuild_partition(embeddings, echo, labels)
    part_checksum = assignments_checksum(partition.assignments)
    if part_checksum != echo["partition_checksum"]:
        raise ValidationError(
            f"partition checksum mismatch: report has {echo['partition_checksum']}, "
            f"rebuilt partition has {part_checksum}"
        )

    work = embeddings.normalize() if echo["normalize"] else embeddings
    count = echo["baseline_count"] if baseline_count is None else baseline_count
    seed = echo["seed"]

    classes_doc = []
    subsets: list[np.ndarray] = []
    for entry in report["classes"]:
        k = entry["class_id"]
        if not 0 <= k < partition.K:
            raise ValidationError(f"report class id {k} not present in the rebuilt partition")
        members = partition.class_members[k]
        selected = np.asarray(entry["selected"], dtype=np.int64)
        subsets.append(selected)
        if selected.size == 0:
            classes_doc.append(
                {
                    "class_id": k,
                    "size": int(members.size),
                    "final_size": 0,
                    "diagnostics": None,
                    "random_baseline": None,
                }
            )
            continue
        distances = expected_augmentation_distance(work, members, class_id=k)
        loss_subset = loss_full = None
        if work.m >= 2:
            loss_subset = alignment_loss(work, selected)
            loss_full = alignment_loss(work, members)
        diag_doc = {
            "center_error": center_error(members, selected, distances),
            "alignment_error": alignment_error(members, selected, distances),
            "alignment_loss_subset": loss_subset,
            "alignment_loss_full": loss_full,
        }
        baseline_doc = None
        if count > 0:
            baseline = random_subset_baseline(
                work,
                members,
                distances,
                subset_size=int(selected.size),
                count=count,
                seed=seed,
                class_id=k,
            )
            baseline_doc = {
                "count": baseline.count,
                "center_error_mean": baseline.center_error_mean,
                "alignment_error_mean": baseline.alignment_error_mean,
                "alignment_loss_subset_mean": baseline.alignment_loss_subset_mean,
            }
        classes_doc.append(
            {
                "class_id": k,
                "size": int(members.size),
                "final_size": int(selected.size),
                "diagnostics": diag_doc,
                "random_baseline": baseline_doc,
            }
        )

    def matrix_doc(mat: np.ndarray) -> list[list[float]]:
        return [[float(v) for v in row] for row in mat]

    divergence_full = matrix_doc(class_center_divergence(work, partition))

    divergence_subset = None
    if all(sub.size > 0 for sub in subsets):
        centers = np.stack([_center(work.values, sub) for sub in subsets])
        divergence_subset = matrix_doc(_gram(centers))

    divergence_random_mean = None
    if count > 0 and all(sub.size > 0 for sub in subsets):
        total = np.zeros((len(subsets), len(subsets)))
        for rep in range(count):
            centers = []
            for k, entry in enumerate(report["classes"]):
                members = partition.class_members[entry["class_id"]]
                rng = _baseline_rng(seed, entry["class_id"], rep)
                locs = np.sort(rng.choice(members.size, size=int(subsets[k].size), replace=False))
                centers.append(_center(work.values, members[locs]))
            total += _gram(np.stack(centers))
        divergence_random_mean = matrix_doc(total / count)

    return {
        "schema_version": 1,
        "input_checksum": checksum,
        "partition_source": echo["partition_source"],
        "normalize": echo["normalize"],
        "seed": seed,
        "baseline_count": count,
        "classes": classes_doc,
        "divergence_full": divergence_full,
        "divergence_subset": divergence_subset,
        "divergence_random_mean": divergence_random_mean,
    }
