"""Latent-class construction: dense label remapping and seeded k-means.

k-means clusters the per-example view means with k-means++ seeding and Lloyd
iterations, fully deterministic for fixed (embeddings, K, seed, iters, tol):
ties break toward the lowest index, empty clusters are re-seeded with the
point farthest from its assigned centroid, and the within-cluster objective
is asserted non-increasing at every iteration.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.spatial.distance import cdist

from .types import EmbeddingSet, LatentPartition, ValidationError

__all__ = [
    "partition_from_labels",
    "kmeans_partition",
    "DEFAULT_KMEANS_ITERS",
    "DEFAULT_KMEANS_TOL",
]

log = logging.getLogger(__name__)

DEFAULT_KMEANS_ITERS = 100
DEFAULT_KMEANS_TOL = 1e-4


def partition_from_labels(labels, expected_n: int | None = None) -> LatentPartition:
    """Partition from an integer label per example.

    Distinct labels are densely remapped to 0..K-1 in ascending label order.
    """
    arr = np.asarray(labels, dtype=np.int64)
    if expected_n is not None and arr.shape != (expected_n,):
        raise ValidationError(
            f"label count {arr.shape[0] if arr.ndim == 1 else arr.shape} "
            f"does not match example count {expected_n}"
        )
    return LatentPartition.from_assignments(arr)


def _kmeans_pp_seeds(points: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = np.empty(K, dtype=np.int64)
    chosen[0] = int(rng.integers(n))
    # squared distance to the nearest chosen center so far
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    taken = np.zeros(n, dtype=bool)
    taken[chosen[0]] = True
    for j in range(1, K):
        total = float(d2.sum())
        if total > 0.0:
            u = rng.random() * total
            cum = np.cumsum(d2)
            # side="right" skips zero-weight entries, landing on the lowest
            # index whose cumulative mass exceeds u
            idx = int(np.searchsorted(cum, u, side="right"))
            idx = min(idx, n - 1)
        else:
            # all remaining weights are zero (duplicate points): lowest free index
            idx = int(np.flatnonzero(~taken)[0])
        chosen[j] = idx
        taken[idx] = True
        d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(axis=1))
    return chosen


def _assign(points: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    d2 = cdist(points, centers, "sqeuclidean")
    labels = np.argmin(d2, axis=1)
    assigned = d2[np.arange(points.shape[0]), labels]
    return labels, assigned, float(assigned.sum())


def kmeans_partition(
    embeddings: EmbeddingSet,
    K: int,
    seed: int = 0,
    iters: int = DEFAULT_KMEANS_ITERS,
    tol: float = DEFAULT_KMEANS_TOL,
) -> LatentPartition:
    points = embeddings.view_means()
    n = points.shape[0]
    if not 1 <= K <= n:
        raise ValidationError(f"K must be in [1, {n}], got {K}")

    rng = np.random.default_rng(seed)
    centers = points[_kmeans_pp_seeds(points, K, rng)].copy()

    labels, assigned, objective = _assign(points, centers)
    prev_objective = objective
    for it in range(iters):
        new_centers = np.empty_like(centers)
        empties = []
        for k in range(K):
            members = np.flatnonzero(labels == k)
            if members.size:
                new_centers[k] = points[members].mean(axis=0)
            else:
                empties.append(k)
        if empties:
            steal = assigned.copy()
            for k in empties:
                far = int(np.argmax(steal))
                new_centers[k] = points[far]
                steal[far] = -np.inf
        shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        labels, assigned, objective = _assign(points, centers)
        # Lloyd monotonicity, modulo float dust
        assert objective <= prev_objective + 1e-9 * max(1.0, prev_objective), (
            f"k-means objective increased at iteration {it}: "
            f"{prev_objective} -> {objective}"
        )
        prev_objective = objective
        if shift < tol and not empties:
            log.debug("k-means converged after %d iterations (shift %.3e)", it + 1, shift)
            break

    return LatentPartition.from_assignments(labels)
