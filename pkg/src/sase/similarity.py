"""Expected augmentation distance and similarity between examples of one class.

For examples i and j with views v in A(i), v' in A(j):
  d_ij  = mean over all m*m view pairs of ||v - v'||_2
  raw_ij = mean over all m*m view pairs of <v, v'>
         = <view-mean of i, view-mean of j>      (bilinearity)
s_ij keeps raw_ij when it exceeds the threshold tau and is 0 otherwise, with
the diagonal forced to 0. d_ii is the mean distance among an example's own
views and is kept as computed.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.spatial.distance import cdist

from .types import EmbeddingSet, SimilarityMatrix, ValidationError

__all__ = [
    "expected_augmentation_distance",
    "expected_augmentation_similarity",
    "DEFAULT_MEMORY_CAP",
]

log = logging.getLogger(__name__)

DEFAULT_MEMORY_CAP = 8 << 30
# scratch ceiling per row block, independent of thread count so results never
# depend on scheduling
_BLOCK_BUDGET_BYTES = 64 << 20


def _check_cap(n_local: int, views_bytes: int, memory_cap: int, class_id: int) -> None:
    need = n_local * n_local * 8 + views_bytes
    if need > memory_cap:
        raise ValidationError(
            f"class {class_id}: dense matrix needs {need} bytes "
            f"which exceeds the memory cap of {memory_cap} bytes"
        )


def _member_array(embeddings: EmbeddingSet, members) -> np.ndarray:
    arr = np.asarray(members, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("class member list must be a nonempty 1-D index list")
    if arr.min() < 0 or arr.max() >= embeddings.n:
        raise ValidationError("class member index out of range")
    return arr


def _mirror_upper(mat: np.ndarray) -> None:
    # exact symmetry: the upper triangle is the single source of truth
    for i in range(1, mat.shape[0]):
        mat[i, :i] = mat[:i, i]


def expected_augmentation_distance(
    embeddings: EmbeddingSet, members, *, class_id: int = 0, memory_cap: int = DEFAULT_MEMORY_CAP
) -> np.ndarray:
    """Dense d_ij matrix for one class, float64, symmetric."""
    mem = _member_array(embeddings, members)
    n_local = int(mem.size)
    m = embeddings.m
    views = embeddings.values[mem].astype(np.float64).reshape(n_local * m, -1)
    _check_cap(n_local, views.nbytes, memory_cap, class_id)

    out = np.empty((n_local, n_local), dtype=np.float64)
    row_bytes = n_local * m * 8
    block = max(1, _BLOCK_BUDGET_BYTES // (row_bytes * m))
    for start in range(0, n_local, block):
        stop = min(start + block, n_local)
        pair = cdist(views[start * m : stop * m], views)
        out[start:stop] = pair.reshape(stop - start, m, n_local, m).mean(axis=(1, 3))
    _mirror_upper(out)
    out.setflags(write=False)
    return out


def expected_augmentation_similarity(
    embeddings: EmbeddingSet,
    members,
    tau: float,
    *,
    class_id: int = 0,
    memory_cap: int = DEFAULT_MEMORY_CAP,
) -> SimilarityMatrix:
    """Thresholded s_ij matrix for one class.

    Entries at or below tau are clamped to 0, as are any negative survivors,
    so the matrix always satisfies the nonnegativity the downstream
    submodular objective needs.
    """
    mem = _member_array(embeddings, members)
    n_local = int(mem.size)
    view_means = embeddings.values[mem].mean(axis=1, dtype=np.float64)
    _check_cap(n_local, view_means.nbytes, memory_cap, class_id)

    raw = np.empty((n_local, n_local), dtype=np.float64)
    row_bytes = n_local * 8
    block = max(1, _BLOCK_BUDGET_BYTES // max(1, row_bytes))
    for start in range(0, n_local, block):
        stop = min(start + block, n_local)
        raw[start:stop] = view_means[start:stop] @ view_means.T
    _mirror_upper(raw)

    s = np.where(raw > tau, raw, 0.0)
    np.maximum(s, 0.0, out=s)
    np.fill_diagonal(s, 0.0)
    log.debug(
        "class %d: similarity matrix %dx%d, tau=%g, %d/%d entries kept",
        class_id,
        n_local,
        n_local,
        tau,
        int(np.count_nonzero(s)),
        n_local * (n_local - 1),
    )
    return SimilarityMatrix(class_id=class_id, local_index_map=mem, s=s, tau=float(tau))
