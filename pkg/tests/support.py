"""Shared test helpers: fixtures data, independent oracles, tolerance rules."""

from __future__ import annotations

import numpy as np

from sase import EmbeddingSet, SimilarityMatrix

FOUR_POINT_VALUES = {(0, 1): 0.9, (0, 2): 0.8, (0, 3): 0.1, (1, 2): 0.5, (1, 3): 0.2, (2, 3): 0.3}


def four_point_similarity() -> SimilarityMatrix:
    s = np.zeros((4, 4))
    for (i, j), v in FOUR_POINT_VALUES.items():
        s[i, j] = v
        s[j, i] = v
    return SimilarityMatrix(class_id=0, local_index_map=np.arange(4), s=s, tau=0.0)


def make_similarity(s, tau: float = 0.0) -> SimilarityMatrix:
    s = np.asarray(s, dtype=np.float64)
    return SimilarityMatrix(class_id=0, local_index_map=np.arange(s.shape[0]), s=s, tau=tau)


def random_similarity(rng: np.random.Generator, n: int) -> SimilarityMatrix:
    """Symmetric uniform [0, 1] entries, zero diagonal."""
    upper = np.triu(rng.random((n, n)), 1)
    return make_similarity(upper + upper.T)


def close(a: float, b: float, tol: float = 1e-9) -> bool:
    """Relative comparison with an absolute floor of tol for near-zero values."""
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def objective_literal(S, sim: SimilarityMatrix) -> float:
    """F(S) by explicit python loops, fully independent of the engine."""
    selected = set(int(e) for e in S)
    total = 0.0
    for i in range(sim.n_local):
        if i in selected:
            continue
        for j in selected:
            total += float(sim.s[i, j])
    return total


def naive_greedy(sim: SimilarityMatrix, r_k: int) -> list[int]:
    """Full-rescan greedy: fresh gain vector every step, no heap, no caching."""
    s = sim.s
    n = sim.n_local
    col = s.sum(axis=0, dtype=np.float64)
    selected: list[int] = []
    taken = np.zeros(n, dtype=bool)
    while len(selected) < r_k:
        if selected:
            gains = col - 2.0 * s[:, np.asarray(selected)].sum(axis=1, dtype=np.float64)
        else:
            gains = col.copy()
        gains[taken] = -np.inf
        e = int(np.argmax(gains))
        selected.append(e)
        taken[e] = True
    return selected


def pairwise_distance_literal(embeddings: EmbeddingSet, members) -> np.ndarray:
    """d_ij via explicit loops over all view pairs."""
    mem = list(int(i) for i in members)
    m = embeddings.m
    out = np.zeros((len(mem), len(mem)))
    for a, i in enumerate(mem):
        for b, j in enumerate(mem):
            total = 0.0
            for u in range(m):
                for v in range(m):
                    diff = embeddings.values[i, u].astype(np.float64) - embeddings.values[
                        j, v
                    ].astype(np.float64)
                    total += float(np.sqrt((diff**2).sum()))
            out[a, b] = total / (m * m)
    return out


def pairwise_similarity_literal(embeddings: EmbeddingSet, members, tau: float) -> np.ndarray:
    """s_ij via explicit loops over all view pairs, thresholded like the engine."""
    mem = list(int(i) for i in members)
    m = embeddings.m
    out = np.zeros((len(mem), len(mem)))
    for a, i in enumerate(mem):
        for b, j in enumerate(mem):
            total = 0.0
            for u in range(m):
                for v in range(m):
                    total += float(
                        embeddings.values[i, u].astype(np.float64)
                        @ embeddings.values[j, v].astype(np.float64)
                    )
            raw = total / (m * m)
            out[a, b] = raw if raw > tau and raw > 0.0 else 0.0
    np.fill_diagonal(out, 0.0)
    return out


def synthetic_mixture(
    seed: int = 7,
    classes: int = 10,
    per_class: int = 100,
    d: int = 32,
    views: int = 2,
    cluster_std: float = 0.5,
    view_noise: float = 0.05,
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded Gaussian mixture with unit-normalized noisy views.

    Returns (values, labels) with values of shape (classes * per_class, views, d).
    """
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(classes, d))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    points = np.repeat(centers, per_class, axis=0)
    points = points + cluster_std * rng.normal(size=points.shape)
    stacked = np.stack(
        [points + view_noise * rng.normal(size=points.shape) for _ in range(views)], axis=1
    )
    stacked /= np.linalg.norm(stacked, axis=2, keepdims=True)
    labels = np.repeat(np.arange(classes), per_class)
    return stacked.astype(np.float32), labels
