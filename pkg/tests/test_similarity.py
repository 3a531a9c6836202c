"""Expected augmentation distance/similarity against literal all-view-pair oracles."""

from __future__ import annotations

import math

import numpy as np
import pytest

from sase import (
    EmbeddingSet,
    ValidationError,
    expected_augmentation_distance,
    expected_augmentation_similarity,
)
from .support import pairwise_distance_literal, pairwise_similarity_literal

SQRT2 = math.sqrt(2.0)


def two_view_pair() -> EmbeddingSet:
    # example A views (1,0),(0,1); example B views (1,0),(1,0)
    return EmbeddingSet.from_array(
        np.array([[[1, 0], [0, 1]], [[1, 0], [1, 0]]], dtype=np.float32)
    )


class TestDistance:
    def test_identical_single_views_have_distance_zero(self):
        es = EmbeddingSet.from_array(np.array([[[2.0, 3.0]], [[2.0, 3.0]]], dtype=np.float32))
        d = expected_augmentation_distance(es, [0, 1])
        assert d[0, 1] == 0.0
        assert d[1, 0] == 0.0

    def test_worked_view_pair_average(self):
        # four view pairs: 0, 0, sqrt(2), sqrt(2); mean sqrt(2)/2
        d = expected_augmentation_distance(two_view_pair(), [0, 1])
        assert abs(d[0, 1] - SQRT2 / 2) < 1e-12
        # the diagonal is the mean distance among an example's own views
        assert abs(d[0, 0] - SQRT2 / 2) < 1e-12
        assert d[1, 1] == 0.0

    def test_single_view_reduces_to_plain_l2(self):
        rng = np.random.default_rng(3)
        values = rng.normal(size=(6, 1, 4)).astype(np.float32)
        es = EmbeddingSet.from_array(values)
        d = expected_augmentation_distance(es, np.arange(6))
        flat = values[:, 0, :].astype(np.float64)
        expected = np.linalg.norm(flat[:, None, :] - flat[None, :, :], axis=2)
        assert np.allclose(d, expected, atol=1e-12)

    def test_matches_literal_oracle(self):
        rng = np.random.default_rng(11)
        es = EmbeddingSet.from_array(rng.normal(size=(7, 3, 5)).astype(np.float32))
        members = [0, 2, 3, 6]
        d = expected_augmentation_distance(es, members)
        oracle = pairwise_distance_literal(es, members)
        assert np.abs(d - oracle).max() < 1e-9

    def test_exact_symmetry(self):
        rng = np.random.default_rng(5)
        es = EmbeddingSet.from_array(rng.normal(size=(9, 2, 6)).astype(np.float32))
        d = expected_augmentation_distance(es, np.arange(9))
        assert np.array_equal(d, d.T)

    def test_member_validation(self):
        es = EmbeddingSet.from_array(np.ones((3, 1, 2), dtype=np.float32))
        with pytest.raises(ValidationError):
            expected_augmentation_distance(es, [])
        with pytest.raises(ValidationError):
            expected_augmentation_distance(es, [0, 3])


class TestSimilarity:
    def test_identical_unit_views_give_one(self):
        es = EmbeddingSet.from_array(np.array([[[1.0, 0.0]], [[1.0, 0.0]]], dtype=np.float32))
        sim = expected_augmentation_similarity(es, [0, 1], 0.0)
        assert sim.s[0, 1] == 1.0
        assert sim.s[0, 0] == 0.0

    def test_worked_view_pair_average(self):
        # inner products over the four view pairs: 1, 1, 0, 0; mean 0.5
        sim = expected_augmentation_similarity(two_view_pair(), [0, 1], 0.0)
        assert abs(sim.s[0, 1] - 0.5) < 1e-15

    def test_matches_literal_oracle(self):
        rng = np.random.default_rng(13)
        es = EmbeddingSet.from_array(rng.normal(size=(8, 3, 4)).astype(np.float32))
        for tau in (0.0, 0.35):
            sim = expected_augmentation_similarity(es, np.arange(8), tau)
            oracle = pairwise_similarity_literal(es, np.arange(8), tau)
            assert np.abs(sim.s - oracle).max() < 1e-9

    def test_exact_symmetry_and_zero_diagonal(self):
        rng = np.random.default_rng(17)
        es = EmbeddingSet.from_array(rng.normal(size=(10, 2, 5)).astype(np.float32))
        sim = expected_augmentation_similarity(es, np.arange(10), 0.1)
        assert np.array_equal(sim.s, sim.s.T)
        assert np.all(np.diag(sim.s) == 0.0)

    def test_threshold_monotonicity(self):
        rng = np.random.default_rng(19)
        es = EmbeddingSet.from_array(rng.normal(size=(12, 2, 6)).astype(np.float32))
        taus = [-1.0, 0.0, 0.2, 0.5, 2.0]
        mats = [expected_augmentation_similarity(es, np.arange(12), t).s for t in taus]
        for lo, hi in zip(mats, mats[1:]):
            assert np.all(hi <= lo + 1e-15)
        inf_sim = expected_augmentation_similarity(es, np.arange(12), np.inf)
        assert np.all(inf_sim.s == 0.0)

    def test_entries_never_negative_even_with_negative_tau(self):
        es = EmbeddingSet.from_array(np.array([[[1.0, 0.0]], [[-1.0, 0.0]]], dtype=np.float32))
        sim = expected_augmentation_similarity(es, [0, 1], -5.0)
        assert sim.s.min() >= 0.0

    def test_law_of_cosines_on_normalized_single_views(self):
        rng = np.random.default_rng(23)
        # positive orthant keeps every raw similarity above the tau=0 clamp
        values = np.abs(rng.normal(size=(20, 1, 8))).astype(np.float32)
        es = EmbeddingSet.from_array(values).normalize()
        sim = expected_augmentation_similarity(es, np.arange(20), 0.0)
        d = expected_augmentation_distance(es, np.arange(20))
        off = ~np.eye(20, dtype=bool)
        assert np.abs(sim.s[off] - (1.0 - d[off] ** 2 / 2.0)).max() < 1e-5

    def test_local_index_map_preserved(self):
        rng = np.random.default_rng(29)
        es = EmbeddingSet.from_array(rng.normal(size=(6, 1, 3)).astype(np.float32))
        sim = expected_augmentation_similarity(es, [5, 1, 4], 0.0, class_id=3)
        assert sim.class_id == 3
        assert sim.local_index_map.tolist() == [5, 1, 4]
        assert sim.tau == 0.0

    def test_memory_cap_aborts_with_clear_error(self):
        es = EmbeddingSet.from_array(np.ones((64, 1, 4), dtype=np.float32))
        with pytest.raises(ValidationError, match="memory cap"):
            expected_augmentation_similarity(es, np.arange(64), 0.0, memory_cap=1024)
        with pytest.raises(ValidationError, match="memory cap"):
            expected_augmentation_distance(es, np.arange(64), memory_cap=1024)
