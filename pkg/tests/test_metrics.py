"""Exact-semantics tests for accuracy / AUC / KS against brute-force oracles."""

import numpy as np
import pytest

from creditnet.errors import ShapeError, UndefinedMetricError
from creditnet.metrics import (
    MetricsRecord,
    accuracy,
    auc,
    evaluate_scores,
    ks,
    roc_points,
)


def auc_pairwise_oracle(scores, labels):
    """O(n^2) Mann-Whitney count: concordant pairs + half the ties."""
    scores = np.asarray(scores, float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = np.sum(pos[:, None] > neg[None, :])
    ties = np.sum(pos[:, None] == neg[None, :])
    return (wins + 0.5 * ties) / (pos.size * neg.size)


def ks_enumeration_oracle(scores, labels):
    """Max |TPR - FPR| by trying every distinct score as the threshold."""
    scores = np.asarray(scores, float)
    labels = np.asarray(labels)
    n_pos = np.sum(labels == 1)
    n_neg = np.sum(labels == 0)
    best = 0.0
    for t in np.unique(scores):
        tpr = np.sum(scores[labels == 1] >= t) / n_pos
        fpr = np.sum(scores[labels == 0] >= t) / n_neg
        best = max(best, abs(tpr - fpr))
    return best


def random_instance(rng, max_n=200):
    """Random scores/labels with both classes, sometimes heavily tied."""
    n = int(rng.integers(4, max_n + 1))
    style = rng.integers(0, 3)
    if style == 0:
        scores = rng.random(n)
    elif style == 1:
        scores = rng.integers(0, 5, n) / 4.0  # heavy ties
    else:
        scores = np.round(rng.random(n), 1)  # moderate ties
    labels = rng.integers(0, 2, n)
    if labels.min() == labels.max():
        labels[0] = 1 - labels[0]
    return scores, labels


class TestAccuracy:
    def test_perfect(self):
        assert accuracy([0.9, 0.2], [1, 0]) == 1.0

    def test_inverted(self):
        assert accuracy([0.9, 0.2], [0, 1]) == 0.0

    def test_direct_count(self):
        assert accuracy([0.6, 0.6, 0.4], [1, 0, 0]) == pytest.approx(2 / 3)

    def test_boundary_counts_as_positive(self):
        assert accuracy([0.5], [1]) == 1.0

    def test_threshold_zero_predicts_all_positive(self):
        rng = np.random.default_rng(0)
        scores = rng.random(50)
        labels = rng.integers(0, 2, 50)
        assert accuracy(scores, labels, threshold=0.0) == pytest.approx(labels.mean())

    def test_empty_input(self):
        with pytest.raises(ValueError):
            accuracy([], [])

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            accuracy([0.5], [1, 0])


class TestAuc:
    def test_perfect_separation(self):
        assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_all_ties(self):
        assert auc([0.3, 0.3, 0.3], [0, 1, 0]) == 0.5

    def test_four_point_fixture(self):
        scores = [0.1, 0.4, 0.35, 0.8]
        labels = [0, 0, 1, 1]
        assert auc_pairwise_oracle(scores, labels) == 0.75
        assert auc(scores, labels) == pytest.approx(0.75, abs=1e-15)

    def test_single_class_undefined(self):
        with pytest.raises(UndefinedMetricError):
            auc([0.1, 0.9], [1, 1])

    def test_label_swap_duality(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            scores, labels = random_instance(rng, max_n=60)
            assert auc(scores, 1 - labels) == pytest.approx(1 - auc(scores, labels),
                                                            abs=1e-12)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            scores, labels = random_instance(rng, max_n=60)
            base = auc(scores, labels)
            assert auc(np.exp(scores), labels) == base
            assert auc(3.0 * scores + 11.0, labels) == base

    def test_matches_trapezoid_area_under_roc(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            scores, labels = random_instance(rng, max_n=100)
            area = roc_points(scores, labels).trapezoid_area()
            assert auc(scores, labels) == pytest.approx(area, abs=1e-12)


class TestKs:
    def test_perfect_separation(self):
        assert ks([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_identical_distributions(self):
        assert ks([0.4, 0.4, 0.4, 0.4], [0, 1, 0, 1]) == 0.0

    def test_four_point_fixture(self):
        scores = [0.1, 0.4, 0.35, 0.8]
        labels = [0, 0, 1, 1]
        assert ks_enumeration_oracle(scores, labels) == 0.5
        assert ks(scores, labels) == pytest.approx(0.5, abs=1e-15)

    def test_single_class_undefined(self):
        with pytest.raises(UndefinedMetricError):
            ks([0.1, 0.9], [0, 0])

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            scores, labels = random_instance(rng, max_n=60)
            assert ks(np.exp(scores), labels) == ks(scores, labels)


class TestRocPoints:
    def test_perfect_two_sample(self):
        curve = roc_points([0.9, 0.2], [1, 0])
        assert curve.points == [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]

    def test_all_ties_single_diagonal_segment(self):
        curve = roc_points([0.5, 0.5, 0.5], [1, 0, 1])
        assert curve.points == [(0.0, 0.0), (1.0, 1.0)]

    def test_four_point_fixture_enumeration(self):
        curve = roc_points([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
        assert curve.points == [(0.0, 0.0), (0.0, 0.5), (0.5, 0.5),
                                (0.5, 1.0), (1.0, 1.0)]

    def test_monotone_coordinates(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            scores, labels = random_instance(rng)
            curve = roc_points(scores, labels)
            assert np.all(np.diff(curve.fpr) >= 0)
            assert np.all(np.diff(curve.tpr) >= 0)
            assert curve.points[0] == (0.0, 0.0)
            assert curve.points[-1] == (1.0, 1.0)


class TestOracleEquivalence:
    """Bulk randomized equivalence against the O(n^2) oracles."""

    def test_auc_and_ks_match_oracles(self):
        rng = np.random.default_rng(123)
        for _ in range(300):
            scores, labels = random_instance(rng)
            assert auc(scores, labels) == pytest.approx(
                auc_pairwise_oracle(scores, labels), abs=1e-12)
            assert ks(scores, labels) == pytest.approx(
                ks_enumeration_oracle(scores, labels), abs=1e-12)


class TestEvaluateScores:
    def test_record_fields(self):
        rec = evaluate_scores([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
        assert isinstance(rec, MetricsRecord)
        assert rec.n_pos == 2 and rec.n_neg == 2
        assert rec.auc == pytest.approx(0.75)
        assert rec.ks == pytest.approx(0.5)
        assert 0.0 <= rec.acc <= 1.0

    def test_to_dict_roundtrip(self):
        rec = evaluate_scores([0.9, 0.1], [1, 0])
        d = rec.to_dict()
        assert set(d) == {"acc", "auc", "ks", "n_pos", "n_neg"}
