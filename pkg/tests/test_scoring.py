"""Thresholding, labeling, and ranking metrics against exact-arithmetic oracles."""

from fractions import Fraction

import numpy as np
import pytest

from ocelad.scoring import (
    DetectionReport,
    EmptyInputError,
    LengthMismatchError,
    NoPositivesError,
    SingleClassError,
    ThresholdResult,
    auc_pr,
    auc_roc,
    compute_metrics,
    f1_score,
    format_metrics_table,
    iqr_threshold,
    label_events,
    quantile,
    recall_at_k,
    report_from_json,
    report_to_csv,
    report_to_json,
)
from ocelad.numerics import make_rng


def auc_roc_pair_oracle(scores, truth) -> Fraction:
    """Exact pairwise-comparison oracle: P(score_pos > score_neg) + ties/2."""
    positives = [s for s, t in zip(scores, truth) if t]
    negatives = [s for s, t in zip(scores, truth) if not t]
    total = Fraction(0)
    for p in positives:
        for n in negatives:
            if p > n:
                total += 1
            elif p == n:
                total += Fraction(1, 2)
    return total / (len(positives) * len(negatives))


def auc_pr_oracle(scores, truth) -> Fraction:
    """Exact average precision: walk ranks descending, index breaks ties."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    n_pos = sum(truth)
    tp = 0
    total = Fraction(0)
    for rank, index in enumerate(order, start=1):
        if truth[index]:
            tp += 1
            total += Fraction(1, n_pos) * Fraction(tp, rank)
    return total


def recall_at_k_oracle(scores, truth, k) -> Fraction:
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    hits = sum(1 for i in order[:k] if truth[i])
    return Fraction(hits, sum(truth))


class TestQuantile:
    def test_single_value(self):
        for q in (0.0, 0.25, 0.5, 1.0):
            assert quantile([5.0], q) == 5.0

    def test_worked_quartiles(self):
        values = [1.0, 2.0, 3.0, 4.0, 100.0]
        assert quantile(values, 0.25) == 2.0
        assert quantile(values, 0.75) == 4.0

    def test_interpolated_median(self):
        assert quantile([1.0, 2.0, 3.0, 4.0], 0.5) == 2.5

    def test_matches_numpy_linear(self):
        rng = make_rng(14)
        for _ in range(100):
            values = rng.standard_normal(int(rng.integers(1, 30)))
            q = float(rng.random())
            assert abs(quantile(values, q) - float(np.quantile(values, q))) < 1e-12

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            quantile([], 0.5)

    def test_out_of_range_q(self):
        with pytest.raises(ValueError):
            quantile([1.0], 1.5)


class TestIqrThreshold:
    def test_worked_example(self):
        result = iqr_threshold([1.0, 2.0, 3.0, 4.0, 100.0])
        assert (result.q1, result.q3, result.iqr, result.tau) == (2.0, 4.0, 2.0, 7.0)

    def test_constant_scores(self):
        result = iqr_threshold([3.0] * 10)
        assert result.iqr == 0.0
        assert result.tau == 3.0

    def test_zero_factor(self):
        result = iqr_threshold([1.0, 2.0, 3.0, 4.0, 100.0], k_factor=0.0)
        assert result.tau == result.q3

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            iqr_threshold([])


class TestLabeling:
    def test_worked_example(self):
        scores = [1.0, 2.0, 3.0, 4.0, 100.0]
        labels = label_events(scores, iqr_threshold(scores))
        assert list(labels) == [False, False, False, False, True]

    def test_constant_scores_no_anomalies(self):
        scores = [2.0] * 8
        labels = label_events(scores, iqr_threshold(scores))
        assert not labels.any()

    def test_tie_is_normal(self):
        threshold = ThresholdResult(q1=0.0, q3=1.0, iqr=1.0, tau=2.5, k_factor=1.5)
        labels = label_events([2.5, 2.5000001], threshold)
        assert list(labels) == [False, True]

    def test_monotone_in_k_factor(self):
        rng = make_rng(15)
        scores = rng.random(200)
        counts = [
            int(label_events(scores, iqr_threshold(scores, k)).sum())
            for k in (0.0, 0.5, 1.0, 1.5, 2.0, 3.0)
        ]
        assert counts == sorted(counts, reverse=True)

    def test_scale_equivariance(self):
        rng = make_rng(16)
        scores = rng.random(100)
        base = label_events(scores, iqr_threshold(scores))
        for factor in (0.001, 3.0, 1e6):
            scaled = label_events(scores * factor, iqr_threshold(scores * factor))
            np.testing.assert_array_equal(scaled, base)


class TestF1:
    def test_perfect(self):
        truth = [True, False, True, False]
        assert f1_score(truth, truth) == 1.0

    def test_degenerate_zero(self):
        assert f1_score([False, False], [False, False]) == 0.0

    def test_hand_counts(self):
        # TP=2, FP=1, FN=1 -> precision = recall = 2/3 -> F1 = 2/3.
        pred = [True, True, True, False, False]
        truth = [True, True, False, True, False]
        assert abs(f1_score(pred, truth) - 2.0 / 3.0) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            f1_score([True], [True, False])


class TestAucRoc:
    def test_perfect_separation(self):
        assert auc_roc([0.1, 0.2, 0.9, 0.8], [False, False, True, True]) == 1.0

    def test_all_tied_is_half(self):
        assert auc_roc([1.0] * 6, [True, False, True, False, False, False]) == 0.5

    def test_six_event_mixed_case(self):
        scores = [0.9, 0.1, 0.5, 0.5, 0.3, 0.7]
        truth = [True, False, True, False, False, False]
        assert auc_roc(scores, truth) == float(auc_roc_pair_oracle(scores, truth))

    def test_single_class(self):
        with pytest.raises(SingleClassError):
            auc_roc([1.0, 2.0], [True, True])

    def test_monotone_transform_invariance(self):
        rng = make_rng(18)
        scores = rng.standard_normal(50)
        truth = rng.random(50) < 0.3
        if not truth.any() or truth.all():
            truth[0], truth[1] = True, False
        base = auc_roc(scores, truth)
        assert auc_roc(np.exp(scores), truth) == base
        assert auc_roc(3.0 * scores + 7.0, truth) == base


class TestAucPr:
    def test_perfect_ranking(self):
        assert auc_pr([0.9, 0.8, 0.1, 0.2], [True, True, False, False]) == 1.0

    def test_single_positive_ranked_last(self):
        n = 8
        scores = list(range(n, 0, -1))
        truth = [False] * (n - 1) + [True]
        assert abs(auc_pr(scores, truth) - 1.0 / n) < 1e-12

    def test_no_positives(self):
        with pytest.raises(NoPositivesError):
            auc_pr([1.0, 2.0], [False, False])


class TestRecallAtK:
    def test_perfect(self):
        assert recall_at_k([0.9, 0.8, 0.1], [True, True, False]) == 1.0

    def test_anomalies_below_cut(self):
        assert recall_at_k([0.9, 0.8, 0.1, 0.2], [False, False, True, True], k=2) == 0.0

    def test_k_equals_n(self):
        rng = make_rng(19)
        scores = rng.random(20)
        truth = rng.random(20) < 0.4
        truth[0] = True
        assert recall_at_k(scores, truth, k=20) == 1.0

    def test_default_k_is_positive_count(self):
        scores = [5.0, 4.0, 3.0, 2.0, 1.0]
        truth = [True, False, True, False, False]
        assert recall_at_k(scores, truth) == recall_at_k(scores, truth, k=2)

    def test_tie_broken_by_index(self):
        scores = [1.0, 1.0, 1.0, 0.0]
        truth = [False, True, False, False]
        assert recall_at_k(scores, truth, k=1) == 0.0
        assert recall_at_k(scores, truth, k=2) == 1.0

    def test_per_type_restriction_shape(self):
        scores = [0.9, 0.8, 0.7, 0.1, 0.05]
        types = ["a", "b", "a", "normal", "normal"]
        binary = [t != "normal" for t in types]
        k = sum(binary)
        type_a = [t == "a" for t in types]
        assert recall_at_k(scores, type_a, k=k) == 1.0

    def test_no_positives(self):
        with pytest.raises(NoPositivesError):
            recall_at_k([1.0], [False], k=1)


class TestAgainstExactOracles:
    def test_thousand_random_instances(self):
        rng = make_rng(777)
        for trial in range(1000):
            n = int(rng.integers(2, 13))
            tie_free = trial % 2 == 0
            if tie_free:
                scores = list(rng.permutation(n).astype(float))
            else:
                scores = [float(x) for x in rng.integers(0, 4, size=n)]
            truth = [bool(b) for b in rng.random(n) < 0.4]
            if not any(truth):
                truth[int(rng.integers(0, n))] = True
            if all(truth):
                truth[int(rng.integers(0, n))] = False
            assert auc_roc(scores, truth) == float(auc_roc_pair_oracle(scores, truth))
            ap = auc_pr(scores, truth)
            assert abs(ap - float(auc_pr_oracle(scores, truth))) < 1e-12
            k = int(rng.integers(1, n + 1))
            assert recall_at_k(scores, truth, k=k) == float(
                recall_at_k_oracle(scores, truth, k)
            )


class TestReportSerialization:
    def build_report(self, with_truth=True):
        scores = np.array([0.1, 0.12, 0.15, 0.2, 9.0])
        threshold = iqr_threshold(scores)
        truth = ("normal", "normal", "normal", "normal", "attr_swap")
        return DetectionReport(
            event_ids=("e1", "e2", "e3", "e4", "e5"),
            scores=scores,
            labels=label_events(scores, threshold),
            threshold=threshold,
            truth=truth if with_truth else None,
        )

    def test_json_round_trip(self):
        report = self.build_report()
        again = report_from_json(report_to_json(report))
        assert again.event_ids == report.event_ids
        np.testing.assert_array_equal(again.scores, report.scores)
        np.testing.assert_array_equal(again.labels, report.labels)
        assert again.threshold == report.threshold
        assert again.truth == report.truth

    def test_json_deterministic(self):
        assert report_to_json(self.build_report()) == report_to_json(self.build_report())

    def test_csv_shape(self):
        text = report_to_csv(self.build_report())
        lines = text.strip().splitlines()
        assert lines[0] == "event_id,score,label,truth"
        assert len(lines) == 6
        assert lines[5] == "e5,9.0,anomalous,attr_swap"

    def test_csv_without_truth(self):
        text = report_to_csv(self.build_report(with_truth=False))
        assert text.splitlines()[0] == "event_id,score,label"

    def test_metrics_block_embedded(self):
        report = self.build_report()
        report.metrics = compute_metrics(report.scores, report.labels, report.truth)
        again = report_from_json(report_to_json(report))
        assert again.metrics == report.metrics


class TestComputeMetrics:
    def test_perfect_detector(self):
        scores = np.array([9.0, 8.0, 0.1, 0.2, 0.3, 0.1])
        labels = np.array([True, True, False, False, False, False])
        types = ("attr_swap", "random_activity", "normal", "normal", "normal", "normal")
        metrics = compute_metrics(scores, labels, types)
        assert metrics.f1 == 1.0
        assert metrics.auc_roc == 1.0
        assert metrics.auc_pr == 1.0
        assert metrics.recall_at_k == 1.0
        assert metrics.k == 2
        assert metrics.per_type_recall == {"attr_swap": 1.0, "random_activity": 1.0}

    def test_table_formatting(self):
        scores = np.array([9.0, 0.1, 0.2])
        labels = np.array([True, False, False])
        types = ("attr_swap", "normal", "normal")
        metrics = compute_metrics(scores, labels, types)
        single = format_metrics_table([("run1", metrics)])
        assert "F1" in single and "run1" in single
        double = format_metrics_table([("run1", metrics), ("run2", metrics)])
        assert "mean +/- std" in double
