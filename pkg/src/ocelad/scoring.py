"""Automatic thresholding, binary labeling, and evaluation metrics.

The threshold is Q3 + k * IQR over the anomaly-score distribution (k = 1.5
by default); an event is labeled anomalous iff its score strictly exceeds
the threshold. Ranking metrics (AUC-ROC, average precision, recall@k) work
on the raw scores with deterministic tie handling: AUC-ROC uses midranks,
the others break score ties by event index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORMAL_LABEL = "normal"


class ScoringError(Exception):
    """Base class for metric computation failures."""


class EmptyInputError(ScoringError):
    """A quantile or threshold was requested over no values."""


class LengthMismatchError(ScoringError):
    """Prediction and truth vectors differ in length."""


class SingleClassError(ScoringError):
    """AUC-ROC needs both an anomalous and a normal event."""


class NoPositivesError(ScoringError):
    """A recall-style metric needs at least one true anomaly."""


@dataclass(frozen=True)
class ThresholdResult:
    q1: float
    q3: float
    iqr: float
    tau: float
    k_factor: float


@dataclass(frozen=True)
class MetricsBlock:
    """Evaluation results for one detection run."""

    f1: float
    auc_roc: float
    auc_pr: float
    recall_at_k: float
    k: int
    per_type_recall: dict[str, float]


@dataclass
class DetectionReport:
    """Per-event scores and labels, the threshold, optional truth and metrics."""

    event_ids: tuple[str, ...]
    scores: np.ndarray
    labels: np.ndarray
    threshold: ThresholdResult
    truth: tuple[str, ...] | None = None
    metrics: MetricsBlock | None = None


def quantile(values: Sequence[float] | np.ndarray, q: float) -> float:
    """Quantile by linear interpolation at position (n - 1) * q of the sorted values."""
    data = np.sort(np.asarray(values, dtype=np.float64))
    if data.size == 0:
        raise EmptyInputError("cannot take a quantile of no values")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    position = (data.size - 1) * q
    lower = math.floor(position)
    if lower >= data.size - 1:
        return float(data[-1])
    fraction = position - lower
    return float(data[lower] + fraction * (data[lower + 1] - data[lower]))


def iqr_threshold(scores: Sequence[float] | np.ndarray, k_factor: float = 1.5) -> ThresholdResult:
    """Threshold tau = Q3 + k * (Q3 - Q1) over the score distribution."""
    q1 = quantile(scores, 0.25)
    q3 = quantile(scores, 0.75)
    iqr = q3 - q1
    return ThresholdResult(q1=q1, q3=q3, iqr=iqr, tau=q3 + k_factor * iqr, k_factor=k_factor)


def label_events(scores: Sequence[float] | np.ndarray, threshold: ThresholdResult) -> np.ndarray:
    """Boolean labels: anomalous iff score > tau. Ties count as normal."""
    return np.asarray(scores, dtype=np.float64) > threshold.tau


def f1_score(pred: Sequence[bool] | np.ndarray, truth: Sequence[bool] | np.ndarray) -> float:
    """F1 on the anomalous class; 0 when precision + recall degenerate to 0."""
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise LengthMismatchError(f"{pred.shape} vs {truth.shape}")
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _midranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their group."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    start = 0
    while start < scores.size:
        stop = start
        while stop + 1 < scores.size and sorted_scores[stop + 1] == sorted_scores[start]:
            stop += 1
        ranks[order[start : stop + 1]] = (start + stop) / 2.0 + 1.0
        start = stop + 1
    return ranks


def auc_roc(scores: Sequence[float] | np.ndarray, truth: Sequence[bool] | np.ndarray) -> float:
    """Area under the ROC curve via the rank-sum formulation with midranks."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth, dtype=bool)
    if scores.shape != truth.shape:
        raise LengthMismatchError(f"{scores.shape} vs {truth.shape}")
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("AUC-ROC needs both classes present")
    ranks = _midranks(scores)
    u_stat = float(ranks[truth].sum()) - n_pos * (n_pos + 1) / 2.0
    return u_stat / (n_pos * n_neg)


def _descending_order(scores: np.ndarray) -> np.ndarray:
    """Indices sorted by score descending, ties broken by ascending event index."""
    return np.lexsort((np.arange(scores.size), -scores))


def auc_pr(scores: Sequence[float] | np.ndarray, truth: Sequence[bool] | np.ndarray) -> float:
    """Average precision: sum of precision at each true anomaly in rank order."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth, dtype=bool)
    if scores.shape != truth.shape:
        raise LengthMismatchError(f"{scores.shape} vs {truth.shape}")
    n_pos = int(truth.sum())
    if n_pos == 0:
        raise NoPositivesError("average precision needs at least one true anomaly")
    order = _descending_order(scores)
    true_positives = 0
    total = 0.0
    for rank, index in enumerate(order, start=1):
        if truth[index]:
            true_positives += 1
            total += (1.0 / n_pos) * (true_positives / rank)
    return total


def recall_at_k(
    scores: Sequence[float] | np.ndarray,
    truth: Sequence[bool] | np.ndarray,
    k: int | None = None,
) -> float:
    """Fraction of true anomalies among the k highest-scored events.

    ``k`` defaults to the number of true anomalies. Score ties are broken by
    ascending event index, so the cut is deterministic.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth, dtype=bool)
    if scores.shape != truth.shape:
        raise LengthMismatchError(f"{scores.shape} vs {truth.shape}")
    n_pos = int(truth.sum())
    if n_pos == 0:
        raise NoPositivesError("recall@k needs at least one true anomaly")
    if k is None:
        k = n_pos
    if k < 1:
        raise ValueError("k must be >= 1")
    top = _descending_order(scores)[:k]
    return int(truth[top].sum()) / n_pos


def compute_metrics(
    scores: Sequence[float] | np.ndarray,
    labels: Sequence[bool] | np.ndarray,
    truth_types: Sequence[str],
) -> MetricsBlock:
    """All evaluation metrics for one run against per-event anomaly-type truth.

    ``truth_types`` holds "normal" or an anomaly-type name per event. F1 uses
    the thresholded labels; the ranking metrics use the raw scores. Per-type
    recall restricts the truth to one type while keeping k at the total
    anomaly count.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    types = np.asarray(list(truth_types), dtype=object)
    if not (scores.shape == labels.shape == types.shape):
        raise LengthMismatchError("scores, labels and truth must align")
    binary = types != NORMAL_LABEL
    k = int(binary.sum())
    per_type: dict[str, float] = {}
    for anomaly_type in sorted({t for t in types if t != NORMAL_LABEL}):
        per_type[anomaly_type] = recall_at_k(scores, types == anomaly_type, k=k)
    return MetricsBlock(
        f1=f1_score(labels, binary),
        auc_roc=auc_roc(scores, binary),
        auc_pr=auc_pr(scores, binary),
        recall_at_k=recall_at_k(scores, binary, k=k),
        k=k,
        per_type_recall=per_type,
    )


def format_metrics_table(named_metrics: list[tuple[str, MetricsBlock]]) -> str:
    """Human-readable metrics table; adds mean +/- std rows over multiple runs.

    Values are printed as percentages. The spread row uses the sample
    standard deviation.
    """
    type_names = sorted({t for _, m in named_metrics for t in m.per_type_recall})
    headers = ["run", "F1", "AUC-ROC", "AUC-PR", "Recall@k"] + [
        f"R@k {name}" for name in type_names
    ]

    def row_values(metrics: MetricsBlock) -> list[float]:
        base = [metrics.f1, metrics.auc_roc, metrics.auc_pr, metrics.recall_at_k]
        return base + [metrics.per_type_recall.get(name, float("nan")) for name in type_names]

    rows = [[name] + [f"{100 * v:.1f}" for v in row_values(m)] for name, m in named_metrics]
    if len(named_metrics) > 1:
        stacked = np.array([row_values(m) for _, m in named_metrics], dtype=np.float64)
        means = stacked.mean(axis=0)
        stds = stacked.std(axis=0, ddof=1)
        rows.append(
            ["mean +/- std"]
            + [f"{100 * mu:.1f} +/- {100 * sd:.1f}" for mu, sd in zip(means, stds)]
        )

    widths = [
        max(len(headers[i]), max(len(row[i]) for row in rows)) for i in range(len(headers))
    ]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    lines.extend("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows)
    return "\n".join(lines)


def _metrics_to_dict(metrics: MetricsBlock) -> dict:
    return {
        "f1": metrics.f1,
        "auc_roc": metrics.auc_roc,
        "auc_pr": metrics.auc_pr,
        "recall_at_k": metrics.recall_at_k,
        "k": metrics.k,
        "per_type_recall": dict(sorted(metrics.per_type_recall.items())),
    }


def _metrics_from_dict(doc: dict) -> MetricsBlock:
    return MetricsBlock(
        f1=doc["f1"],
        auc_roc=doc["auc_roc"],
        auc_pr=doc["auc_pr"],
        recall_at_k=doc["recall_at_k"],
        k=doc["k"],
        per_type_recall=dict(doc["per_type_recall"]),
    )


def report_to_json(report: DetectionReport) -> str:
    """Full JSON serialization of a detection report. Deterministic."""
    events = []
    for index, event_id in enumerate(report.event_ids):
        entry: dict = {
            "event_id": event_id,
            "score": float(report.scores[index]),
            "label": "anomalous" if report.labels[index] else NORMAL_LABEL,
        }
        if report.truth is not None:
            entry["truth"] = report.truth[index]
        events.append(entry)
    doc = {
        "threshold": {
            "q1": report.threshold.q1,
            "q3": report.threshold.q3,
            "iqr": report.threshold.iqr,
            "tau": report.threshold.tau,
            "k_factor": report.threshold.k_factor,
        },
        "events": events,
    }
    if report.metrics is not None:
        doc["metrics"] = _metrics_to_dict(report.metrics)
    return json.dumps(doc, indent=2)


def report_from_json(text: str) -> DetectionReport:
    doc = json.loads(text)
    events = doc["events"]
    threshold = ThresholdResult(**doc["threshold"])
    truth = None
    if events and "truth" in events[0]:
        truth = tuple(entry["truth"] for entry in events)
    metrics = _metrics_from_dict(doc["metrics"]) if "metrics" in doc else None
    return DetectionReport(
        event_ids=tuple(entry["event_id"] for entry in events),
        scores=np.array([entry["score"] for entry in events], dtype=np.float64),
        labels=np.array([entry["label"] == "anomalous" for entry in events], dtype=bool),
        threshold=threshold,
        truth=truth,
        metrics=metrics,
    )


def report_to_csv(report: DetectionReport) -> str:
    """CSV serialization: event id, score, label, and truth when present."""
    with_truth = report.truth is not None
    header = "event_id,score,label" + (",truth" if with_truth else "")
    lines = [header]
    for index, event_id in enumerate(report.event_ids):
        label = "anomalous" if report.labels[index] else NORMAL_LABEL
        line = f"{event_id},{float(report.scores[index])!r},{label}"
        if with_truth:
            line += f",{report.truth[index]}"
        lines.append(line)
    return "\n".join(lines) + "\n"
