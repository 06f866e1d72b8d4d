"""Imbalance-aware evaluation: confusion counts, threshold metrics, and
rank-statistic ROC-AUC with half credit for tied scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "ConfusionCounts",
    "MetricsReport",
    "confusion_counts",
    "roc_auc",
    "classification_report",
    "REPORT_CSV_HEADER",
    "report_csv_row",
    "report_to_dict",
]

REPORT_CSV_HEADER = "accuracy,precision,recall,f1,auc,tp,fp,tn,fn"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    counts: ConfusionCounts


def _check_labels(values, name):
    arr = np.asarray(values)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty vector")
    if not np.isin(arr, (-1, 1)).all():
        raise ValueError(f"{name} must contain only +1 and -1")
    return arr.astype(int)


def confusion_counts(true_labels, predicted_labels) -> ConfusionCounts:
    t = _check_labels(true_labels, "true_labels")
    p = _check_labels(predicted_labels, "predicted_labels")
    if t.size != p.size:
        raise ValueError("length mismatch between true and predicted labels")
    return ConfusionCounts(
        tp=int(np.count_nonzero((t == 1) & (p == 1))),
        fp=int(np.count_nonzero((t == -1) & (p == 1))),
        tn=int(np.count_nonzero((t == -1) & (p == -1))),
        fn=int(np.count_nonzero((t == 1) & (p == -1))),
    )


def roc_auc(scores, labels) -> float:
    """Wilcoxon-Mann-Whitney statistic: P(score+ > score-) with ties at 1/2.

    Computed from average ranks in O(N log N); exactly equals pairwise
    counting.
    """
    s = np.asarray(scores, dtype=float)
    l = _check_labels(labels, "labels")
    if s.shape != l.shape:
        raise ValueError("scores and labels must have the same length")
    if not np.isfinite(s).all():
        raise ValueError("scores must be finite")
    n_pos = int(np.count_nonzero(l == 1))
    n_neg = l.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("single-class labels")
    ranks = rankdata(s)
    rank_sum_pos = float(ranks[l == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def classification_report(true_labels, predicted_labels, scores) -> MetricsReport:
    """Accuracy/precision/recall/F1 from the confusion counts plus ROC-AUC.

    Zero-denominator conventions: precision = 0 when TP+FP = 0, recall = 0
    when TP+FN = 0, F1 = 0 when P+R = 0.
    """
    counts = confusion_counts(true_labels, predicted_labels)
    accuracy = (counts.tp + counts.tn) / counts.total
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    auc = roc_auc(scores, true_labels)
    return MetricsReport(
        accuracy=float(accuracy), precision=float(precision), recall=float(recall),
        f1=float(f1), auc=float(auc), counts=counts,
    )


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "accuracy": report.accuracy,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "auc": report.auc,
        "tp": report.counts.tp,
        "fp": report.counts.fp,
        "tn": report.counts.tn,
        "fn": report.counts.fn,
    }


def report_csv_row(report: MetricsReport) -> str:
    c = report.counts
    metrics = ",".join(
        f"{v:.17g}" for v in (report.accuracy, report.precision, report.recall, report.f1, report.auc)
    )
    return f"{metrics},{c.tp},{c.fp},{c.tn},{c.fn}"
