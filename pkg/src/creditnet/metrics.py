"""Binary-classifier evaluation: accuracy, ROC-AUC, and the KS statistic.

AUC uses the Mann-Whitney convention (ties get half credit), which equals the
trapezoidal area under the tie-grouped ROC curve. KS is the maximum vertical
gap between the per-class score CDFs, equivalently max |TPR - FPR| over
thresholds; the maximum always occurs at a distinct score value, so only
those are swept.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .errors import ShapeError, UndefinedMetricError


@dataclass
class MetricsRecord:
    acc: float
    auc: float
    ks: float
    n_pos: int
    n_neg: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RocCurve:
    """Threshold-sweep ROC points, (0,0) first and (1,1) last, ties grouped."""

    fpr: np.ndarray
    tpr: np.ndarray

    def trapezoid_area(self) -> float:
        df = self.fpr[1:] - self.fpr[:-1]
        return float(np.sum(0.5 * df * (self.tpr[1:] + self.tpr[:-1])))

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def _validate(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape[0] != labels.shape[0]:
        raise ShapeError(
            f"scores ({scores.shape[0]}) and labels ({labels.shape[0]}) differ in length"
        )
    if scores.shape[0] == 0:
        raise ValueError("empty input")
    uniq = np.unique(labels)
    if not np.all(np.isin(uniq, (0, 1))):
        raise ValueError(f"labels must be 0/1, got values {uniq!r}")
    return scores, labels.astype(np.int64)


def accuracy(scores, labels, threshold: float = 0.5) -> float:
    """Fraction of samples where (score >= threshold) matches the label."""
    scores, labels = _validate(scores, labels)
    predicted = (scores >= threshold).astype(np.int64)
    return float(np.mean(predicted == labels))


def _class_counts(labels: np.ndarray) -> tuple[int, int]:
    n_pos = int(np.sum(labels == 1))
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"metric undefined with n_pos={n_pos}, n_neg={n_neg}"
        )
    return n_pos, n_neg


def _rank_average(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the average rank of their block."""
    n = scores.shape[0]
    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    is_new = np.empty(n, dtype=bool)
    is_new[0] = True
    is_new[1:] = sorted_scores[1:] != sorted_scores[:-1]
    group = np.cumsum(is_new) - 1
    first = np.flatnonzero(is_new)
    counts = np.diff(np.append(first, n))
    avg = first + (counts + 1) / 2.0  # first is 0-based, ranks are 1-based
    ranks = np.empty(n)
    ranks[order] = avg[group]
    return ranks


def auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative (ties half-credited)."""
    scores, labels = _validate(scores, labels)
    n_pos, n_neg = _class_counts(labels)
    ranks = _rank_average(scores)
    u = np.sum(ranks[labels == 1]) - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _threshold_sweep(scores: np.ndarray, labels: np.ndarray):
    """Cumulative (fpr, tpr) after each distinct threshold, descending."""
    n_pos, n_neg = _class_counts(labels)
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    cum_pos = np.cumsum(sorted_labels == 1)
    cum_neg = np.cumsum(sorted_labels == 0)
    # keep only the last index of each tie block
    last = np.empty(scores.shape[0], dtype=bool)
    last[-1] = True
    last[:-1] = sorted_scores[1:] != sorted_scores[:-1]
    tpr = cum_pos[last] / n_pos
    fpr = cum_neg[last] / n_neg
    return fpr, tpr


def roc_points(scores, labels) -> RocCurve:
    """ROC curve with one point per distinct threshold, plus the (0,0) origin."""
    scores, labels = _validate(scores, labels)
    fpr, tpr = _threshold_sweep(scores, labels)
    return RocCurve(fpr=np.append(0.0, fpr), tpr=np.append(0.0, tpr))


def ks(scores, labels) -> float:
    """Max over thresholds of |TPR - FPR| (Kolmogorov-Smirnov separation)."""
    scores, labels = _validate(scores, labels)
    fpr, tpr = _threshold_sweep(scores, labels)
    return float(np.max(np.abs(tpr - fpr)))


def evaluate_scores(scores, labels, threshold: float = 0.5) -> MetricsRecord:
    """Compute the full metric triple on one split."""
    scores, labels = _validate(scores, labels)
    n_pos, n_neg = _class_counts(labels)
    return MetricsRecord(
        acc=accuracy(scores, labels, threshold),
        auc=auc(scores, labels),
        ks=ks(scores, labels),
        n_pos=n_pos,
        n_neg=n_neg,
    )
