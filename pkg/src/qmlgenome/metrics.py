"""Binary classification metrics: accuracy, precision, recall, F1 and AUROC."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.stats import rankdata

from .errors import DataError, UsageError


class Confusion(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int


class ClassificationScores(NamedTuple):
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: Confusion


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auroc: float
    confusion: Confusion
    n: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auroc": self.auroc,
            "confusion": self.confusion._asdict(),
            "n": self.n,
        }
        d.update(self.extra)
        return d


def _binary(v, name: str) -> np.ndarray:
    v = np.asarray(v).reshape(-1)
    if not np.all(np.isin(v, (0, 1))):
        raise UsageError(f"{name} must contain only 0 and 1")
    return v.astype(int)


def classification_metrics(labels, predictions) -> ClassificationScores:
    """Confusion-matrix metrics with class 1 positive. Zero denominators give 0."""
    y = _binary(labels, "labels")
    p = _binary(predictions, "predictions")
    if y.size == 0 or y.size != p.size:
        raise UsageError(f"need equal non-zero lengths, got {y.size} labels and {p.size} predictions")
    tp = int(np.sum((y == 1) & (p == 1)))
    fp = int(np.sum((y == 0) & (p == 1)))
    tn = int(np.sum((y == 0) & (p == 0)))
    fn = int(np.sum((y == 1) & (p == 0)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ClassificationScores((tp + tn) / y.size, precision, recall, f1, Confusion(tp, fp, tn, fn))


def auroc(labels, scores) -> float:
    """Mann-Whitney estimate of P(score_pos > score_neg) with ties counted as 1/2."""
    y = _binary(labels, "labels")
    s = np.asarray(scores, dtype=float).reshape(-1)
    if y.size != s.size:
        raise UsageError(f"{y.size} labels but {s.size} scores")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUROC needs both classes in the labels")
    ranks = rankdata(s, method="average")
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def evaluate_model(
    predict: Callable[[np.ndarray], np.ndarray],
    score: Callable[[np.ndarray], np.ndarray],
    X,
    y,
    **extra,
) -> MetricsReport:
    """Apply a model's batch ``predict`` ({0, 1}) and ``score`` callbacks to ``X`` and
    build the report. Keyword arguments are copied into the serialized report."""
    y = _binary(y, "labels")
    preds = np.asarray(predict(X)).reshape(-1)
    scores = np.asarray(score(X), dtype=float).reshape(-1)
    c = classification_metrics(y, preds)
    return MetricsReport(c.accuracy, c.precision, c.recall, c.f1, auroc(y, scores), c.confusion,
                         int(y.size), dict(extra))
