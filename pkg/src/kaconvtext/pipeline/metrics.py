"""Accuracy, per-class precision/recall/F1 and support-weighted F1."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgument


@dataclass
class MetricsReport:
    labels: list
    confusion: np.ndarray          # rows: true class, columns: predicted class
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    weighted_f1: float

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "weighted_f1": self.weighted_f1,
            "labels": list(self.labels),
            "per_class": {
                label: {
                    "precision": float(self.precision[i]),
                    "recall": float(self.recall[i]),
                    "f1": float(self.f1[i]),
                    "support": int(self.support[i]),
                }
                for i, label in enumerate(self.labels)
            },
            "confusion_matrix": self.confusion.tolist(),
        }


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true, dtype=np.int64), np.asarray(y_pred, dtype=np.int64)), 1)
    return cm


def report_from_confusion(cm, labels=None) -> MetricsReport:
    cm = np.asarray(cm, dtype=np.int64)
    n = cm.shape[0]
    labels = list(labels) if labels is not None else [str(i) for i in range(n)]
    tp = np.diag(cm).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    support = cm.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
    total = int(support.sum())
    accuracy = float(tp.sum() / total) if total else 0.0
    weighted = float(np.sum(support / total * f1)) if total else 0.0
    return MetricsReport(labels, cm, precision, recall, f1, support, accuracy, weighted)


def classification_report(y_true, y_pred, labels) -> MetricsReport:
    """Metrics over integer class ids ``0 .. len(labels) - 1``."""
    n = len(labels)
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise InvalidArgument("y_true and y_pred differ in length")
    for arr in (y_true, y_pred):
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise InvalidArgument("class id out of range")
    return report_from_confusion(confusion_matrix(y_true, y_pred, n), labels)
