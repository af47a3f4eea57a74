"""Confusion matrix and macro-averaged classification metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: np.ndarray  # rows: true class, cols: predicted class
    per_class_recall: list[float]

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "precision": self.precision, "recall": self.recall,
                "f1": self.f1, "confusion_matrix": self.confusion.tolist(),
                "per_class_recall": self.per_class_recall}


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true, dtype=int), np.asarray(y_pred, dtype=int)), 1)
    return cm


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def metrics_from_confusion(cm: np.ndarray) -> Metrics:
    """Accuracy plus macro precision/recall/F1 (classes with no support or
    no predictions contribute 0 to the corresponding average)."""
    cm = np.asarray(cm)
    total = int(cm.sum())
    if total == 0:
        raise ValueError("empty confusion matrix")
    tp = np.diag(cm).astype(float)
    precision = [_safe_div(tp[k], cm[:, k].sum()) for k in range(cm.shape[0])]
    recall = [_safe_div(tp[k], cm[k, :].sum()) for k in range(cm.shape[0])]
    f1 = [_safe_div(2 * p * r, p + r) for p, r in zip(precision, recall)]
    return Metrics(
        accuracy=float(tp.sum() / total),
        precision=float(np.mean(precision)),
        recall=float(np.mean(recall)),
        f1=float(np.mean(f1)),
        confusion=cm,
        per_class_recall=[float(r) for r in recall],
    )


def classification_metrics(y_true, y_pred, n_classes: int) -> Metrics:
    if len(y_true) == 0:
        raise ValueError("cannot score an empty set")
    return metrics_from_confusion(confusion_matrix(y_true, y_pred, n_classes))
