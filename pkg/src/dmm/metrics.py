"""Classification metrics used in the experiment tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["Metrics", "confusion_matrix", "metrics"]


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    macro_f1: float
    balanced_accuracy: float
    confusion: np.ndarray

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "balanced_accuracy": self.balanced_accuracy,
            "confusion": self.confusion.tolist(),
        }


def confusion_matrix(predictions, truth, k: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    pred = np.asarray(predictions, dtype=np.int64)
    true = np.asarray(truth, dtype=np.int64)
    return np.bincount(true * k + pred, minlength=k * k).reshape(k, k)


def metrics(predictions, truth, k: int) -> Metrics:
    """Accuracy, macro-F1 and balanced accuracy.

    A class with no true and no predicted members scores F1 = 0; classes
    absent from ``truth`` are left out of the balanced accuracy.
    """
    pred = np.asarray(predictions, dtype=np.int64)
    true = np.asarray(truth, dtype=np.int64)
    if pred.shape != true.shape:
        raise ConfigError(f"{pred.size} predictions for {true.size} labels")
    if true.size == 0:
        raise ConfigError("no labels to score")
    cm = confusion_matrix(pred, true, k)
    tp = np.diag(cm).astype(float)
    actual = cm.sum(axis=1).astype(float)
    predicted = cm.sum(axis=0).astype(float)
    denom = actual + predicted
    f1 = np.divide(2 * tp, denom, out=np.zeros(k), where=denom > 0)
    present = actual > 0
    recall = tp[present] / actual[present]
    return Metrics(
        accuracy=float(tp.sum() / true.size),
        macro_f1=float(f1.mean()),
        balanced_accuracy=float(recall.mean()),
        confusion=cm,
    )
