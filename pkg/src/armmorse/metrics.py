"""Classification metrics, the false-positive projection and latency timing."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import GestureLabel
from .errors import EmptyBenchmarkError, ShapeMismatchError

N_CLASSES = len(GestureLabel)


@dataclass(frozen=True)
class Metrics:
    confusion: np.ndarray  # (6, 6) counts, rows = truth, cols = predicted
    accuracy: float
    precision: np.ndarray  # (6,)
    recall: np.ndarray  # (6,)
    f1: np.ndarray  # (6,)
    macro_f1: float
    n: int

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_class": {
                GestureLabel(c).code: {
                    "precision": float(self.precision[c]),
                    "recall": float(self.recall[c]),
                    "f1": float(self.f1[c]),
                }
                for c in range(N_CLASSES)
            },
            "confusion": self.confusion.tolist(),
        }


def confusion_and_f1(truth, predicted) -> Metrics:
    """Build the 6x6 confusion matrix and per-class precision/recall/F1.

    Undefined ratios (empty row or column) count as 0 rather than NaN.
    """
    truth = np.asarray(truth, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if truth.shape != predicted.shape or truth.ndim != 1:
        raise ShapeMismatchError(
            f"truth {truth.shape} and predicted {predicted.shape} must be equal 1-d"
        )
    if truth.size == 0:
        raise ShapeMismatchError("cannot score zero predictions")
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(confusion, (truth, predicted), 1)
    return metrics_from_confusion(confusion)


def metrics_from_confusion(confusion: np.ndarray) -> Metrics:
    confusion = np.asarray(confusion, dtype=np.int64)
    if confusion.shape != (N_CLASSES, N_CLASSES):
        raise ShapeMismatchError(f"confusion shape {confusion.shape} != 6x6")
    total = int(confusion.sum())
    diag = np.diag(confusion).astype(np.float64)
    col = confusion.sum(axis=0).astype(np.float64)
    row = confusion.sum(axis=1).astype(np.float64)
    precision = np.divide(diag, col, out=np.zeros(N_CLASSES), where=col > 0)
    recall = np.divide(diag, row, out=np.zeros(N_CLASSES), where=row > 0)
    pr = precision + recall
    f1 = np.divide(2 * precision * recall, pr, out=np.zeros(N_CLASSES), where=pr > 0)
    return Metrics(
        confusion=confusion,
        accuracy=float(diag.sum() / total) if total else 0.0,
        precision=precision,
        recall=recall,
        f1=f1,
        macro_f1=float(f1.mean()),
        n=total,
    )


def project_false_positives(metrics: Metrics, windows_per_hour: int = 3600) -> float:
    """Expected false alarms per hour of continuous once-a-second recognition.

    Takes the rate at which true-Random windows get classified as any
    intentional gesture and scales it to windows_per_hour.
    """
    random_row = metrics.confusion[int(GestureLabel.RANDOM)]
    total = int(random_row.sum())
    if total == 0:
        return 0.0
    false_positive = total - int(random_row[int(GestureLabel.RANDOM)])
    return false_positive / total * windows_per_hour


def benchmark_inference(model, n_windows: int, seed: int = 0) -> dict:
    """Time eval-mode single-window forward passes over random windows.

    Wall-clock per window; reports milliseconds. The paper-style on-device
    numbers are not comparable and are not asserted here.
    """
    if n_windows <= 0:
        raise EmptyBenchmarkError(f"need at least 1 window, got {n_windows}")
    rng = np.random.default_rng(seed)
    windows = rng.standard_normal((n_windows, 6, 250))
    # warm-up to exclude first-call allocation effects
    model.predict_window(windows[0])
    times = np.empty(n_windows)
    for i in range(n_windows):
        start = time.perf_counter()
        model.predict_window(windows[i])
        times[i] = time.perf_counter() - start
    times_ms = times * 1000.0
    return {
        "n": n_windows,
        "mean_ms": float(times_ms.mean()),
        "p95_ms": float(np.percentile(times_ms, 95)),
        "min_ms": float(times_ms.min()),
        "max_ms": float(times_ms.max()),
    }
