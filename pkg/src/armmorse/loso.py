"""Leave-one-subject-out cross-validation over CNNs and classical baselines.

Fold geometry: subjects sorted ascending; fold i tests on subject i and
validates on the next subject cyclically (every subject is the validation
subject exactly once); the rest train. Channel statistics come from the
training subjects only and are applied frozen to validation and test, so
nothing leaks from held-out subjects.

Per fold, runs_per_fold independent runs re-randomize both the weight
init and the data order from seeds derived as
SeedSequence(master_seed, spawn_key=(fold_index, run_index)); the report
is therefore identical however folds or runs are scheduled.
"""

from __future__ import annotations

import numpy as np

from .baselines import BASELINE_KINDS, train_baseline
from .core import Dataset, GestureLabel, normalize_batch, norm_stats_of_array
from .errors import ConfigError, InsufficientSubjectsError
from .features import extract_features_batch
from .metrics import (
    Metrics,
    confusion_and_f1,
    metrics_from_confusion,
    project_false_positives,
)
from .nn.model import GestureModel, build_network
from .optim import AdamConfig
from .trainer import TrainConfig, train

CNN_KINDS = ("cnn-max", "cnn-lp")
MODEL_KINDS = CNN_KINDS + BASELINE_KINDS


def loso_folds(subjects: list[int]) -> list[dict]:
    """The (test, val, train) subject split of every fold."""
    subjects = sorted(set(subjects))
    if len(subjects) < 3:
        raise InsufficientSubjectsError(
            f"need at least 3 distinct subjects, got {len(subjects)}"
        )
    folds = []
    n = len(subjects)
    for i, test in enumerate(subjects):
        val = subjects[(i + 1) % n]
        train_subjects = [s for s in subjects if s != test and s != val]
        folds.append({"test": test, "val": val, "train": train_subjects})
    return folds


def _run_seeds(master_seed: int, fold_index: int, run_index: int) -> tuple[int, int]:
    seq = np.random.SeedSequence(master_seed, spawn_key=(fold_index, run_index))
    a, b = seq.generate_state(2)
    return int(a), int(b)


def _predict_cnn(network, x: np.ndarray) -> np.ndarray:
    out = np.empty(x.shape[0], dtype=np.int64)
    for start in range(0, x.shape[0], 512):
        probs = network.forward(x[start : start + 512])
        out[start : start + 512] = probs.argmax(axis=1)
    return out


def loso_cv(
    dataset: Dataset,
    model_kind: str,
    runs_per_fold: int = 5,
    master_seed: int = 0,
    train_cfg: TrainConfig = TrainConfig(),
    adam_cfg: AdamConfig = AdamConfig(),
    global_pool: str = "avg",
    progress=None,
) -> dict:
    """Full LOSO evaluation; returns a JSON-ready report dictionary."""
    if model_kind not in MODEL_KINDS:
        raise ConfigError(f"model must be one of {MODEL_KINDS}, got {model_kind!r}")
    if runs_per_fold < 1:
        raise ConfigError(f"runs_per_fold must be >= 1, got {runs_per_fold}")
    say = progress or (lambda msg: None)

    windows = dataset.windows_array()
    labels = dataset.labels_array()
    subject_ids = dataset.subjects_array()
    folds = loso_folds(dataset.subjects())

    fold_reports = []
    pooled_confusion = np.zeros((6, 6), dtype=np.int64)
    for fold_index, fold in enumerate(folds):
        test_mask = subject_ids == fold["test"]
        val_mask = subject_ids == fold["val"]
        train_mask = ~(test_mask | val_mask)
        stats = norm_stats_of_array(windows[train_mask])
        normed = normalize_batch(windows, stats)

        run_reports = []
        fold_confusion = np.zeros((6, 6), dtype=np.int64)
        for run_index in range(runs_per_fold):
            init_seed, shuffle_seed = _run_seeds(master_seed, fold_index, run_index)
            if model_kind in CNN_KINDS:
                x = normed[:, :, :, None]
                network = build_network(model_kind, seed=init_seed, global_pool=global_pool)
                cfg = TrainConfig(
                    min_epochs=train_cfg.min_epochs,
                    patience=train_cfg.patience,
                    batch_size=train_cfg.batch_size,
                    seed=shuffle_seed,
                    max_epochs=train_cfg.max_epochs,
                )
                network, history = train(
                    network,
                    x[train_mask],
                    labels[train_mask],
                    x[val_mask],
                    labels[val_mask],
                    cfg,
                    adam_cfg,
                )
                predicted = _predict_cnn(network, x[test_mask])
                extra = {
                    "best_epoch": history["best_epoch"],
                    "stopped_epoch": history["stopped_epoch"],
                    "best_val_error": history["best_val_error"],
                }
            else:
                feats = extract_features_batch(normed)
                pipeline = train_baseline(
                    model_kind,
                    feats[train_mask],
                    labels[train_mask],
                    stats,
                    seed=init_seed,
                )
                predicted = pipeline.predict_features(feats[test_mask])
                extra = {}
            run_metrics = confusion_and_f1(labels[test_mask], predicted)
            fold_confusion += run_metrics.confusion
            run_reports.append(
                {"run": run_index, "accuracy": run_metrics.accuracy, **extra}
            )
            say(
                f"fold {fold_index + 1}/{len(folds)} (test subject {fold['test']}) "
                f"run {run_index + 1}/{runs_per_fold}: "
                f"accuracy {run_metrics.accuracy:.4f}"
            )
        accs = [r["accuracy"] for r in run_reports]
        fold_reports.append(
            {
                "fold": fold_index + 1,
                "test_subject": fold["test"],
                "val_subject": fold["val"],
                "train_subjects": fold["train"],
                "test_size": int(test_mask.sum()),
                "runs": run_reports,
                "accuracy_mean": float(np.mean(accs)),
                "accuracy_std": float(np.std(accs)),
                "confusion": fold_confusion.tolist(),
            }
        )
        pooled_confusion += fold_confusion

    pooled = metrics_from_confusion(pooled_confusion)
    fold_means = [f["accuracy_mean"] for f in fold_reports]
    return {
        "model": model_kind,
        "runs_per_fold": runs_per_fold,
        "master_seed": master_seed,
        "n_folds": len(folds),
        "per_fold": fold_reports,
        "mean_accuracy": float(np.mean(fold_means)),
        "fold_accuracy_spread": {
            "min": float(np.min(fold_means)),
            "max": float(np.max(fold_means)),
            "per_fold": fold_means,
        },
        "pooled_accuracy": pooled.accuracy,
        "per_class_f1": {
            GestureLabel(c).code: float(pooled.f1[c]) for c in range(6)
        },
        "confusion": pooled_confusion.tolist(),
        "fp_per_hour": project_false_positives(pooled),
    }


def evaluate_gesture_model(model: GestureModel, dataset: Dataset) -> Metrics:
    """Score a trained CNN artifact on a labeled dataset."""
    predicted = model.predict_batch(dataset.windows_array())
    return confusion_and_f1(dataset.labels_array(), predicted)
