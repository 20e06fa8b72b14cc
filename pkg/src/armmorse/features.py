"""Time-domain feature extraction: 7 statistics per channel, 42 in total.

Per channel, in order: mean, min, max, median, population std, skewness and
excess kurtosis. Constant channels (variance below 1e-12) define skewness
and kurtosis as 0 instead of NaN so classifiers never see non-finite input.
"""

from __future__ import annotations

import numpy as np

from .core import CHANNELS, Dataset, N_CHANNELS

STAT_NAMES = ("mean", "min", "max", "median", "std", "skew", "kurt")
N_FEATURES = N_CHANNELS * len(STAT_NAMES)

FEATURE_NAMES = tuple(
    f"{ch}_{stat}" for ch in CHANNELS for stat in STAT_NAMES
)


def extract_features(window: np.ndarray, excess_kurtosis: bool = True) -> np.ndarray:
    """Compute the 42-value feature vector of one (6, 250) window.

    excess_kurtosis=False switches to the raw fourth-moment convention
    (normal -> 3 instead of 0).
    """
    return extract_features_batch(window[None], excess_kurtosis)[0]


def extract_features_batch(
    windows: np.ndarray, excess_kurtosis: bool = True
) -> np.ndarray:
    """Vectorized extraction over an (N, 6, 250) stack -> (N, 42)."""
    windows = np.asarray(windows, dtype=np.float64)
    n = windows.shape[0]
    mean = windows.mean(axis=2)
    lo = windows.min(axis=2)
    hi = windows.max(axis=2)
    median = np.median(windows, axis=2)
    centered = windows - mean[:, :, None]
    m2 = np.mean(centered**2, axis=2)
    m3 = np.mean(centered**3, axis=2)
    m4 = np.mean(centered**4, axis=2)
    std = np.sqrt(m2)
    ok = m2 >= 1e-12
    skew = np.zeros_like(m2)
    kurt = np.zeros_like(m2)
    np.divide(m3, m2**1.5, out=skew, where=ok)
    np.divide(m4, m2**2, out=kurt, where=ok)
    if excess_kurtosis:
        kurt = np.where(ok, kurt - 3.0, 0.0)
    else:
        kurt = np.where(ok, kurt, 0.0)
    stats = np.stack([mean, lo, hi, median, std, skew, kurt], axis=2)
    return stats.reshape(n, N_FEATURES)


def features_of_dataset(
    dataset: Dataset, excess_kurtosis: bool = True
) -> np.ndarray:
    return extract_features_batch(dataset.windows_array(), excess_kurtosis)


def save_features_csv(path, dataset: Dataset, matrix: np.ndarray) -> None:
    """Write `subject,hand,label,f00..f41` rows matching the dataset order."""
    header = ["subject", "hand", "label"] + [f"f{i:02d}" for i in range(N_FEATURES)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for sample, row in zip(dataset.samples, matrix):
            fh.write(f"{sample.subject_id},{sample.hand},{sample.label.code},")
            fh.write(",".join([repr(float(x)) for x in row]))
            fh.write("\n")
