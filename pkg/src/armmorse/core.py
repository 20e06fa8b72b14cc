"""Shared domain types: gesture labels, IMU windows, windowing and normalization.

A classifier input window is a plain float64 ndarray of shape (6, 250):
six channels in the fixed order [ax, ay, az, gx, gy, gz] (accelerometer in
m/s^2, gyroscope in rad/s) covering 5 seconds at a nominal 50 Hz. The fixed
channel order is load-bearing: the dataset CSV schema and the binary model
file both depend on it, so it must never change.

Dataset CSV schema (UTF-8, one header row):

    subject,hand,label,ax000,...,ax249,ay000,...,gz249

3 metadata columns followed by 6*250 = 1500 value columns, channel-major.
``hand`` is ``L`` or ``R``; ``label`` is one of the six short codes below;
values are written as shortest round-trip decimals so a save/load cycle is
value-exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import (
    DegenerateChannelError,
    NonMonotonicError,
    ParseError,
    SchemaMismatchError,
    TooShortError,
)

CHANNELS = ("ax", "ay", "az", "gx", "gy", "gz")
N_CHANNELS = 6
WINDOW_SAMPLES = 250
SAMPLE_RATE_HZ = 50
SAMPLE_SPACING_MS = 20
WINDOW_MS = 5000
STRIDE_MS = 1000
# 250 samples spaced 20 ms apart span 249*20 ms between first and last
# timestamp; a stream must cover at least that to fill the grid.
GRID_SPAN_MS = (WINDOW_SAMPLES - 1) * SAMPLE_SPACING_MS

LEFT = "L"
RIGHT = "R"
HANDS = (LEFT, RIGHT)

SCHEMA_VERSION = 1


class GestureLabel(enum.IntEnum):
    """The six classes: five intentional signals plus the Random rest class."""

    RANDOM = 0
    RECOMMENDED_STOP = 1
    RECOMMENDED_EVACUATION = 2
    EMERGENCY_CONTAINED = 3
    FIRE = 4
    DISTRESS = 5

    @property
    def code(self) -> str:
        return _LABEL_TO_CODE[self]

    @classmethod
    def parse(cls, text: str) -> "GestureLabel":
        try:
            return _CODE_TO_LABEL[text]
        except KeyError:
            raise ParseError(f"unknown gesture label {text!r}") from None


_LABEL_TO_CODE = {
    GestureLabel.RANDOM: "Rnd",
    GestureLabel.RECOMMENDED_STOP: "RS",
    GestureLabel.RECOMMENDED_EVACUATION: "RE",
    GestureLabel.EMERGENCY_CONTAINED: "EC",
    GestureLabel.FIRE: "F",
    GestureLabel.DISTRESS: "DS",
}
_CODE_TO_LABEL = {code: label for label, code in _LABEL_TO_CODE.items()}

GESTURES_OF_INTEREST = tuple(l for l in GestureLabel if l is not GestureLabel.RANDOM)


@dataclass(frozen=True)
class ImuSample:
    """One timestamped motion sample; t_ms must not decrease within a stream."""

    t_ms: float
    ax: float
    ay: float
    az: float
    gx: float
    gy: float
    gz: float

    def values(self) -> tuple[float, ...]:
        return (self.ax, self.ay, self.az, self.gx, self.gy, self.gz)


def check_window(window: np.ndarray) -> np.ndarray:
    """Validate a (6, 250) finite float window, returning it unchanged."""
    window = np.asarray(window, dtype=np.float64)
    if window.shape != (N_CHANNELS, WINDOW_SAMPLES):
        raise ParseError(
            f"window shape {window.shape} != ({N_CHANNELS}, {WINDOW_SAMPLES})"
        )
    if not np.all(np.isfinite(window)):
        raise ParseError("window contains non-finite values")
    return window


@dataclass(frozen=True)
class LabeledWindow:
    window: np.ndarray  # (6, 250) float64
    label: GestureLabel
    subject_id: int
    hand: str  # "L" or "R"

    def __post_init__(self):
        if self.hand not in HANDS:
            raise ParseError(f"hand must be one of {HANDS}, got {self.hand!r}")
        if self.subject_id < 1:
            raise ParseError(f"subject_id must be >= 1, got {self.subject_id}")


@dataclass(frozen=True)
class NormStats:
    """Per-channel z-score statistics; std is the population (1/N) deviation."""

    mean: np.ndarray  # (6,)
    std: np.ndarray  # (6,)


@dataclass
class Dataset:
    samples: list[LabeledWindow]
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    def subjects(self) -> list[int]:
        return sorted({s.subject_id for s in self.samples})

    def windows_array(self) -> np.ndarray:
        """Stack all windows into one (N, 6, 250) array."""
        return np.stack([s.window for s in self.samples])

    def labels_array(self) -> np.ndarray:
        return np.array([int(s.label) for s in self.samples], dtype=np.int64)

    def subjects_array(self) -> np.ndarray:
        return np.array([s.subject_id for s in self.samples], dtype=np.int64)


def _stream_arrays(stream: Sequence[ImuSample]) -> tuple[np.ndarray, np.ndarray]:
    """Split a sample stream into (times, values) arrays, checking monotonicity."""
    if len(stream) < 2:
        raise TooShortError(f"need at least 2 samples, got {len(stream)}")
    t = np.array([s.t_ms for s in stream], dtype=np.float64)
    if np.any(np.diff(t) < 0):
        raise NonMonotonicError("timestamps decrease within the stream")
    if np.any(t < 0):
        raise NonMonotonicError("timestamps must be non-negative")
    v = np.array([s.values() for s in stream], dtype=np.float64).T  # (6, n)
    return t, v


def _resample_at(t: np.ndarray, v: np.ndarray, end_ms: float) -> np.ndarray:
    """Interpolate each channel onto the 250-point grid ending at end_ms.

    Grid points are exactly 20 ms apart with the last one at end_ms, so a
    stream already sampled on that grid passes through unchanged. Outside
    the sampled range values clamp to the nearest sample (np.interp edge
    behaviour).
    """
    grid = end_ms - SAMPLE_SPACING_MS * np.arange(WINDOW_SAMPLES - 1, -1, -1.0)
    out = np.empty((N_CHANNELS, WINDOW_SAMPLES), dtype=np.float64)
    for c in range(N_CHANNELS):
        out[c] = np.interp(grid, t, v[c])
    return out


def resample_to_window(stream: Sequence[ImuSample]) -> np.ndarray:
    """Resample the most recent 5 s of a stream onto the fixed (6, 250) grid.

    Raises TooShortError when the stream spans less than the 4980 ms the
    grid needs (249 gaps of 20 ms), NonMonotonicError on decreasing
    timestamps.
    """
    t, v = _stream_arrays(stream)
    span = t[-1] - t[0]
    if span < GRID_SPAN_MS:
        raise TooShortError(f"stream spans {span:.0f} ms < {GRID_SPAN_MS} ms")
    return _resample_at(t, v, float(t[-1]))


def sliding_windows(
    stream: Sequence[ImuSample],
) -> list[tuple[float, np.ndarray]]:
    """Emit (emission_time_ms, window) pairs at a 1 s stride.

    The first window is emitted 5 s after the first sample and covers the
    trailing 5 s; a stream shorter than 5 s yields nothing. Emission times
    are relative to the stream start, matching once-per-second streaming
    recognition.
    """
    if len(stream) < 2:
        return []
    t, v = _stream_arrays(stream)
    out = []
    emit = t[0] + WINDOW_MS
    while emit <= t[-1]:
        lo = np.searchsorted(t, emit - WINDOW_MS, side="left")
        hi = np.searchsorted(t, emit, side="right")
        out.append((float(emit), _resample_at(t[lo:hi], v[:, lo:hi], float(emit))))
        emit += STRIDE_MS
    return out


def compute_norm_stats(dataset: Dataset) -> NormStats:
    """Pool per-channel mean/std over all samples and timesteps.

    Population (1/N) standard deviation. Raises DegenerateChannelError when
    any channel is constant to within 1e-12, since dividing by such a std
    would blow up downstream.
    """
    if len(dataset) == 0:
        raise DegenerateChannelError("cannot compute stats of an empty dataset")
    return norm_stats_of_array(dataset.windows_array())


def norm_stats_of_array(windows: np.ndarray) -> NormStats:
    """compute_norm_stats for an already-stacked (N, 6, 250) array."""
    mean = windows.mean(axis=(0, 2))
    std = windows.std(axis=(0, 2))  # ddof=0: population definition
    bad = np.flatnonzero(std < 1e-12)
    if bad.size:
        names = ", ".join(CHANNELS[c] for c in bad)
        raise DegenerateChannelError(f"channel(s) {names} have std < 1e-12")
    return NormStats(mean=mean, std=std)


def normalize(window: np.ndarray, stats: NormStats) -> np.ndarray:
    """Per-channel z-score: (x - mean[c]) / std[c]."""
    return (window - stats.mean[:, None]) / stats.std[:, None]


def normalize_batch(windows: np.ndarray, stats: NormStats) -> np.ndarray:
    """Vectorized normalize over an (N, 6, 250) stack."""
    return (windows - stats.mean[None, :, None]) / stats.std[None, :, None]


def csv_header() -> list[str]:
    cols = ["subject", "hand", "label"]
    for ch in CHANNELS:
        cols.extend(f"{ch}{i:03d}" for i in range(WINDOW_SAMPLES))
    return cols


def save_dataset(dataset: Dataset, path) -> None:
    """Write the dataset CSV; floats use shortest round-trip decimals."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(csv_header()) + "\n")
        for s in dataset.samples:
            values = s.window.reshape(-1)
            fh.write(f"{s.subject_id},{s.hand},{s.label.code},")
            fh.write(",".join([repr(float(x)) for x in values]))
            fh.write("\n")


def load_dataset(path) -> Dataset:
    """Read a dataset CSV written by save_dataset.

    Raises SchemaMismatchError on a wrong header or column count and
    ParseError (with a 1-based line number) on bad values; an empty file or
    a file with no data rows is a ParseError.
    """
    expected = csv_header()
    try:
        frame = pd.read_csv(path, header=0, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise ParseError("empty file") from None
    except pd.errors.ParserError as exc:
        raise SchemaMismatchError(f"malformed CSV: {exc}") from None
    if list(frame.columns) != expected:
        raise SchemaMismatchError(
            f"header has {len(frame.columns)} columns, expected {len(expected)}"
        )
    if len(frame) == 0:
        raise ParseError("file has a header but no data rows")

    samples = []
    value_cols = frame.iloc[:, 3:].to_numpy()
    for i in range(len(frame)):
        line = i + 2  # 1-based, after the header row
        try:
            subject = int(frame.iat[i, 0])
        except ValueError:
            raise ParseError(f"bad subject {frame.iat[i, 0]!r}", line=line) from None
        hand = frame.iat[i, 1]
        if hand not in HANDS:
            raise ParseError(f"bad hand {hand!r}", line=line)
        label = _CODE_TO_LABEL.get(frame.iat[i, 2])
        if label is None:
            raise ParseError(f"bad label {frame.iat[i, 2]!r}", line=line)
        try:
            window = value_cols[i].astype(np.float64).reshape(
                N_CHANNELS, WINDOW_SAMPLES
            )
        except ValueError:
            raise ParseError("unparseable sample value", line=line) from None
        if not np.all(np.isfinite(window)):
            raise ParseError("non-finite sample value", line=line)
        samples.append(
            LabeledWindow(window=window, label=label, subject_id=subject, hand=hand)
        )
    return Dataset(samples=samples, metadata={"schema_version": SCHEMA_VERSION})
