"""Deterministic parametric generator for desk-scale labeled gesture datasets.

Each gesture class gets a hand-designed waveform template spanning the full
5 s window: an arm lift followed by back-and-forth swinging for evacuation,
a raise-and-hold for stop, a slow outward-downward sweep for all-clear, a
two-tone Lissajous for the figure-eight fire signal, and a fast wrist-roll
(gyro-x dominant) for distress. The Random class mixes everyday-motion
motifs: smoothed noise, slow ramps, low-amplitude oscillation and isolated
bumps.

Determinism: every window draws from its own PCG64 stream keyed by
(master_seed, subject_id, label, index), so generation order and threading
cannot change the output. Left-handed subjects mirror the sign of the two
x-axis channels (ax, gx) after noise is added, making left/right pairs with
the same seed exact negations on those channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Dataset,
    GestureLabel,
    LabeledWindow,
    SCHEMA_VERSION,
    WINDOW_SAMPLES,
)
from .errors import ConfigError

DEFAULT_NOISE_STD = 0.5
GRAVITY = 9.8

# Hand assignment pattern per subject (cycled for more than 7 subjects).
HAND_PATTERN = ("L", "R", "R", "R", "R", "L", "L")

# Exact per-subject class counts [Rnd, RS, RE, EC, F, DS] for the 7-subject
# reference distribution; row sums 601, 600, 570, 600, 623, 609, 600.
TABLE3_COUNTS = (
    (100, 100, 100, 100, 100, 101),
    (100, 100, 100, 100, 100, 100),
    (100, 71, 101, 99, 99, 100),
    (100, 100, 100, 100, 100, 100),
    (100, 100, 101, 101, 106, 115),
    (100, 103, 102, 102, 101, 101),
    (100, 100, 100, 100, 100, 100),
)

_T = np.arange(WINDOW_SAMPLES) / 50.0  # seconds, 0.0 .. 4.98

AX, AY, AZ, GX, GY, GZ = range(6)


@dataclass(frozen=True)
class SubjectProfile:
    """Per-subject rendering knobs; same profile + seed => identical samples."""

    subject_id: int
    hand: str
    amplitude_scale: float = 1.0
    tempo_scale: float = 1.0
    noise_std: float = DEFAULT_NOISE_STD


def _bump(t: np.ndarray, start: float, duration: float) -> np.ndarray:
    """Half-sine bump rising at `start` and gone `duration` later."""
    u = np.clip((t - start) / duration, 0.0, 1.0)
    return np.sin(np.pi * u) * ((t >= start) & (t <= start + duration))


def _plateau(t: np.ndarray, start: float, rise: float) -> np.ndarray:
    """Smooth 0->1 rise beginning at `start`, then holding at 1."""
    u = np.clip((t - start) / rise, 0.0, 1.0)
    return u * u * (3 - 2 * u)


def _smooth_noise(rng: np.random.Generator, amplitude: float, width: int) -> np.ndarray:
    raw = rng.standard_normal(WINDOW_SAMPLES + width)
    kernel = np.ones(width) / width
    return amplitude * np.convolve(raw, kernel, mode="valid")[:WINDOW_SAMPLES]


def _evacuation(out, rng, amp, tempo):
    # arm lift in the first ~1.5 s, then a 1 Hz back-and-forth swing
    lift_end = 1.5 / tempo
    phase = rng.uniform(0, 2 * np.pi)
    f = 1.0 * tempo
    swing = (_T >= lift_end) * np.sin(2 * np.pi * f * (_T - lift_end) + phase)
    out[AZ] += 3.0 * amp * _bump(_T, 0.0, lift_end)
    out[AX] += 4.0 * amp * swing
    out[AY] += 1.0 * amp * (_T >= lift_end) * np.cos(
        2 * np.pi * f * (_T - lift_end) + phase
    )
    out[GY] += 1.8 * amp * swing


def _stop(out, rng, amp, tempo):
    # raise both arms overhead, then hold the X with a slow sway
    rise = 1.0 / tempo
    start = rng.uniform(0.0, 0.15)
    hold = _plateau(_T, start, rise)
    out[AZ] += 4.5 * amp * hold
    out[AX] += 0.9 * amp * hold * np.sin(
        2 * np.pi * 0.3 * tempo * _T + rng.uniform(0, 2 * np.pi)
    )
    out[AY] += 0.4 * amp * hold * np.sin(
        2 * np.pi * 0.45 * tempo * _T + rng.uniform(0, 2 * np.pi)
    )
    out[GZ] += 0.5 * amp * _bump(_T, start, rise)


def _contained(out, rng, amp, tempo):
    # slow sweep outwards and down until the wrists cross
    start = 0.5 / tempo + rng.uniform(-0.1, 0.1)
    sweep = 3.0 / tempo
    out[AZ] -= 3.0 * amp * _bump(_T, start, sweep)
    out[AY] += 2.2 * amp * np.sin(
        2 * np.pi * 0.25 * tempo * _T + rng.uniform(0, 2 * np.pi)
    )
    out[AX] += 1.2 * amp * _bump(_T, start + sweep * 0.6, sweep * 0.5)
    out[GX] += 0.6 * amp * np.sin(2 * np.pi * 0.5 * tempo * _T)


def _fire(out, rng, amp, tempo):
    # figure-of-eight: 1:2 Lissajous between forward and vertical axes
    f = 0.8 * tempo
    phase = rng.uniform(0, 2 * np.pi)
    out[AX] += 3.5 * amp * np.sin(2 * np.pi * f * _T + phase)
    out[AZ] += 2.5 * amp * np.sin(2 * np.pi * 2 * f * _T + 2 * phase + 0.9)
    out[AY] += 0.8 * amp * np.cos(2 * np.pi * f * _T + phase)
    out[GZ] += 2.2 * amp * np.sin(2 * np.pi * f * _T + phase + 0.7)
    out[GY] += 0.9 * amp * np.sin(2 * np.pi * 2 * f * _T + phase)


def _distress(out, rng, amp, tempo):
    # rapid wrist rotation: dominant energy on the gyro roll axis
    f = 3.5 * tempo
    phase = rng.uniform(0, 2 * np.pi)
    roll = np.sin(2 * np.pi * f * _T + phase)
    out[GX] += 5.0 * amp * roll + 1.0 * amp * np.sin(2 * np.pi * 2 * f * _T + phase)
    out[AX] += 0.8 * amp * roll
    out[AY] += 0.6 * amp * np.cos(2 * np.pi * f * _T + phase)


def _random_motion(out, rng, amp, tempo):
    # everyday motion: a random mix of drifts, smoothed noise and weak wiggles
    n_motifs = rng.integers(1, 4)
    for _ in range(n_motifs):
        motif = rng.integers(0, 4)
        channel = rng.integers(0, 6)
        if motif == 0:
            width = int(rng.integers(5, 26))
            out[channel] += _smooth_noise(rng, amp * rng.uniform(0.3, 1.2), width)
        elif motif == 1:
            slope = rng.uniform(-0.5, 0.5) * amp
            out[channel] += slope * _T
        elif motif == 2:
            f = rng.uniform(0.3, 3.0) * tempo
            out[channel] += (
                amp * rng.uniform(0.2, 1.2) * np.sin(2 * np.pi * f * _T + rng.uniform(0, 2 * np.pi))
            )
        else:
            start = rng.uniform(0.0, 4.0)
            out[channel] += amp * rng.uniform(0.5, 1.5) * _bump(
                _T, start, rng.uniform(0.3, 1.0)
            )


_TEMPLATES = {
    GestureLabel.RECOMMENDED_EVACUATION: _evacuation,
    GestureLabel.RECOMMENDED_STOP: _stop,
    GestureLabel.EMERGENCY_CONTAINED: _contained,
    GestureLabel.FIRE: _fire,
    GestureLabel.DISTRESS: _distress,
    GestureLabel.RANDOM: _random_motion,
}


def gen_window(
    label: GestureLabel, profile: SubjectProfile, rng: np.random.Generator
) -> np.ndarray:
    """Render one (6, 250) window for a label under a subject profile."""
    out = np.zeros((6, WINDOW_SAMPLES))
    out[AZ] += GRAVITY
    amp = profile.amplitude_scale * rng.uniform(0.92, 1.08)
    _TEMPLATES[label](out, rng, amp, profile.tempo_scale)
    if profile.noise_std > 0:
        out += rng.normal(0.0, profile.noise_std, size=out.shape)
    if profile.hand == "L":
        out[AX] = -out[AX]
        out[GX] = -out[GX]
    return out


def _window_rng(master_seed: int, subject_id: int, label: GestureLabel, index: int):
    seq = np.random.SeedSequence(master_seed, spawn_key=(subject_id, int(label), index))
    return np.random.Generator(np.random.PCG64(seq))


def make_profile(
    subject_id: int, master_seed: int, noise_std: float = DEFAULT_NOISE_STD
) -> SubjectProfile:
    """Draw a subject's amplitude/tempo scales from its own seeded stream."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(subject_id,))
    rng = np.random.Generator(np.random.PCG64(seq))
    return SubjectProfile(
        subject_id=subject_id,
        hand=HAND_PATTERN[(subject_id - 1) % len(HAND_PATTERN)],
        amplitude_scale=rng.uniform(0.7, 1.3),
        tempo_scale=rng.uniform(0.8, 1.25),
        noise_std=noise_std,
    )


def gen_dataset(
    n_subjects: int = 7,
    per_class: int = 100,
    master_seed: int = 0,
    noise_std: float = DEFAULT_NOISE_STD,
    table3: bool = False,
) -> Dataset:
    """Generate a labeled dataset for n_subjects virtual subjects.

    Default mode gives every subject per_class windows of each class;
    table3 mode reproduces the exact 7-subject reference counts instead.
    """
    if n_subjects < 2:
        raise ConfigError(f"need at least 2 subjects, got {n_subjects}")
    if table3 and n_subjects != len(TABLE3_COUNTS):
        raise ConfigError("table3 mode is defined for exactly 7 subjects")
    samples = []
    for subject_id in range(1, n_subjects + 1):
        profile = make_profile(subject_id, master_seed, noise_std)
        for label in GestureLabel:
            count = (
                TABLE3_COUNTS[subject_id - 1][int(label)] if table3 else per_class
            )
            for index in range(count):
                rng = _window_rng(master_seed, subject_id, label, index)
                samples.append(
                    LabeledWindow(
                        window=gen_window(label, profile, rng),
                        label=label,
                        subject_id=subject_id,
                        hand=profile.hand,
                    )
                )
    metadata = {
        "generator": "armmorse-synth",
        "schema_version": SCHEMA_VERSION,
        "rng": "PCG64",
        "seed": master_seed,
        "n_subjects": n_subjects,
        "per_class": None if table3 else per_class,
        "table3": table3,
        "noise_std": noise_std,
    }
    return Dataset(samples=samples, metadata=metadata)
