"""Adam optimizer over lists of parameter arrays, updated in place."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeMismatchError


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    decay: float = 0.0

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("beta1 and beta2 must lie in [0, 1)")
        if self.decay < 0:
            raise ConfigError(f"decay must be >= 0, got {self.decay}")


class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    def __init__(self, params: list[np.ndarray]):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    cfg: AdamConfig,
) -> None:
    """One bias-corrected Adam update; params are modified in place.

    theta -= lr_t * m_hat / (sqrt(v_hat) + eps), with the standard
    exponential moment updates. decay applies the 1/(1 + decay*steps)
    schedule, which at the default decay=0.0 leaves the rate untouched.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatchError("params/grads/state length mismatch")
    state.t += 1
    t = state.t
    lr_t = cfg.lr / (1.0 + cfg.decay * (t - 1))
    bc1 = 1.0 - cfg.beta1**t
    bc2 = 1.0 - cfg.beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeMismatchError(f"grad shape {g.shape} != param {p.shape}")
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * np.square(g)
        p -= lr_t * (m / bc1) / (np.sqrt(v / bc2) + cfg.epsilon)
