"""Minibatch training loop with best-on-validation checkpointing.

Early stopping tracks the validation error rate (1 - accuracy): training
runs at least min_epochs and stops once the best validation error has not
strictly improved for `patience` consecutive epochs (or at max_epochs).
The parameters from the best validation epoch are restored before
returning, so the returned network never ends worse than any checkpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DivergenceError
from .nn.model import Network
from .nn.ops import softmax_cross_entropy
from .optim import AdamConfig, AdamState, adam_step

EVAL_BATCH = 512


@dataclass(frozen=True)
class TrainConfig:
    """Desk-scale defaults; paper-scale runs use min_epochs=2000, patience=200."""

    min_epochs: int = 100
    patience: int = 25
    batch_size: int = 32
    seed: int = 0
    max_epochs: int = 1000
    # also run an eval-mode pass over the train set each epoch (slower;
    # the running minibatch metrics are enough for fold reports)
    track_train_eval: bool = False

    def __post_init__(self):
        if self.patience < 1:
            raise ConfigError("patience must be >= 1; 0 would never stop improving")
        if self.min_epochs < 1:
            raise ConfigError(f"min_epochs must be >= 1, got {self.min_epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < self.min_epochs:
            raise ConfigError(
                f"max_epochs {self.max_epochs} < min_epochs {self.min_epochs}"
            )


PAPER_TRAIN = TrainConfig(min_epochs=2000, patience=200, max_epochs=10000)


def evaluate(network: Network, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Eval-mode (loss, accuracy) over a labeled set, batched."""
    total_loss = 0.0
    correct = 0
    for start in range(0, x.shape[0], EVAL_BATCH):
        xb = x[start : start + EVAL_BATCH]
        yb = y[start : start + EVAL_BATCH]
        logits = network.forward_logits(xb)
        loss, _ = softmax_cross_entropy(logits, yb)
        total_loss += loss * xb.shape[0]
        correct += int(np.sum(logits.argmax(axis=1) == yb))
    n = x.shape[0]
    return total_loss / n, correct / n


def train(
    network: Network,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    train_cfg: TrainConfig = TrainConfig(),
    adam_cfg: AdamConfig = AdamConfig(),
) -> tuple[Network, dict]:
    """Train in place and return (network-at-best-checkpoint, history).

    Inputs are already-normalized (N, 1, 6, 250) windows with integer
    labels; train and validation sets must be disjoint. History lists are
    per-epoch: train loss/accuracy are running means over the training-mode
    minibatches, train_acc_eval and the val metrics are exact eval-mode
    passes. Raises DivergenceError (with the epoch) if the loss leaves the
    finite range.
    """
    rng = np.random.default_rng(train_cfg.seed)
    params = [arr for _, _, arr in network.param_items()]
    state = AdamState(params)
    n = x_train.shape[0]

    history: dict = {
        "train_loss": [],
        "train_acc": [],
        "train_acc_eval": [],
        "val_loss": [],
        "val_acc": [],
    }
    best_error = np.inf
    best_epoch = 0
    best_params = [p.copy() for p in params]

    epoch = 0
    while True:
        epoch += 1
        order = rng.permutation(n)
        running_loss = 0.0
        running_correct = 0
        for start in range(0, n, train_cfg.batch_size):
            idx = order[start : start + train_cfg.batch_size]
            xb = x_train[idx]
            yb = y_train[idx]
            logits = network.forward_logits(xb, training=True, rng=rng)
            loss, dlogits = softmax_cross_entropy(logits, yb)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite training loss at epoch {epoch}", epoch=epoch
                )
            network.backward(dlogits)
            grads = [arr for _, _, arr in network.grad_items()]
            adam_step(params, grads, state, adam_cfg)
            running_loss += loss * xb.shape[0]
            running_correct += int(np.sum(logits.argmax(axis=1) == yb))

        val_loss, val_acc = evaluate(network, x_val, y_val)
        if not np.isfinite(val_loss):
            raise DivergenceError(
                f"non-finite validation loss at epoch {epoch}", epoch=epoch
            )
        history["train_loss"].append(running_loss / n)
        history["train_acc"].append(running_correct / n)
        if train_cfg.track_train_eval:
            history["train_acc_eval"].append(
                evaluate(network, x_train, y_train)[1]
            )
        history["val_loss"].append(val_loss)
        history["val_acc"].append(val_acc)

        val_error = 1.0 - val_acc
        if val_error < best_error:
            best_error = val_error
            best_epoch = epoch
            best_params = [p.copy() for p in params]

        if epoch >= train_cfg.max_epochs:
            break
        if epoch >= train_cfg.min_epochs and (epoch - best_epoch) >= train_cfg.patience:
            break

    for p, best in zip(params, best_params):
        p[...] = best
    history["best_epoch"] = best_epoch
    history["best_val_error"] = float(best_error)
    history["stopped_epoch"] = epoch
    return network, history
