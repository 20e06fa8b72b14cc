"""Classical classifiers over the 42-dim feature vectors.

All four take (N, 42) float matrices and integer labels 0..5. Logistic
regression (multinomial softmax) and kNN expect standardized features;
trees are split-point based and need no scaling. Every trainer is
deterministic under its seed. Baseline artifacts serialize to JSON,
bundling the channel normalization and feature standardization needed to
run them end to end on raw windows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import GestureLabel, NormStats, normalize_batch
from .errors import ConfigError, ModelFormatError, ShapeMismatchError
from .features import extract_features_batch
from .nn.ops import softmax, softmax_cross_entropy
from .optim import AdamConfig, AdamState, adam_step

N_CLASSES = len(GestureLabel)
BASELINE_FORMAT_VERSION = 1

DEFAULT_K = 5
DEFAULT_TREES = 100
DEFAULT_MAX_DEPTH = 12
DEFAULT_MIN_LEAF = 2
# ceil(sqrt(42)) features examined per split in a forest
DEFAULT_FEATURES_PER_SPLIT = 7


# ---------------------------------------------------------------- logistic


@dataclass
class LrModel:
    w: np.ndarray  # (6, n_features)
    b: np.ndarray  # (6,)


def lr_train(
    x: np.ndarray,
    y: np.ndarray,
    adam_cfg: AdamConfig = AdamConfig(),
    epochs: int = 300,
    batch_size: int = 64,
    seed: int = 0,
) -> LrModel:
    """Softmax regression trained with Adam on cross-entropy."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = x.shape
    model = LrModel(w=np.zeros((N_CLASSES, d)), b=np.zeros(N_CLASSES))
    state = AdamState([model.w, model.b])
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            xb, yb = x[idx], y[idx]
            logits = xb @ model.w.T + model.b
            _, dlogits = softmax_cross_entropy(logits, yb)
            adam_step(
                [model.w, model.b],
                [dlogits.T @ xb, dlogits.sum(axis=0)],
                state,
                adam_cfg,
            )
    return model


def lr_predict(model: LrModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Returns (labels, probabilities); zero weights give uniform rows."""
    probs = softmax(np.asarray(x) @ model.w.T + model.b)
    return probs.argmax(axis=1), probs


def lr_loss_and_grads(model: LrModel, x: np.ndarray, y: np.ndarray):
    """Full-batch loss and parameter gradients, exposed for gradient checks."""
    logits = x @ model.w.T + model.b
    loss, dlogits = softmax_cross_entropy(logits, y)
    return loss, dlogits.T @ x, dlogits.sum(axis=0)


# --------------------------------------------------------------------- knn


@dataclass
class KnnModel:
    train_x: np.ndarray
    train_y: np.ndarray
    k: int = DEFAULT_K

    def __post_init__(self):
        if not 1 <= self.k <= len(self.train_x):
            raise ConfigError(
                f"k must be in [1, {len(self.train_x)}], got {self.k}"
            )


def knn_predict(model: KnnModel, x: np.ndarray) -> np.ndarray:
    """Majority vote among the k nearest neighbours by Euclidean distance.

    Ties: larger vote count wins, then smaller summed distance, then
    smaller label code. Equidistant neighbours rank by training index.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.train_x.shape[1]:
        raise ShapeMismatchError(
            f"query dim {x.shape[1]} != training dim {model.train_x.shape[1]}"
        )
    # squared distances via the expansion |a-b|^2 = |a|^2 - 2ab + |b|^2
    d2 = (
        np.sum(x**2, axis=1)[:, None]
        - 2.0 * x @ model.train_x.T
        + np.sum(model.train_x**2, axis=1)[None, :]
    )
    out = np.empty(x.shape[0], dtype=np.int64)
    for i in range(x.shape[0]):
        neighbours = np.argsort(d2[i], kind="stable")[: model.k]
        dists = np.sqrt(np.maximum(d2[i][neighbours], 0.0))
        labels = model.train_y[neighbours]
        best = None
        for lab in np.unique(labels):
            mask = labels == lab
            key = (-int(mask.sum()), float(dists[mask].sum()), int(lab))
            if best is None or key < best[0]:
                best = (key, int(lab))
        out[i] = best[1]
    return out


# ------------------------------------------------------------------- trees


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def _best_split(x, y, indices, feature_ids, min_leaf):
    """Exhaustive Gini scan over candidate thresholds of the given features.

    Returns (feature, threshold, weighted_gini) or None. Thresholds are
    midpoints between adjacent distinct values; left means value <= threshold.
    """
    n = indices.size
    best = None
    for f in feature_ids:
        vals = x[indices, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = y[indices][order]
        onehot = np.zeros((n, N_CLASSES))
        onehot[np.arange(n), sy] = 1.0
        left_counts = np.cumsum(onehot, axis=0)  # counts up to and incl. i
        total = left_counts[-1]
        boundaries = np.flatnonzero(sv[:-1] != sv[1:])
        boundaries = boundaries[
            (boundaries + 1 >= min_leaf) & (n - boundaries - 1 >= min_leaf)
        ]
        if boundaries.size == 0:
            continue
        nl = (boundaries + 1).astype(np.float64)
        nr = n - nl
        lc = left_counts[boundaries]
        rc = total[None, :] - lc
        gini_l = 1.0 - np.sum((lc / nl[:, None]) ** 2, axis=1)
        gini_r = 1.0 - np.sum((rc / nr[:, None]) ** 2, axis=1)
        weighted = (nl * gini_l + nr * gini_r) / n
        j = int(np.argmin(weighted))
        cand = (float(weighted[j]), f, float((sv[boundaries[j]] + sv[boundaries[j] + 1]) / 2))
        if best is None or cand[0] < best[0]:
            best = cand
    if best is None:
        return None
    return best[1], best[2], best[0]


def _grow_tree(x, y, indices, depth, max_depth, min_leaf, n_features, rng):
    counts = np.bincount(y[indices], minlength=N_CLASSES)
    node_gini = _gini(counts)
    if (
        depth >= max_depth
        or node_gini == 0.0
        or indices.size < 2 * min_leaf
    ):
        return {"leaf": counts.tolist()}
    if n_features is None or n_features >= x.shape[1]:
        feature_ids = range(x.shape[1])
    else:
        feature_ids = sorted(rng.choice(x.shape[1], size=n_features, replace=False))
    split = _best_split(x, y, indices, feature_ids, min_leaf)
    if split is None:
        return {"leaf": counts.tolist()}
    feature, threshold, weighted = split
    if weighted >= node_gini - 1e-12:  # must strictly reduce impurity
        return {"leaf": counts.tolist()}
    mask = x[indices, feature] <= threshold
    left = _grow_tree(
        x, y, indices[mask], depth + 1, max_depth, min_leaf, n_features, rng
    )
    right = _grow_tree(
        x, y, indices[~mask], depth + 1, max_depth, min_leaf, n_features, rng
    )
    return {"feature": int(feature), "threshold": threshold, "left": left, "right": right}


@dataclass
class TreeModel:
    root: dict
    max_depth: int = DEFAULT_MAX_DEPTH
    min_samples_leaf: int = DEFAULT_MIN_LEAF


def dt_train(
    x: np.ndarray,
    y: np.ndarray,
    max_depth: int = DEFAULT_MAX_DEPTH,
    min_samples_leaf: int = DEFAULT_MIN_LEAF,
) -> TreeModel:
    """CART with Gini splitting over all features (no randomness needed)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    root = _grow_tree(
        x, y, np.arange(len(y)), 0, max_depth, min_samples_leaf, None, None
    )
    return TreeModel(root=root, max_depth=max_depth, min_samples_leaf=min_samples_leaf)


def _tree_predict_one(node: dict, row: np.ndarray) -> int:
    while "leaf" not in node:
        node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
    counts = node["leaf"]
    best = max(counts)
    return counts.index(best)  # ties pick the smallest label code


def dt_predict(model: TreeModel, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return np.array([_tree_predict_one(model.root, row) for row in x], dtype=np.int64)


@dataclass
class ForestModel:
    trees: list[dict]
    max_depth: int = DEFAULT_MAX_DEPTH
    min_samples_leaf: int = DEFAULT_MIN_LEAF


def rf_train(
    x: np.ndarray,
    y: np.ndarray,
    n_trees: int = DEFAULT_TREES,
    max_depth: int = DEFAULT_MAX_DEPTH,
    min_samples_leaf: int = DEFAULT_MIN_LEAF,
    features_per_split: int | None = DEFAULT_FEATURES_PER_SPLIT,
    bootstrap: bool = True,
    seed: int = 0,
) -> ForestModel:
    """Bootstrapped trees with per-split feature subsampling, seeded per tree."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    trees = []
    for t in range(n_trees):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(t,)))
        )
        if bootstrap:
            indices = rng.integers(0, len(y), size=len(y))
        else:
            indices = np.arange(len(y))
        trees.append(
            _grow_tree(x, y, indices, 0, max_depth, min_samples_leaf, features_per_split, rng)
        )
    return ForestModel(trees=trees, max_depth=max_depth, min_samples_leaf=min_samples_leaf)


def rf_predict(model: ForestModel, x: np.ndarray) -> np.ndarray:
    """Majority vote across trees; vote ties pick the smallest label code."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    votes = np.zeros((x.shape[0], N_CLASSES), dtype=np.int64)
    for tree in model.trees:
        for i, row in enumerate(x):
            votes[i, _tree_predict_one(tree, row)] += 1
    return votes.argmax(axis=1)


# ---------------------------------------------------------------- pipeline


@dataclass
class FeatureStandardizer:
    """Per-feature z-scoring with train-split statistics."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "FeatureStandardizer":
        std = features.std(axis=0)
        return cls(mean=features.mean(axis=0), std=np.where(std < 1e-12, 1.0, std))

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) / self.std


BASELINE_KINDS = ("lr", "knn", "dt", "rf")


@dataclass
class BaselinePipeline:
    """End-to-end baseline: raw windows -> normalize -> features -> classify."""

    kind: str
    norm_stats: NormStats
    standardizer: FeatureStandardizer | None
    model: object
    excess_kurtosis: bool = True

    def predict_windows(self, windows: np.ndarray) -> np.ndarray:
        feats = extract_features_batch(
            normalize_batch(windows, self.norm_stats), self.excess_kurtosis
        )
        return self.predict_features(feats)

    def predict_features(self, feats: np.ndarray) -> np.ndarray:
        if self.standardizer is not None:
            feats = self.standardizer.apply(feats)
        if self.kind == "lr":
            return lr_predict(self.model, feats)[0]
        if self.kind == "knn":
            return knn_predict(self.model, feats)
        if self.kind == "dt":
            return dt_predict(self.model, feats)
        if self.kind == "rf":
            return rf_predict(self.model, feats)
        raise ConfigError(f"unknown baseline kind {self.kind!r}")


def train_baseline(
    kind: str,
    features: np.ndarray,
    labels: np.ndarray,
    norm_stats: NormStats,
    seed: int = 0,
    k: int = DEFAULT_K,
    n_trees: int = DEFAULT_TREES,
    max_depth: int = DEFAULT_MAX_DEPTH,
    min_samples_leaf: int = DEFAULT_MIN_LEAF,
) -> BaselinePipeline:
    """Fit one baseline on already-extracted (unstandardized) features."""
    if kind not in BASELINE_KINDS:
        raise ConfigError(f"baseline kind must be one of {BASELINE_KINDS}")
    standardizer = None
    if kind in ("lr", "knn"):
        standardizer = FeatureStandardizer.fit(features)
        features = standardizer.apply(features)
    if kind == "lr":
        model: object = lr_train(features, labels, seed=seed)
    elif kind == "knn":
        model = KnnModel(train_x=features.copy(), train_y=labels.copy(), k=k)
    elif kind == "dt":
        model = dt_train(features, labels, max_depth, min_samples_leaf)
    else:
        model = rf_train(
            features, labels, n_trees, max_depth, min_samples_leaf, seed=seed
        )
    return BaselinePipeline(
        kind=kind, norm_stats=norm_stats, standardizer=standardizer, model=model
    )


def save_baseline(pipeline: BaselinePipeline, path) -> None:
    """Serialize to JSON: header fields plus kind-specific parameters."""
    payload: dict = {
        "format_version": BASELINE_FORMAT_VERSION,
        "kind": pipeline.kind,
        "excess_kurtosis": pipeline.excess_kurtosis,
        "norm_stats": {
            "mean": pipeline.norm_stats.mean.tolist(),
            "std": pipeline.norm_stats.std.tolist(),
        },
        "standardizer": None
        if pipeline.standardizer is None
        else {
            "mean": pipeline.standardizer.mean.tolist(),
            "std": pipeline.standardizer.std.tolist(),
        },
    }
    m = pipeline.model
    if pipeline.kind == "lr":
        payload["params"] = {"w": m.w.tolist(), "b": m.b.tolist()}
    elif pipeline.kind == "knn":
        payload["params"] = {
            "k": m.k,
            "train_x": m.train_x.tolist(),
            "train_y": m.train_y.tolist(),
        }
    elif pipeline.kind == "dt":
        payload["params"] = {
            "root": m.root,
            "max_depth": m.max_depth,
            "min_samples_leaf": m.min_samples_leaf,
        }
    else:
        payload["params"] = {
            "trees": m.trees,
            "max_depth": m.max_depth,
            "min_samples_leaf": m.min_samples_leaf,
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_baseline(path) -> BaselinePipeline:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"corrupt baseline file: {exc}") from None
    if payload.get("format_version") != BASELINE_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported baseline format_version {payload.get('format_version')!r}"
        )
    kind = payload["kind"]
    params = payload["params"]
    if kind == "lr":
        model: object = LrModel(
            w=np.array(params["w"]), b=np.array(params["b"])
        )
    elif kind == "knn":
        model = KnnModel(
            train_x=np.array(params["train_x"]),
            train_y=np.array(params["train_y"], dtype=np.int64),
            k=params["k"],
        )
    elif kind == "dt":
        model = TreeModel(
            root=params["root"],
            max_depth=params["max_depth"],
            min_samples_leaf=params["min_samples_leaf"],
        )
    elif kind == "rf":
        model = ForestModel(
            trees=params["trees"],
            max_depth=params["max_depth"],
            min_samples_leaf=params["min_samples_leaf"],
        )
    else:
        raise ModelFormatError(f"unknown baseline kind {kind!r}")
    standardizer = None
    if payload["standardizer"] is not None:
        standardizer = FeatureStandardizer(
            mean=np.array(payload["standardizer"]["mean"]),
            std=np.array(payload["standardizer"]["std"]),
        )
    return BaselinePipeline(
        kind=kind,
        norm_stats=NormStats(
            mean=np.array(payload["norm_stats"]["mean"]),
            std=np.array(payload["norm_stats"]["std"]),
        ),
        standardizer=standardizer,
        model=model,
        excess_kurtosis=payload.get("excess_kurtosis", True),
    )
