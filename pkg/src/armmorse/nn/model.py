"""Layer chain and the two CNN variants.

Activations are channels-last: one window enters as (N, 6, 250, 1) with
the six IMU channels as the spatial height and a single input channel.
Layer 3's kernel spans all 6 sensor rows, collapsing that axis, which is
what forces this orientation. The derived shape chain (excluding batch) is
(6,240,12) -> (6,60,12) -> (6,50,24) -> (6,25,24) -> (1,15,32) -> 32 -> 6.

Both variants share the trunk
    Conv(1x11, 1->12) ReLU Pool(1,4) Drop(.5)
    Conv(1x11, 12->24) ReLU Pool(1,2) Drop(.5)
    Conv(6x11, 24->32) ReLU GlobalPool Drop(.5)
    Dense(32->6) Softmax
with "Pool" = max pooling for cnn-max and a learned strided convolution
(kernel = stride = window, channels preserved, with bias) for cnn-lp. The
chain is shape-checked at construction time, before any training.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import GestureLabel, NormStats, normalize
from ..errors import ConfigError, ShapeMismatchError
from . import ops

VARIANTS = ("cnn-max", "cnn-lp")
INPUT_SHAPE = (6, 250, 1)  # (sensor rows, timesteps, channels), batch excluded


class Layer:
    """Base layer: forward caches whatever backward needs."""

    has_params = False

    def out_shape(self, in_shape: tuple) -> tuple:
        raise NotImplementedError

    def forward(self, x, training=False, rng=None):
        raise NotImplementedError

    def backward(self, dy, need_dx=True):
        raise NotImplementedError

    def init_params(self, rng) -> None:
        pass

    def param_items(self) -> list[tuple[str, np.ndarray]]:
        return []

    def grad_items(self) -> list[tuple[str, np.ndarray]]:
        return []

    def spec(self) -> dict:
        raise NotImplementedError


def _he_uniform(rng, shape, fan_in):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Conv2d(Layer):
    has_params = True

    def __init__(self, c_in, c_out, kh, kw):
        self.c_in, self.c_out, self.kh, self.kw = c_in, c_out, kh, kw
        self.w = np.zeros((c_out, c_in, kh, kw))
        self.b = np.zeros(c_out)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._x = None
        self._cols = None

    def init_params(self, rng):
        self.w = _he_uniform(rng, self.w.shape, self.c_in * self.kh * self.kw)
        self.b = np.zeros(self.c_out)

    def out_shape(self, in_shape):
        h, w, c = in_shape
        if c != self.c_in:
            raise ShapeMismatchError(f"conv expects {self.c_in} channels, got {c}")
        if self.kh > h or self.kw > w:
            raise ShapeMismatchError(
                f"kernel ({self.kh},{self.kw}) larger than input ({h},{w})"
            )
        return (h - self.kh + 1, w - self.kw + 1, self.c_out)

    def forward(self, x, training=False, rng=None):
        if training:
            y, self._cols = ops.conv2d_forward(x, self.w, self.b, return_cols=True)
            self._x = x
            return y
        return ops.conv2d_forward(x, self.w, self.b)

    def backward(self, dy, need_dx=True):
        dx, self.dw, self.db = ops.conv2d_backward(
            self._x, self.w, dy, cols=self._cols, need_dx=need_dx
        )
        self._x = self._cols = None
        return dx

    def param_items(self):
        return [("w", self.w), ("b", self.b)]

    def grad_items(self):
        return [("w", self.dw), ("b", self.db)]

    def spec(self):
        return {
            "kind": "conv",
            "c_in": self.c_in,
            "c_out": self.c_out,
            "kh": self.kh,
            "kw": self.kw,
        }


class MaxPool(Layer):
    def __init__(self, ph, pw):
        self.ph, self.pw = ph, pw
        self._cache = None

    def out_shape(self, in_shape):
        h, w, c = in_shape
        if h // self.ph == 0 or w // self.pw == 0:
            raise ShapeMismatchError(
                f"pool ({self.ph},{self.pw}) larger than input ({h},{w})"
            )
        return (h // self.ph, w // self.pw, c)

    def forward(self, x, training=False, rng=None):
        y, cache = ops.maxpool_forward(x, self.ph, self.pw)
        if training:
            self._cache = cache
        return y

    def backward(self, dy, need_dx=True):
        dx = ops.maxpool_backward(self._cache, dy)
        self._cache = None
        return dx

    def spec(self):
        return {"kind": "maxpool", "ph": self.ph, "pw": self.pw}


class LatentPool(Layer):
    """Pooling as a learned strided conv: kernel = stride, channels kept."""

    has_params = True

    def __init__(self, ph, pw, channels):
        self.ph, self.pw, self.channels = ph, pw, channels
        self.w = np.zeros((channels, channels, ph, pw))
        self.b = np.zeros(channels)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._x = None
        self._cols = None

    def init_params(self, rng):
        self.w = _he_uniform(rng, self.w.shape, self.channels * self.ph * self.pw)
        self.b = np.zeros(self.channels)

    def out_shape(self, in_shape):
        h, w, c = in_shape
        if c != self.channels:
            raise ShapeMismatchError(
                f"latent pool expects {self.channels} channels, got {c}"
            )
        if h // self.ph == 0 or w // self.pw == 0:
            raise ShapeMismatchError(
                f"pool ({self.ph},{self.pw}) larger than input ({h},{w})"
            )
        return (h // self.ph, w // self.pw, c)

    def forward(self, x, training=False, rng=None):
        if training:
            y, self._cols = ops.strided_conv_forward(
                x, self.w, self.b, return_cols=True
            )
            self._x = x
            return y
        return ops.strided_conv_forward(x, self.w, self.b)

    def backward(self, dy, need_dx=True):
        dx, self.dw, self.db = ops.strided_conv_backward(
            self._x, self.w, dy, cols=self._cols, need_dx=need_dx
        )
        self._x = self._cols = None
        return dx

    def param_items(self):
        return [("w", self.w), ("b", self.b)]

    def grad_items(self):
        return [("w", self.dw), ("b", self.db)]

    def spec(self):
        return {
            "kind": "latentpool",
            "ph": self.ph,
            "pw": self.pw,
            "channels": self.channels,
        }


class GlobalAvgPool(Layer):
    def __init__(self):
        self._x_shape = None

    def out_shape(self, in_shape):
        return (in_shape[2],)

    def forward(self, x, training=False, rng=None):
        if training:
            self._x_shape = x.shape
        return ops.global_avg_pool_forward(x)

    def backward(self, dy, need_dx=True):
        return ops.global_avg_pool_backward(self._x_shape, dy)

    def spec(self):
        return {"kind": "globalavgpool"}


class GlobalMaxPool(Layer):
    def __init__(self):
        self._cache = None

    def out_shape(self, in_shape):
        return (in_shape[2],)

    def forward(self, x, training=False, rng=None):
        y, cache = ops.global_max_pool_forward(x)
        if training:
            self._cache = cache
        return y

    def backward(self, dy, need_dx=True):
        return ops.global_max_pool_backward(self._cache, dy)

    def spec(self):
        return {"kind": "globalmaxpool"}


class Dense(Layer):
    has_params = True

    def __init__(self, n_in, n_out):
        self.n_in, self.n_out = n_in, n_out
        self.w = np.zeros((n_out, n_in))
        self.b = np.zeros(n_out)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._x = None

    def init_params(self, rng):
        self.w = _he_uniform(rng, self.w.shape, self.n_in)
        self.b = np.zeros(self.n_out)

    def out_shape(self, in_shape):
        if in_shape != (self.n_in,):
            raise ShapeMismatchError(f"dense expects ({self.n_in},), got {in_shape}")
        return (self.n_out,)

    def forward(self, x, training=False, rng=None):
        if training:
            self._x = x
        return ops.dense_forward(x, self.w, self.b)

    def backward(self, dy, need_dx=True):
        dx, self.dw, self.db = ops.dense_backward(self._x, self.w, dy)
        self._x = None
        return dx if need_dx else None

    def param_items(self):
        return [("w", self.w), ("b", self.b)]

    def grad_items(self):
        return [("w", self.dw), ("b", self.db)]

    def spec(self):
        return {"kind": "dense", "n_in": self.n_in, "n_out": self.n_out}


class ReLU(Layer):
    def __init__(self):
        self._x = None

    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x, training=False, rng=None):
        if training:
            self._x = x
        return ops.relu_forward(x)

    def backward(self, dy, need_dx=True):
        dx = ops.relu_backward(self._x, dy)
        self._x = None
        return dx

    def spec(self):
        return {"kind": "relu"}


class Dropout(Layer):
    def __init__(self, p):
        if not 0.0 <= p < 1.0:
            raise ConfigError(f"dropout probability must be in [0,1), got {p}")
        self.p = p
        self._mask = None

    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x, training=False, rng=None):
        if training and rng is None:
            raise ConfigError("dropout in training mode needs an rng")
        y, self._mask = ops.dropout_forward(x, self.p, rng, training)
        return y

    def backward(self, dy, need_dx=True):
        dx = ops.dropout_backward(dy, self._mask, self.p)
        self._mask = None
        return dx

    def spec(self):
        return {"kind": "dropout", "p": self.p}


class Softmax(Layer):
    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x, training=False, rng=None):
        return ops.softmax(x)

    def backward(self, dy, need_dx=True):
        raise ShapeMismatchError(
            "softmax backward is fused into the cross-entropy loss"
        )

    def spec(self):
        return {"kind": "softmax"}


_LAYER_BUILDERS = {
    "conv": lambda s: Conv2d(s["c_in"], s["c_out"], s["kh"], s["kw"]),
    "maxpool": lambda s: MaxPool(s["ph"], s["pw"]),
    "latentpool": lambda s: LatentPool(s["ph"], s["pw"], s["channels"]),
    "globalavgpool": lambda s: GlobalAvgPool(),
    "globalmaxpool": lambda s: GlobalMaxPool(),
    "dense": lambda s: Dense(s["n_in"], s["n_out"]),
    "relu": lambda s: ReLU(),
    "dropout": lambda s: Dropout(s["p"]),
    "softmax": lambda s: Softmax(),
}


def layer_from_spec(spec: dict) -> Layer:
    try:
        return _LAYER_BUILDERS[spec["kind"]](spec)
    except KeyError:
        raise ShapeMismatchError(f"unknown layer kind {spec.get('kind')!r}") from None


class Network:
    """An ordered layer chain ending in Softmax, shape-checked up front."""

    def __init__(self, layers: list[Layer], input_shape: tuple = INPUT_SHAPE):
        if not layers or not isinstance(layers[-1], Softmax):
            raise ShapeMismatchError("a network must end with a softmax layer")
        self.layers = layers
        self.input_shape = tuple(input_shape)
        self.shape_chain = self._check_shapes()

    def _check_shapes(self) -> list[tuple]:
        chain = [self.input_shape]
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.out_shape(shape)
            chain.append(shape)
        return chain

    def _check_input(self, x: np.ndarray) -> None:
        if x.shape[1:] != self.input_shape:
            raise ShapeMismatchError(
                f"input {x.shape} != (N,) + {self.input_shape}"
            )

    def forward(self, x: np.ndarray, training=False, rng=None) -> np.ndarray:
        """Run the whole chain; returns class probabilities summing to 1."""
        self._check_input(x)
        for layer in self.layers:
            x = layer.forward(x, training=training, rng=rng)
        return x

    def forward_logits(self, x: np.ndarray, training=False, rng=None) -> np.ndarray:
        """Run up to (not including) the softmax head, for loss computation."""
        self._check_input(x)
        for layer in self.layers[:-1]:
            x = layer.forward(x, training=training, rng=rng)
        return x

    def backward(self, dlogits: np.ndarray) -> None:
        """Backpropagate the loss gradient through the body layers.

        The first layer skips its input gradient; nothing consumes it.
        """
        grad = dlogits
        body = self.layers[:-1]
        for i in range(len(body) - 1, -1, -1):
            grad = body[i].backward(grad, need_dx=(i > 0))

    def init_params(self, rng: np.random.Generator) -> None:
        for layer in self.layers:
            layer.init_params(rng)

    def param_items(self) -> list[tuple[int, str, np.ndarray]]:
        out = []
        for i, layer in enumerate(self.layers):
            for name, arr in layer.param_items():
                out.append((i, name, arr))
        return out

    def grad_items(self) -> list[tuple[int, str, np.ndarray]]:
        out = []
        for i, layer in enumerate(self.layers):
            for name, arr in layer.grad_items():
                out.append((i, name, arr))
        return out

    def param_count(self) -> int:
        return sum(arr.size for _, _, arr in self.param_items())

    def activations(self, x: np.ndarray) -> list[np.ndarray]:
        """Eval-mode output of every layer, index-aligned with self.layers."""
        self._check_input(x)
        out = []
        for layer in self.layers:
            x = layer.forward(x, training=False)
            out.append(x)
        return out

    def layer_specs(self) -> list[dict]:
        return [layer.spec() for layer in self.layers]


def build_network(
    variant: str, seed: int = 0, global_pool: str = "avg"
) -> Network:
    """Construct and initialize one of the two CNN variants."""
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if global_pool not in ("avg", "max"):
        raise ConfigError(f"global_pool must be avg or max, got {global_pool!r}")
    if variant == "cnn-max":
        pool1: Layer = MaxPool(1, 4)
        pool2: Layer = MaxPool(1, 2)
    else:
        pool1 = LatentPool(1, 4, 12)
        pool2 = LatentPool(1, 2, 24)
    gpool: Layer = GlobalAvgPool() if global_pool == "avg" else GlobalMaxPool()
    layers: list[Layer] = [
        Conv2d(1, 12, 1, 11),
        ReLU(),
        pool1,
        Dropout(0.5),
        Conv2d(12, 24, 1, 11),
        ReLU(),
        pool2,
        Dropout(0.5),
        Conv2d(24, 32, 6, 11),
        ReLU(),
        gpool,
        Dropout(0.5),
        Dense(32, 6),
        Softmax(),
    ]
    net = Network(layers)
    net.init_params(np.random.default_rng(seed))
    return net


@dataclass
class GestureModel:
    """The complete inference artifact: network, stats and bookkeeping."""

    network: Network
    norm_stats: NormStats
    variant: str
    init_seed: int
    label_map: dict[int, str] = field(
        default_factory=lambda: {int(l): l.code for l in GestureLabel}
    )
    training_summary: dict = field(default_factory=dict)

    def predict_window(
        self, window: np.ndarray, threshold: float = 0.0
    ) -> tuple[GestureLabel, float]:
        """Classify one raw (unnormalized) window."""
        x = normalize(window, self.norm_stats)
        probs = self.network.forward(x[None, :, :, None])[0]
        return predict_from_probs(probs, threshold)

    def predict_batch(self, windows: np.ndarray) -> np.ndarray:
        """Argmax labels for a raw (N, 6, 250) stack, batched for speed."""
        from ..core import normalize_batch

        out = np.empty(windows.shape[0], dtype=np.int64)
        for start in range(0, windows.shape[0], 256):
            chunk = normalize_batch(windows[start : start + 256], self.norm_stats)
            probs = self.network.forward(chunk[:, :, :, None])
            out[start : start + 256] = probs.argmax(axis=1)
        return out


def predict_from_probs(
    probs: np.ndarray, threshold: float = 0.0
) -> tuple[GestureLabel, float]:
    """Argmax with the low-confidence fallback to Random.

    Ties pick the smallest label code. A non-Random argmax whose
    probability is below the threshold is reported as Random instead; the
    returned confidence is always the argmax probability.
    """
    if not 0.0 <= threshold < 1.0:
        raise ConfigError(f"threshold must be in [0,1), got {threshold}")
    label = GestureLabel(int(np.argmax(probs)))
    confidence = float(probs[int(label)])
    if label is not GestureLabel.RANDOM and confidence < threshold:
        return GestureLabel.RANDOM, confidence
    return label, confidence


def activation_rows(
    network: Network, x: np.ndarray, layer_index: int, sensor_row: int = 0
) -> np.ndarray:
    """Per-channel time series of one layer's output for a single window.

    Conv-stage activations (C, H, W) pick one sensor row; vector
    activations come back as (C, 1). Rows are output channels either way.
    """
    acts = network.activations(x)
    if not 0 <= layer_index < len(acts):
        raise ConfigError(
            f"layer index {layer_index} out of range 0..{len(acts) - 1}"
        )
    act = acts[layer_index][0]  # drop batch
    if act.ndim == 3:  # (H, W, C): one series of length W per output channel
        row = min(sensor_row, act.shape[0] - 1)
        return np.ascontiguousarray(act[row].T)
    return act.reshape(-1, 1)
