"""Functional forward/backward tensor operations.

Layout conventions: activations are channels-last (N, H, W, C) float64, so
a window enters as (N, 6, 250, 1); conv weights are (c_out, c_in, kh, kw)
and dense weights (n_out, n_in), matching the model file layout. Channels-
last makes the im2col patch copy a sequential read and lets the matmul
output land directly in activation order with no transpose.

Convolutions use valid padding and stride 1, realized as im2col + matmul.
Pooling windows never overlap (stride equals the window); trailing rows or
columns that do not fill a window are dropped. Backward passes accept the
forward's cached column matrix where one exists.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatchError


def _check_conv_shapes(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> None:
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeMismatchError(
            f"conv expects 4-d tensors, got {x.shape} and {w.shape}"
        )
    if x.shape[3] != w.shape[1]:
        raise ShapeMismatchError(
            f"input channels {x.shape[3]} != kernel channels {w.shape[1]}"
        )
    if b.shape != (w.shape[0],):
        raise ShapeMismatchError(f"bias shape {b.shape} != ({w.shape[0]},)")
    if w.shape[2] > x.shape[1] or w.shape[3] > x.shape[2]:
        raise ShapeMismatchError(
            f"kernel {w.shape[2:]} larger than input {x.shape[1:3]}"
        )


def _w_mat(w: np.ndarray) -> np.ndarray:
    """Kernel (O, C, kh, kw) as a (kh*kw*C, O) matmul operand."""
    o, c, kh, kw = w.shape
    return np.ascontiguousarray(w.transpose(2, 3, 1, 0).reshape(kh * kw * c, o))


def im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """All stride-1 valid patches as rows: (N*Ho*Wo, kh*kw*C).

    Patch elements are ordered (u, v, c), which is contiguous memory in
    channels-last layout, so this copy streams.
    """
    n, h, wd, c = x.shape
    ho, wo = h - kh + 1, wd - kw + 1
    if kh == 1:
        view = np.lib.stride_tricks.sliding_window_view(x, kw, axis=2)
        # (N, H, Wo, C, kw) -> patch order (v, c)
        cols = view.transpose(0, 1, 2, 4, 3)
    else:
        view = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
        # (N, Ho, Wo, C, kh, kw) -> patch order (u, v, c)
        cols = view.transpose(0, 1, 2, 4, 5, 3)
    return np.ascontiguousarray(cols).reshape(n * ho * wo, kh * kw * c)


def conv2d_forward(
    x: np.ndarray, w: np.ndarray, b: np.ndarray, return_cols: bool = False
):
    """Valid-padding stride-1 cross-correlation plus bias.

    y[n,i,j,o] = b[o] + sum_{c,u,v} x[n,i+u,j+v,c] * w[o,c,u,v]
    """
    _check_conv_shapes(x, w, b)
    n, h, wd, c = x.shape
    o, _, kh, kw = w.shape
    ho, wo = h - kh + 1, wd - kw + 1
    cols = im2col(x, kh, kw)
    y = cols @ _w_mat(w)
    y += b
    y = y.reshape(n, ho, wo, o)
    return (y, cols) if return_cols else y


def conv2d_backward(
    x: np.ndarray,
    w: np.ndarray,
    dy: np.ndarray,
    cols: np.ndarray | None = None,
    need_dx: bool = True,
):
    """Gradients of conv2d_forward; returns (dx, dw, db), dx None if skipped."""
    if x.ndim != 4 or w.ndim != 4 or x.shape[3] != w.shape[1]:
        raise ShapeMismatchError(f"conv backward: x {x.shape} vs w {w.shape}")
    n, h, wd, c = x.shape
    o, _, kh, kw = w.shape
    ho, wo = h - kh + 1, wd - kw + 1
    if dy.shape != (n, ho, wo, o):
        raise ShapeMismatchError(f"dy shape {dy.shape} != {(n, ho, wo, o)}")
    if cols is None:
        cols = im2col(x, kh, kw)
    dy_mat = dy.reshape(n * ho * wo, o)
    db = dy_mat.sum(axis=0)
    dw_mat = cols.T @ dy_mat  # (kh*kw*C, O)
    dw = np.ascontiguousarray(dw_mat.reshape(kh, kw, c, o).transpose(3, 2, 0, 1))
    dx = None
    if need_dx:
        dcols = (dy_mat @ _w_mat(w).T).reshape(n, ho, wo, kh, kw, c)
        dx = np.zeros(x.shape)
        for u in range(kh):
            for v in range(kw):
                dx[:, u : u + ho, v : v + wo, :] += dcols[:, :, :, u, v, :]
    return dx, dw, db


def _pool_geometry(x: np.ndarray, ph: int, pw: int) -> tuple[int, int]:
    n, h, wd, c = x.shape
    ho, wo = h // ph, wd // pw
    if ho == 0 or wo == 0:
        raise ShapeMismatchError(
            f"pool window ({ph},{pw}) larger than input {x.shape[1:3]}"
        )
    return ho, wo


def _pool_cols(x: np.ndarray, ph: int, pw: int, ho: int, wo: int) -> np.ndarray:
    """Non-overlapping patches as (N*Ho*Wo, ph*pw*C); a pure reshape when ph=1."""
    n, h, wd, c = x.shape
    xt = x[:, : ho * ph, : wo * pw, :]
    if ph == 1:
        return xt.reshape(n * ho * wo, pw * c)
    xr = xt.reshape(n, ho, ph, wo, pw, c).transpose(0, 1, 3, 2, 4, 5)
    return np.ascontiguousarray(xr).reshape(n * ho * wo, ph * pw * c)


def strided_conv_forward(
    x: np.ndarray, w: np.ndarray, b: np.ndarray, return_cols: bool = False
):
    """Convolution whose stride equals its kernel (the learned pooling op).

    Patches never overlap; trailing rows/columns that do not fill a window
    are truncated, as for max pooling.
    """
    _check_conv_shapes(x, w, b)
    n, h, wd, c = x.shape
    o, _, ph, pw = w.shape
    ho, wo = _pool_geometry(x, ph, pw)
    cols = _pool_cols(x, ph, pw, ho, wo)
    y = cols @ _w_mat(w)
    y += b
    y = y.reshape(n, ho, wo, o)
    return (y, cols) if return_cols else y


def strided_conv_backward(
    x: np.ndarray,
    w: np.ndarray,
    dy: np.ndarray,
    cols: np.ndarray | None = None,
    need_dx: bool = True,
):
    n, h, wd, c = x.shape
    o, _, ph, pw = w.shape
    ho, wo = _pool_geometry(x, ph, pw)
    if dy.shape != (n, ho, wo, o):
        raise ShapeMismatchError(f"dy shape {dy.shape} != {(n, ho, wo, o)}")
    if cols is None:
        cols = _pool_cols(x, ph, pw, ho, wo)
    dy_mat = dy.reshape(n * ho * wo, o)
    db = dy_mat.sum(axis=0)
    dw_mat = cols.T @ dy_mat
    dw = np.ascontiguousarray(dw_mat.reshape(ph, pw, c, o).transpose(3, 2, 0, 1))
    dx = None
    if need_dx:
        dcols = dy_mat @ _w_mat(w).T
        dx = np.zeros(x.shape)
        if ph == 1:
            dx[:, : ho * ph, : wo * pw, :] = dcols.reshape(n, ho, wo * pw, c)
        else:
            dpatches = dcols.reshape(n, ho, wo, ph, pw, c).transpose(
                0, 1, 3, 2, 4, 5
            )
            dx[:, : ho * ph, : wo * pw, :] = dpatches.reshape(
                n, ho * ph, wo * pw, c
            )
    return dx, dw, db


def averaging_pool_kernel(ph: int, pw: int, channels: int) -> np.ndarray:
    """The strided-conv weights that reproduce average pooling exactly."""
    w = np.zeros((channels, channels, ph, pw))
    for c in range(channels):
        w[c, c] = 1.0 / (ph * pw)
    return w


def maxpool_forward(x: np.ndarray, ph: int, pw: int):
    """Non-overlapping max pooling; returns (y, cache) for the backward pass."""
    if x.ndim != 4:
        raise ShapeMismatchError(f"pool expects a 4-d tensor, got {x.shape}")
    n, h, wd, c = x.shape
    ho, wo = _pool_geometry(x, ph, pw)
    if ph == 1:
        xr = x[:, :, : wo * pw, :].reshape(n, ho, wo, pw, c)
        # argmax keeps the first occurrence, which defines the tie rule
        idx = xr.argmax(axis=3)
        y = np.take_along_axis(xr, idx[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    else:
        xr = (
            x[:, : ho * ph, : wo * pw, :]
            .reshape(n, ho, ph, wo, pw, c)
            .transpose(0, 1, 3, 5, 2, 4)
            .reshape(n, ho, wo, c, ph * pw)
        )
        idx = xr.argmax(axis=4)
        y = np.take_along_axis(xr, idx[..., None], axis=4)[..., 0]
        y = np.ascontiguousarray(y)
    return y, (x.shape, ph, pw, idx)


def maxpool_backward(cache, dy: np.ndarray) -> np.ndarray:
    x_shape, ph, pw, idx = cache
    n, h, wd, c = x_shape
    ho, wo = h // ph, wd // pw
    if dy.shape != (n, ho, wo, c):
        raise ShapeMismatchError(f"dy shape {dy.shape} != {(n, ho, wo, c)}")
    dx = np.zeros(x_shape)
    if ph == 1:
        scattered = np.zeros((n, ho, wo, pw, c))
        np.put_along_axis(
            scattered, idx[:, :, :, None, :], dy[:, :, :, None, :], axis=3
        )
        dx[:, :, : wo * pw, :] = scattered.reshape(n, ho, wo * pw, c)
    else:
        scattered = np.zeros((n, ho, wo, c, ph * pw))
        np.put_along_axis(scattered, idx[..., None], dy[..., None], axis=4)
        dx[:, : ho * ph, : wo * pw, :] = (
            scattered.reshape(n, ho, wo, c, ph, pw)
            .transpose(0, 1, 4, 2, 5, 3)
            .reshape(n, ho * ph, wo * pw, c)
        )
    return dx


def global_avg_pool_forward(x: np.ndarray) -> np.ndarray:
    """Mean over both spatial dims: (N, H, W, C) -> (N, C)."""
    if x.ndim != 4:
        raise ShapeMismatchError(f"global pool expects a 4-d tensor, got {x.shape}")
    return x.mean(axis=(1, 2))


def global_avg_pool_backward(x_shape: tuple, dy: np.ndarray) -> np.ndarray:
    n, h, wd, c = x_shape
    if dy.shape != (n, c):
        raise ShapeMismatchError(f"dy shape {dy.shape} != {(n, c)}")
    return np.broadcast_to(dy[:, None, None, :] / (h * wd), x_shape).copy()


def global_max_pool_forward(x: np.ndarray):
    if x.ndim != 4:
        raise ShapeMismatchError(f"global pool expects a 4-d tensor, got {x.shape}")
    n, h, wd, c = x.shape
    flat = x.reshape(n, h * wd, c)
    idx = flat.argmax(axis=1)
    y = np.take_along_axis(flat, idx[:, None, :], axis=1)[:, 0, :]
    return y, (x.shape, idx)


def global_max_pool_backward(cache, dy: np.ndarray) -> np.ndarray:
    x_shape, idx = cache
    n, h, wd, c = x_shape
    flat = np.zeros((n, h * wd, c))
    np.put_along_axis(flat, idx[:, None, :], dy[:, None, :], axis=1)
    return flat.reshape(x_shape)


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Affine map y = x @ w.T + b with w shaped (n_out, n_in)."""
    if x.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeMismatchError(f"dense input {x.shape} vs weight {w.shape}")
    return x @ w.T + b


def dense_backward(x: np.ndarray, w: np.ndarray, dy: np.ndarray):
    if dy.shape != (x.shape[0], w.shape[0]):
        raise ShapeMismatchError(f"dy shape {dy.shape} != {(x.shape[0], w.shape[0])}")
    return dy @ w, dy.T @ x, dy.sum(axis=0)


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    return dy * (x > 0.0)


def dropout_forward(
    x: np.ndarray, p: float, rng: np.random.Generator, training: bool
):
    """Inverted dropout: survivors scale by 1/(1-p); identity in eval mode."""
    if not training or p == 0.0:
        return x, None
    mask = rng.random(x.shape) >= p
    return x * (mask / (1.0 - p)), mask


def dropout_backward(dy: np.ndarray, mask, p: float) -> np.ndarray:
    if mask is None:
        return dy
    return dy * (mask / (1.0 - p))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, numerically stable; rows sum to 1."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch and its gradient w.r.t. logits.

    The per-sample gradient is probs - onehot; dividing by the batch size
    makes the returned gradient exactly d(mean loss)/d(logits).
    """
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeMismatchError(
            f"logits {logits.shape} incompatible with labels {labels.shape}"
        )
    n = logits.shape[0]
    probs = softmax(logits)
    picked = probs[np.arange(n), labels]
    loss = float(-np.log(np.maximum(picked, 1e-300)).mean())
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    return loss, dlogits
