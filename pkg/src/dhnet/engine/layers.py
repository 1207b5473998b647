"""Hand-written forward/backward passes for the layer set the classifier needs.

Everything is functional: forward passes return (output, cache) and never
mutate their inputs; backward passes consume the cache and return input and
parameter gradients. Tensors are plain numpy arrays in NCHW layout for the
convolutional path and (N, D) for the dense path.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int):
    n, c, h, w = x.shape
    if pad > 0:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    hp = (h + 2 * pad - kh) // stride + 1
    wp = (w + 2 * pad - kw) // stride + 1
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    # (N, C, Hp, Wp, kh, kw) -> (N*Hp*Wp, C*kh*kw)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * hp * wp, c * kh * kw)
    return np.ascontiguousarray(cols), hp, wp


def _col2im(dcols: np.ndarray, x_shape, kh: int, kw: int, stride: int, pad: int):
    n, c, h, w = x_shape
    hp = (h + 2 * pad - kh) // stride + 1
    wp = (w + 2 * pad - kw) // stride + 1
    dxp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=dcols.dtype)
    d = dcols.reshape(n, hp, wp, c, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i : i + hp * stride : stride, j : j + wp * stride : stride] += d[
                :, :, i, j
            ]
    if pad > 0:
        return dxp[:, :, pad : pad + h, pad : pad + w]
    return dxp


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int = 1):
    """2D cross-correlation with 'same' zero padding (odd kernels only).

    x: (N, C, H, W); w: (F, C, kh, kw); b: (F,). At stride 1 the spatial
    dimensions are preserved.
    """
    f, c, kh, kw = w.shape
    if x.shape[1] != c:
        raise ValueError(f"channel mismatch: input {x.shape[1]}, weights {c}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError("only odd kernel sizes supported")
    pad = (kh - 1) // 2
    cols, hp, wp = _im2col(x, kh, kw, stride, pad)
    out = cols @ w.reshape(f, -1).T + b
    y = out.reshape(x.shape[0], hp, wp, f).transpose(0, 3, 1, 2)
    cache = (cols, x.shape, w, stride, pad)
    return y, cache


def conv2d_backward(dy: np.ndarray, cache):
    cols, x_shape, w, stride, pad = cache
    f, c, kh, kw = w.shape
    dout = dy.transpose(0, 2, 3, 1).reshape(-1, f)
    dw = (dout.T @ cols).reshape(w.shape)
    db = dout.sum(axis=0)
    dcols = dout @ w.reshape(f, -1)
    dx = _col2im(dcols, x_shape, kh, kw, stride, pad)
    return dx, dw, db


def batchnorm_forward(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    mode: str,
    momentum: float = 0.99,
    eps: float = 1e-3,
):
    """Per-channel batch normalization over an NCHW tensor.

    Train mode normalizes by batch statistics and returns updated running
    stats (inputs are not mutated); eval mode normalizes by the running
    stats. Returns (y, cache, new_running_mean, new_running_var).
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode}")
    axes = (0, 2, 3)
    if mode == "train":
        if x.shape[0] < 2:
            raise ValueError("batch normalization needs batch size >= 2 in train mode")
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        new_rmean = momentum * running_mean + (1.0 - momentum) * mean
        new_rvar = momentum * running_var + (1.0 - momentum) * var
    else:
        mean, var = running_mean, running_var
        new_rmean, new_rvar = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
    y = gamma[None, :, None, None] * xhat + beta[None, :, None, None]
    cache = (xhat, gamma, inv_std, mode, x.shape)
    return y, cache, new_rmean, new_rvar


def batchnorm_backward(dy: np.ndarray, cache):
    xhat, gamma, inv_std, mode, x_shape = cache
    axes = (0, 2, 3)
    dgamma = (dy * xhat).sum(axis=axes)
    dbeta = dy.sum(axis=axes)
    dxhat = dy * gamma[None, :, None, None]
    if mode == "eval":
        dx = dxhat * inv_std[None, :, None, None]
        return dx, dgamma, dbeta
    m = x_shape[0] * x_shape[2] * x_shape[3]
    s = inv_std[None, :, None, None]
    dx = (
        s
        / m
        * (
            m * dxhat
            - dxhat.sum(axis=axes)[None, :, None, None]
            - xhat * (dxhat * xhat).sum(axis=axes)[None, :, None, None]
        )
    )
    return dx, dgamma, dbeta


def relu_forward(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def relu_backward(dy: np.ndarray, mask: np.ndarray):
    return dy * mask


def maxpool_2x2_forward(x: np.ndarray):
    """Non-overlapping 2x2 max pooling, stride 2; odd trailing row/col dropped."""
    n, c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    if h2 == 0 or w2 == 0:
        raise ValueError(f"spatial dims too small to pool: {h}x{w}")
    xt = x[:, :, : h2 * 2, : w2 * 2]
    win = xt.reshape(n, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(
        n, c, h2, w2, 4
    )
    idx = win.argmax(axis=4)
    y = np.take_along_axis(win, idx[..., None], axis=4)[..., 0]
    return y, (idx, x.shape)


def maxpool_2x2_backward(dy: np.ndarray, cache):
    idx, x_shape = cache
    n, c, h, w = x_shape
    h2, w2 = h // 2, w // 2
    dwin = np.zeros((n, c, h2, w2, 4), dtype=dy.dtype)
    np.put_along_axis(dwin, idx[..., None], dy[..., None], axis=4)
    dx = np.zeros(x_shape, dtype=dy.dtype)
    dx[:, :, : h2 * 2, : w2 * 2] = (
        dwin.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(
            n, c, h2 * 2, w2 * 2
        )
    )
    return dx


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Affine map: x (N, D) @ w (D, M) + b (M,)."""
    if x.shape[1] != w.shape[0]:
        raise ValueError(f"dense shape mismatch: input {x.shape}, weights {w.shape}")
    return x @ w + b, (x, w)


def dense_backward(dy: np.ndarray, cache):
    x, w = cache
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def concat_forward(tensors: list[np.ndarray], axis: int = 1):
    sizes = [t.shape[axis] for t in tensors]
    return np.concatenate(tensors, axis=axis), (sizes, axis)


def concat_backward(dy: np.ndarray, cache):
    sizes, axis = cache
    return np.split(dy, np.cumsum(sizes)[:-1], axis=axis)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_xent_forward(logits: np.ndarray, labels: np.ndarray):
    """Mean two-class cross-entropy over a batch, log-sum-exp stabilized.

    Per sample: L = logsumexp(y) - y[label], the softmax cross-entropy with
    the true class picked by label in {0, 1}.
    """
    if not np.isfinite(logits).all():
        raise ValueError("non-finite logits")
    labels = np.asarray(labels)
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    zmax = logits.max(axis=1)
    lse = zmax + np.log(np.exp(logits - zmax[:, None]).sum(axis=1))
    picked = logits[np.arange(len(labels)), labels]
    loss = float((lse - picked).mean())
    return loss, (logits, labels)


def softmax_xent_backward(cache):
    logits, labels = cache
    n = len(labels)
    dlogits = softmax(logits)
    dlogits[np.arange(n), labels] -= 1.0
    return dlogits / n


def l2_reg(conv_weights: list[np.ndarray], gamma: float) -> float:
    """gamma * sum of squared convolution weights (biases excluded)."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    return gamma * float(sum(np.sum(w * w) for w in conv_weights))
