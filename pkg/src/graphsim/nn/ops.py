"""Differentiable primitives.

Every op takes and returns :class:`Tensor` objects and records a
vector-Jacobian product on the active tape. Image ops use channel-first
layout, either ``C x H x W`` or batched ``B x C x H x W``.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from ..errors import ShapeMismatch
from .tensor import Tensor, as_tensor, make_output


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _pair(a, b):
    # constants adopt the dtype of the tensor operand
    if not isinstance(a, Tensor) and isinstance(b, Tensor):
        return as_tensor(a, dtype=b.dtype), b
    a = as_tensor(a)
    return a, as_tensor(b, dtype=a.dtype if not isinstance(b, Tensor) else None)


def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    try:
        out = a.data + b.data
    except ValueError as exc:
        raise ShapeMismatch(str(exc)) from None
    return make_output(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    try:
        out = a.data - b.data
    except ValueError as exc:
        raise ShapeMismatch(str(exc)) from None
    return make_output(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    try:
        out = a.data * b.data
    except ValueError as exc:
        raise ShapeMismatch(str(exc)) from None
    return make_output(
        out,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def matmul(a, b) -> Tensor:
    """Matrix product over the last two axes, batch axes broadcast."""
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeMismatch("matmul needs operands with at least two dimensions")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeMismatch(f"inner dimensions differ: {a.shape} @ {b.shape}")
    out = np.matmul(a.data, b.data)

    def vjp(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2)) if a.requires_grad else None
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g) if b.requires_grad else None
        return (
            None if ga is None else _unbroadcast(ga, a.shape),
            None if gb is None else _unbroadcast(gb, b.shape),
        )

    return make_output(out, (a, b), vjp)


def transpose(x) -> Tensor:
    """Swap the last two axes."""
    x = as_tensor(x)
    return make_output(np.swapaxes(x.data, -1, -2), (x,), lambda g: (np.swapaxes(g, -1, -2),))


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    return make_output(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),))


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return make_output(np.where(mask, x.data, 0).astype(x.dtype, copy=False), (x,), lambda g: (g * mask,))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    s = expit(x.data)
    return make_output(s, (x,), lambda g: (g * s * (1 - s),))


def sum(x, axis=None, keepdims=False) -> Tensor:  # noqa: A001 - mirrors numpy
    x = as_tensor(x)
    out = np.sum(x.data, axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return make_output(np.asarray(out), (x,), vjp)


def mean(x, axis=None) -> Tensor:
    x = as_tensor(x)
    count = x.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    return mul(sum(x, axis=axis), 1.0 / count)


def concat(tensors, axis=-1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeMismatch(str(exc)) from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return make_output(out, tensors, lambda g: tuple(np.split(g, bounds, axis=axis)))


def _same_padding(size: int, k: int, stride: int) -> tuple[int, int, int]:
    out = math.ceil(size / stride)
    total = max((out - 1) * stride + k - size, 0)
    return out, total // 2, total - total // 2


def conv2d(x, kernels, bias, stride: int = 1) -> Tensor:
    """Cross-correlation with SAME zero padding.

    ``x``: ``C_in x H x W`` or ``B x C_in x H x W``; ``kernels``:
    ``C_out x C_in x k x k``; ``bias``: ``C_out``. Output spatial size is
    ``ceil(H / stride)``; for even kernels the extra padding row/column goes
    to the bottom/right.
    """
    x, w, b = as_tensor(x), as_tensor(kernels), as_tensor(bias)
    if stride < 1:
        raise ValueError("stride must be positive")
    single = x.ndim == 3
    xd = x.data[None] if single else x.data
    if xd.ndim != 4 or w.ndim != 4:
        raise ShapeMismatch(f"conv2d expects (B,)C,H,W input and O,C,k,k kernels, got {x.shape}, {w.shape}")
    B, C, H, W = xd.shape
    O, C2, kh, kw = w.shape
    if C != C2:
        raise ShapeMismatch(f"input has {C} channels, kernels expect {C2}")
    if b.shape != (O,):
        raise ShapeMismatch(f"bias shape {b.shape} does not match {O} output channels")
    Ho, top, bottom = _same_padding(H, kh, stride)
    Wo, left, right = _same_padding(W, kw, stride)
    xp = np.pad(xd, ((0, 0), (0, 0), (top, bottom), (left, right)))
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride][:, :, :Ho, :Wo]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(B * Ho * Wo, C * kh * kw)
    wmat = w.data.reshape(O, -1)
    out = (cols @ wmat.T + b.data).reshape(B, Ho, Wo, O).transpose(0, 3, 1, 2)
    if single:
        out = out[0]

    def vjp(g):
        g4 = g[None] if single else g
        g2 = g4.transpose(0, 2, 3, 1).reshape(-1, O)
        gw = (g2.T @ cols).reshape(w.shape) if w.requires_grad else None
        gb = g2.sum(axis=0) if b.requires_grad else None
        gx = None
        if x.requires_grad:
            dcols = (g2 @ wmat).reshape(B, Ho, Wo, C, kh, kw)
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, :, i : i + stride * Ho : stride, j : j + stride * Wo : stride] += dcols[
                        :, :, :, :, i, j
                    ].transpose(0, 3, 1, 2)
            gx = dxp[:, :, top : top + H, left : left + W]
            if single:
                gx = gx[0]
        return gx, gw, gb

    return make_output(np.ascontiguousarray(out), (x, w, b), vjp)


def maxpool2d(x, size: int) -> Tensor:
    """Non-overlapping max pooling with ceil output size.

    Edge windows may be ragged. The gradient goes to the first maximal cell
    of each window.
    """
    x = as_tensor(x)
    if size < 1:
        raise ValueError("pool size must be positive")
    single = x.ndim == 3
    xd = x.data[None] if single else x.data
    B, C, H, W = xd.shape
    Ho, Wo = math.ceil(H / size), math.ceil(W / size)
    padded = np.full((B, C, Ho * size, Wo * size), -np.inf, dtype=xd.dtype)
    padded[:, :, :H, :W] = xd
    windows = padded.reshape(B, C, Ho, size, Wo, size).transpose(0, 1, 2, 4, 3, 5).reshape(B, C, Ho, Wo, -1)
    idx = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
    if single:
        out = out[0]

    def vjp(g):
        g4 = g[None] if single else g
        gw = np.zeros_like(windows)
        np.put_along_axis(gw, idx[..., None], g4[..., None], axis=-1)
        gx = gw.reshape(B, C, Ho, Wo, size, size).transpose(0, 1, 2, 4, 3, 5).reshape(B, C, Ho * size, Wo * size)
        gx = gx[:, :, :H, :W]
        return (gx[0] if single else gx,)

    return make_output(out, (x,), vjp)


def interpolation_matrix(n: int, m: int, dtype=np.float64) -> np.ndarray:
    """``m x n`` align-corners linear interpolation weights.

    ``m == 1`` samples the first corner; ``n == 1`` replicates the single row.
    """
    if n < 1 or m < 1:
        raise ValueError("sizes must be positive")
    r = np.zeros((m, n), dtype=dtype)
    if n == 1 or m == 1:
        r[:, 0] = 1.0
        return r
    scale = (n - 1) / (m - 1)
    for i in range(m):
        src = i * scale
        lo = min(int(math.floor(src)), n - 1)
        hi = min(lo + 1, n - 1)
        frac = src - lo
        r[i, lo] += 1.0 - frac
        r[i, hi] += frac
    return r


def bilinear_resize(x, m: int) -> Tensor:
    """Resize the trailing ``n x n`` axes to ``m x m`` (align-corners)."""
    x = as_tensor(x)
    if x.ndim < 2 or x.shape[-1] != x.shape[-2]:
        raise ShapeMismatch(f"bilinear_resize expects square trailing axes, got {x.shape}")
    r = interpolation_matrix(x.shape[-1], m, dtype=x.dtype)
    out = r @ x.data @ r.T
    return make_output(out, (x,), lambda g: (r.T @ g @ r,))


def mse_loss(pred, target) -> Tensor:
    pred, target = _pair(pred, target)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"prediction shape {pred.shape} != target shape {target.shape}")
    if pred.size == 0:
        raise ShapeMismatch("mse_loss needs at least one element")
    diff = pred.data - target.data
    n = diff.size
    out = np.asarray(np.mean(diff * diff))
    return make_output(out, (pred, target), lambda g: (g * 2.0 * diff / n, -g * 2.0 * diff / n))
