"""Dense, 1-D convolution and embedding-table layers on ``Tensor``."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, _make, as_tensor


class ShapeError(ValueError):
    pass


def dense_apply(weights, bias, x, relu=False):
    """``x @ weights.T + bias`` over the last axis of ``x``, optionally rectified.

    ``weights`` is out x in, ``bias`` has length out; ``x`` may carry any number
    of leading batch axes.
    """
    weights, bias, x = as_tensor(weights), as_tensor(bias), as_tensor(x)
    if weights.ndim != 2 or bias.shape != (weights.shape[0],):
        raise ShapeError(f"weights {weights.shape} and bias {bias.shape} do not conform")
    if x.shape[-1] != weights.shape[1]:
        raise ShapeError(f"input width {x.shape[-1]} != weights in-dim {weights.shape[1]}")

    W, xd = weights.data, x.data
    out = xd @ W.T + bias.data
    if relu:
        np.maximum(out, 0.0, out=out)
    active = out > 0.0 if relu else None

    def back(g):
        if active is not None:
            g = g * active
        g2 = g.reshape(-1, g.shape[-1])
        x2 = xd.reshape(-1, xd.shape[-1])
        gx = g @ W if x.requires_grad else None
        return gx, g2.T @ x2, g2.sum(axis=0)

    return _make(out, (x, weights, bias), back)


def _im2col(x, width):
    # x: (B, N, cin) -> (B, N, width*cin), zero "same" padding
    B, N, cin = x.shape
    half = width // 2
    padded = np.zeros((B, N + 2 * half, cin))
    padded[:, half:half + N] = x
    cols = np.empty((B, N, width, cin))
    for k in range(width):
        cols[:, :, k, :] = padded[:, k:k + N]
    return cols.reshape(B, N, width * cin)


def _col2im(gcols, width, N, cin):
    B = gcols.shape[0]
    half = width // 2
    gcols = gcols.reshape(B, N, width, cin)
    gpad = np.zeros((B, N + 2 * half, cin))
    for k in range(width):
        gpad[:, k:k + N] += gcols[:, :, k, :]
    return gpad[:, half:half + N]


def conv1d_apply(kernels, x, bias=None):
    """Cross-correlation along the position axis with zero "same" padding.

    ``kernels`` is width x cin x cout with odd width; ``x`` is N x cin or
    B x N x cin. Output keeps the input length.
    """
    kernels, x = as_tensor(kernels), as_tensor(x)
    if kernels.ndim != 3:
        raise ShapeError(f"kernels must be width x cin x cout, got {kernels.shape}")
    width, cin, cout = kernels.shape
    if width % 2 == 0:
        raise ShapeError(f"kernel width must be odd, got {width}")
    if x.shape[-1] != cin:
        raise ShapeError(f"input channels {x.shape[-1]} != kernel cin {cin}")
    squeeze = x.ndim == 2
    xd = x.data[None] if squeeze else x.data
    B, N, _ = xd.shape

    cols = _im2col(xd, width)
    K2 = kernels.data.reshape(width * cin, cout)
    out = cols @ K2
    parents = [x, kernels]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (cout,):
            raise ShapeError(f"conv bias must have length {cout}")
        out = out + bias.data
        parents.append(bias)

    def back(g):
        g3 = g[None] if squeeze else g
        g2 = g3.reshape(-1, cout)
        gK = (cols.reshape(-1, width * cin).T @ g2).reshape(width, cin, cout)
        gx = None
        if x.requires_grad:
            gx = _col2im(g3 @ K2.T, width, N, cin)
            if squeeze:
                gx = gx[0]
        grads = [gx, gK]
        if bias is not None:
            grads.append(g2.sum(axis=0))
        return grads

    return _make(out[0] if squeeze else out, parents, back)


def embedding_lookup(table, index):
    """Row lookup; ``index`` may be an int or an integer array of any shape."""
    table = as_tensor(table)
    V, d = table.shape
    idx = np.asarray(index)
    if idx.size and (idx.min() < 0 or idx.max() >= V):
        raise IndexError(f"symbol id out of range [0, {V})")
    flat = idx.reshape(-1)
    onehot = np.zeros((flat.size, V))
    onehot[np.arange(flat.size), flat] = 1.0
    out = (onehot @ table.data).reshape(idx.shape + (d,))

    def back(g):
        return (onehot.T @ g.reshape(-1, d),)

    return _make(out, (table,), back)


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_dense(rng, n_in, n_out):
    return (Tensor(glorot_uniform(rng, (n_out, n_in), n_in, n_out), requires_grad=True),
            Tensor(np.zeros(n_out), requires_grad=True))
