"""Successive-cancellation decoding over an abstract embedding space.

The engine only knows four kernel functions:

* ``embed(y, N)``: received word -> (N, d) embedding block
* ``check(e1, e2)``: check-node map on (R, d) rows
* ``bit(e1, e2, u)``: bit-node map, ``u`` is an (R,) bit vector
* ``llr(e)``: (R, d) -> (R,) log p(1)/p(0)

Wiring: rows of the embedding block are first put in bit-reversed order, after
which decoding follows the plain F^{(x)n} recursion where node halves are
combined as (first half, second half). Leaf ``i`` of that tree is ``u_i``.

Every decoder here is batched over frames: ``e`` may be (N, d) or (B, N, d).
"""

from __future__ import annotations

import numpy as np

from .._accel import use_numba
from ..nn import Tensor, clamp as t_clamp, stack as t_stack
from .transform import bit_reversal_permutation, butterfly, log2_exact

LLR_CLAMP = 30.0


class KernelFunctions:
    """Interface for E/F/G/H. Subclasses override the four maps and set ``d``."""

    d = 1

    def embed(self, y, N):
        raise NotImplementedError

    def check(self, e1, e2):
        raise NotImplementedError

    def bit(self, e1, e2, u):
        raise NotImplementedError

    def llr(self, e):
        raise NotImplementedError


def path_metric_update(pm, llr, u):
    """pm + log(1 + exp(-(2u-1) llr)), elementwise and overflow-free."""
    z = -(2.0 * np.asarray(u, dtype=np.float64) - 1.0) * np.asarray(llr, dtype=np.float64)
    return pm + np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _as_batch(e, d):
    e = np.asarray(e, dtype=np.float64)
    single = e.ndim == 2
    if single:
        e = e[None]
    if e.ndim != 3 or e.shape[2] != d:
        raise ValueError(f"embedding block must be (N, {d}) or (B, N, {d}), got {e.shape}")
    return e, single


def _trailing_zeros(i):
    return (i & -i).bit_length() - 1


def sc_decode(spec, kernel, e, backend="auto"):
    """SC decoding. Returns (u_hat, llrs) shaped like ``e`` minus the last axis.

    ``backend="auto"`` uses the kernel's compiled fast path when it provides one
    and numba is enabled; ``"numpy"`` forces the generic batched engine.
    """
    fast = getattr(kernel, "sc_decode_compiled", None)
    if backend == "numba" or (backend == "auto" and fast is not None and use_numba()):
        if fast is None:
            raise ValueError(f"{type(kernel).__name__} has no compiled SC path")
        return fast(spec, e)
    return sc_decode_numpy(spec, kernel, e)


def sc_decode_numpy(spec, kernel, e):
    d = kernel.d
    e, single = _as_batch(e, d)
    B, N, _ = e.shape
    if N != spec.N:
        raise ValueError(f"embedding has {N} rows, code length is {spec.N}")
    n = log2_exact(N)

    emb = [None] * (n + 1)
    emb[0] = e[:, bit_reversal_permutation(n)]
    left_cw = [None] * (n + 1)
    u_hat = np.zeros((B, N), dtype=np.uint8)
    llrs = np.zeros((B, N))

    for i in range(N):
        start = 1 if i == 0 else n - _trailing_zeros(i)
        for k in range(start, n + 1):
            s = N >> k
            parent = emb[k - 1]
            e1 = parent[:, :s].reshape(-1, d)
            e2 = parent[:, s:].reshape(-1, d)
            if k == start and i > 0:
                out = kernel.bit(e1, e2, left_cw[k].reshape(-1))
            else:
                out = kernel.check(e1, e2)
            emb[k] = np.asarray(out).reshape(B, s, d)
        lam = np.clip(np.asarray(kernel.llr(emb[n].reshape(B, d))).reshape(B), -LLR_CLAMP, LLR_CLAMP)
        llrs[:, i] = lam
        if spec.frozen[i]:
            bit = np.full(B, spec.frozen_values[i], dtype=np.uint8)
        else:
            bit = (lam > 0).astype(np.uint8)
        u_hat[:, i] = bit

        c = bit[:, None]
        for k in range(n, 0, -1):
            if (i >> (n - k)) & 1 == 0:
                left_cw[k] = c
                break
            c = np.concatenate([left_cw[k] ^ c, c], axis=1)

    if single:
        return u_hat[0], llrs[0]
    return u_hat, llrs


def _rank_candidates(metrics, flags):
    # stable order by (metric, flag, candidate index)
    o1 = np.argsort(flags, axis=-1, kind="stable")
    m1 = np.take_along_axis(metrics, o1, axis=-1)
    o2 = np.argsort(m1, axis=-1, kind="stable")
    return np.take_along_axis(o1, o2, axis=-1)


def scl_decode(spec, kernel, e, L, return_list=False):
    """SC list decoding without CRC; returns the surviving path of smallest metric.

    Ties in the metric are broken toward the hard decision of the current LLR,
    which makes ``L=1`` reproduce ``sc_decode`` exactly.
    With ``return_list=True`` also returns (paths, metrics), inactive slots
    carrying an infinite metric.
    """
    if L < 1:
        raise ValueError("list size must be >= 1")
    d = kernel.d
    e, single = _as_batch(e, d)
    B, N, _ = e.shape
    if N != spec.N:
        raise ValueError(f"embedding has {N} rows, code length is {spec.N}")
    n = log2_exact(N)
    rows = np.arange(B)[:, None]

    emb = [None] * (n + 1)
    emb[0] = np.repeat(e[:, None, bit_reversal_permutation(n)], L, axis=1)  # (B, L, N, d)
    left_cw = [None] * (n + 1)
    paths = np.zeros((B, L, N), dtype=np.uint8)
    metrics = np.full((B, L), np.inf)
    metrics[:, 0] = 0.0

    for i in range(N):
        start = 1 if i == 0 else n - _trailing_zeros(i)
        for k in range(start, n + 1):
            s = N >> k
            parent = emb[k - 1]
            e1 = parent[:, :, :s].reshape(-1, d)
            e2 = parent[:, :, s:].reshape(-1, d)
            if k == start and i > 0:
                out = kernel.bit(e1, e2, left_cw[k].reshape(-1))
            else:
                out = kernel.check(e1, e2)
            emb[k] = np.asarray(out).reshape(B, L, s, d)
        lam = np.clip(np.asarray(kernel.llr(emb[n].reshape(B * L, d))).reshape(B, L),
                      -LLR_CLAMP, LLR_CLAMP)

        if spec.frozen[i]:
            bits = np.full((B, L), spec.frozen_values[i], dtype=np.uint8)
            metrics = path_metric_update(metrics, lam, bits)
        else:
            cand = np.stack([path_metric_update(metrics, lam, 0),
                             path_metric_update(metrics, lam, 1)], axis=-1).reshape(B, 2 * L)
            hard = (lam > 0)
            flags = np.stack([hard, ~hard], axis=-1).reshape(B, 2 * L).astype(np.int8)
            keep = _rank_candidates(cand, flags)[:, :L]
            parent_idx = keep // 2
            bits = (keep % 2).astype(np.uint8)
            metrics = np.take_along_axis(cand, keep, axis=-1)
            paths = paths[rows, parent_idx]
            for k in range(1, n + 1):
                emb[k] = emb[k][rows, parent_idx]
                if left_cw[k] is not None:
                    left_cw[k] = left_cw[k][rows, parent_idx]
        paths[:, :, i] = bits

        c = bits[:, :, None]
        for k in range(n, 0, -1):
            if (i >> (n - k)) & 1 == 0:
                left_cw[k] = c
                break
            c = np.concatenate([left_cw[k] ^ c, c], axis=2)

    best = np.argmin(metrics, axis=1)
    u_hat = paths[np.arange(B), best]
    if single:
        u_hat = u_hat[0]
        if return_list:
            return u_hat, paths[0], metrics[0]
        return u_hat
    if return_list:
        return u_hat, paths, metrics
    return u_hat


def posteriors_teacher_forced(kernel, e, u_true):
    """All N LLRs in one breadth-first pass with the true bits fed to the bit-node map.

    ``e`` may be a numpy array or an ``nn.Tensor`` (the latter keeps the graph
    for training). Shapes: e (B, N, d) or (N, d); u_true (B, N) or (N,).
    """
    is_tensor = isinstance(e, Tensor)
    data = e.data if is_tensor else np.asarray(e, dtype=np.float64)
    single = data.ndim == 2
    if single:
        e = e.reshape(1, *data.shape) if is_tensor else data[None]
    u_true = np.asarray(u_true, dtype=np.uint8)
    if u_true.ndim == 1:
        u_true = u_true[None]
    B, N, d = (e.shape if is_tensor else e.shape)
    if u_true.shape != (B, N):
        raise ValueError(f"u_true shape {u_true.shape} does not match embedding batch {(B, N)}")
    n = log2_exact(N)

    cur = e[:, bit_reversal_permutation(n)]
    for k in range(n):
        nodes, size = 1 << k, N >> k
        half = size // 2
        pair = cur.reshape(B, nodes, 2, half, d)
        e1 = pair[:, :, 0].reshape(B * nodes * half, d)
        e2 = pair[:, :, 1].reshape(B * nodes * half, d)
        left_u = u_true.reshape(B, nodes, 2, half)[:, :, 0]
        cw = butterfly(left_u).reshape(-1)
        left = kernel.check(e1, e2).reshape(B, nodes, half, d)
        right = kernel.bit(e1, e2, cw).reshape(B, nodes, half, d)
        if is_tensor:
            cur = t_stack([left, right], axis=2).reshape(B, 2 * nodes, half, d)
        else:
            cur = np.stack([left, right], axis=2).reshape(B, 2 * nodes, half, d)
    lam = kernel.llr(cur.reshape(B * N, d)).reshape(B, N)
    lam = t_clamp(lam, -LLR_CLAMP, LLR_CLAMP) if is_tensor else np.clip(lam, -LLR_CLAMP, LLR_CLAMP)
    if single:
        return lam.reshape(N) if is_tensor else lam[0]
    return lam
